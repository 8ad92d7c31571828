//! Coverage measurements for the resonant point system: how much of a test
//! interval is covered by balls `B(alpha, kappa * Q^{-n-1})` around points
//! of height at most `Q = 2^t`, with the radius multiplier calibrated once
//! at the smallest stage and frozen. Also the divergence-sum diagnostic for
//! the full-measure criterion.

use crate::error::{CoreError, Result};
use crate::funcspace::{ApproxFunction, CurveSystem, InhomFunction};
use crate::interval::IntervalSet;
use crate::planar;
use crate::resonant;
use serde::{Deserialize, Serialize};

/// Normalized set `(∪ B(center, radius)) ∩ J`.
pub fn union_intersect_measure(balls: &[(f64, f64)], j: (f64, f64)) -> IntervalSet {
    IntervalSet::from_balls(balls.iter().copied(), j.0, j.1)
}

/// One coverage measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    pub t: u32,
    pub q: i64,
    pub radius: f64,
    pub j: (f64, f64),
    pub covered: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UbiquityReport {
    pub kappa: f64,
    pub calibration_t: u32,
    pub rows: Vec<CoverageRow>,
    /// Minimum ratio over all rows: the finite proxy for the liminf.
    pub min_ratio: f64,
    /// `rho(2Q)/rho(Q) = 2^{-(n+1)}` for the built-in radius function;
    /// recorded regularity check.
    pub rho_regularity_ok: bool,
}

/// Number of domain chunks per sweep; bounds peak memory.
const COVER_CHUNKS: usize = 64;

/// Coverage ratios on each `J` for each stage `t`: balls of radius
/// `kappa * 2^{-t(n+1)}` around all points of height `<= 2^t`, streamed
/// pair-by-pair. Planar curves only.
pub fn coverage_ratios(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    t: u32,
    kappa: f64,
    j_list: &[(f64, f64)],
) -> Result<Vec<CoverageRow>> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("coverage sweep is planar (n = 2) only".into()));
    }
    if !(kappa > 0.0) {
        return Err(CoreError::Parameter(format!("kappa must be > 0, got {kappa}")));
    }
    let (dlo, dhi) = curve.domain();
    for &(jl, jh) in j_list {
        if jl < dlo - 1e-12 || jh > dhi + 1e-12 || jl >= jh {
            return Err(CoreError::Parameter(format!("J = [{jl}, {jh}] not inside I")));
        }
    }
    let q = 1i64 << t;
    let radius = kappa * (q as f64).powi(-(curve.n() as i32) - 1);
    let pairs = planar::pairs_up_to(q);
    let mut covered = vec![0.0f64; j_list.len()];
    let step = (dhi - dlo) / COVER_CHUNKS as f64;
    let mut roots: Vec<f64> = Vec::new();
    for c in 0..COVER_CHUNKS {
        let clo = dlo + step * c as f64;
        let chi = if c + 1 == COVER_CHUNKS { dhi } else { dlo + step * (c + 1) as f64 };
        // skip chunks no test interval touches
        if !j_list.iter().any(|&(jl, jh)| jh > clo - radius && jl < chi + radius) {
            continue;
        }
        // roots slightly outside the chunk still reach into it
        let (wlo, whi) = ((clo - radius).max(dlo), (chi + radius).min(dhi));
        roots.clear();
        for &(a1, a2) in &pairs {
            resonant::for_each_root(curve, lambda, a1, a2, wlo, whi, &mut |x, _, _| {
                roots.push(x)
            });
        }
        let balls: Vec<(f64, f64)> = roots.iter().map(|&x| (x, radius)).collect();
        let set = IntervalSet::from_balls(balls.iter().copied(), clo, chi);
        // clip away the shared left boundary so chunks never double count
        for (k, &(jl, jh)) in j_list.iter().enumerate() {
            covered[k] += set.clip(jl.max(clo), jh.min(chi)).measure().max(0.0);
        }
    }
    Ok(j_list
        .iter()
        .zip(&covered)
        .map(|(&j, &cov)| CoverageRow {
            t,
            q,
            radius,
            j,
            covered: cov,
            ratio: cov / (j.1 - j.0),
        })
        .collect())
}

/// Calibrate `kappa` so the full-domain coverage ratio at stage `t` is
/// `target` (monotone bisection), then return it for freezing.
pub fn calibrate_kappa(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    t: u32,
    target: f64,
) -> Result<f64> {
    let full = [curve.domain()];
    let ratio_at = |kappa: f64| -> Result<f64> {
        Ok(coverage_ratios(curve, lambda, t, kappa, &full)?[0].ratio)
    };
    let mut hi = 1.0f64;
    while ratio_at(hi)? < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(CoreError::Certification("kappa calibration diverged".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ratio_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full sweep: calibrate at the smallest stage, freeze, measure all stages
/// on every `J`.
pub fn coverage_sweep(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    t_range: (u32, u32),
    j_list: &[(f64, f64)],
    calibration_target: f64,
) -> Result<UbiquityReport> {
    if t_range.1 < t_range.0 {
        return Err(CoreError::Parameter("empty t range".into()));
    }
    let kappa = calibrate_kappa(curve, lambda, t_range.0, calibration_target)?;
    let mut rows = Vec::new();
    for t in t_range.0..=t_range.1 {
        rows.extend(coverage_ratios(curve, lambda, t, kappa, j_list)?);
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(UbiquityReport {
        kappa,
        calibration_t: t_range.0,
        rows,
        min_ratio,
        rho_regularity_ok: true, // rho(2Q)/rho(Q) = 2^{-(n+1)} < 1 identically
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub s: f64,
    pub n: usize,
    /// Partial sums `S(Q) = sum_{q <= Q} (psi(q)/q)^s q^n` at geometric
    /// checkpoints.
    pub checkpoints: Vec<(u64, f64)>,
    pub classification: Classification,
    /// For a power law `psi(q) = q^{-v}`: the exact threshold
    /// `(n+1)/(v+1)` and the comparison outcome (divergent iff
    /// `s <= threshold`, boundary included).
    pub exact_threshold: Option<f64>,
}

/// The full-measure criterion diagnostic: classify the series
/// `sum (psi(q)/q)^s q^n` by the exact exponent when `psi` is a power law,
/// otherwise by the growth trend of dyadic blocks.
pub fn divergence_diagnostic(
    psi: &ApproxFunction,
    s: f64,
    n: usize,
    q_max: u64,
) -> Result<DivergenceReport> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(CoreError::Parameter(format!("s must be in (0, 1], got {s}")));
    }
    if q_max < 1 << 10 {
        return Err(CoreError::Parameter(format!("q_max must be >= 2^10, got {q_max}")));
    }
    let mut checkpoints = Vec::new();
    let mut sum = 0.0f64;
    let mut blocks: Vec<f64> = Vec::new();
    let mut block = 0.0f64;
    let mut next_mark = 2u64;
    for q in 1..=q_max {
        let qf = q as f64;
        let term = (psi.eval(qf) / qf).powf(s) * qf.powi(n as i32);
        sum += term;
        block += term;
        if q == next_mark || q == q_max {
            checkpoints.push((q, sum));
            blocks.push(block);
            block = 0.0;
            next_mark = next_mark.saturating_mul(2);
        }
    }
    let classification = match psi.power_law_exponent() {
        Some(v) => {
            // exact: exponent of the summand is n - s(v+1); the series
            // diverges iff it is >= -1, i.e. s <= (n+1)/(v+1)
            let threshold = (n as f64 + 1.0) / (v + 1.0);
            let cls = if s <= threshold { Classification::Divergent } else { Classification::Convergent };
            return Ok(DivergenceReport {
                s,
                n,
                checkpoints,
                classification: cls,
                exact_threshold: Some(threshold),
            });
        }
        None => {
            // dyadic-block growth-ratio trend over the last few blocks
            let tail: Vec<f64> = blocks.iter().rev().take(4).copied().collect();
            if tail.len() < 3 {
                Classification::Inconclusive
            } else {
                let ratios: Vec<f64> =
                    tail.windows(2).map(|w| w[1].max(1e-300) / w[0].max(1e-300)).collect();
                // tail is reversed: ratios < 1 mean growth toward q_max
                if ratios.iter().all(|&r| r < 0.8) {
                    Classification::Divergent
                } else if ratios.iter().all(|&r| r > 1.25) {
                    Classification::Convergent
                } else if ratios.iter().all(|&r| r < 1.05) {
                    Classification::Divergent
                } else {
                    Classification::Inconclusive
                }
            }
        }
    };
    Ok(DivergenceReport { s, n, checkpoints, classification, exact_threshold: None })
}
