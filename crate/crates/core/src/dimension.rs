//! Finite-stage realization of the planar approximation set and its
//! box-counting dimension against the target `3/(v+1)`.
//!
//! A dyadic stage `t` is the union over forms of height `2^{t-1} <= H < 2^t`
//! of the solution sets `{x : |a_0 + a_1 x + a_2 f(x) + lambda(x)| < H^{-v}}`.
//! The limsup set itself is not computable; the box-count proxy matches the
//! counting scale to the stage scale (forms of height about
//! `eps^{-1/(v+1)}` produce solution intervals of width about `eps`) and
//! keeps only cells that coarser stages also cover.

use crate::error::{CoreError, Result};
use crate::forms::IntegerForm;
use crate::funcspace::{CurveSystem, InhomFunction};
use crate::interval::IntervalSet;
use crate::planar;
use serde::{Deserialize, Serialize};

/// Resolution (log2 cells) of stage occupancy bitmaps.
pub const OCCUPANCY_BITS: u32 = 14;

/// Exact solution set of one form at exponent `v`.
pub fn solution_intervals(
    form: &IntegerForm,
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
) -> Result<IntervalSet> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("stage machinery is planar (n = 2) only".into()));
    }
    let h = form.height();
    if h < 1 {
        return Err(CoreError::Parameter("form height must be >= 1".into()));
    }
    if !(v > 2.0) {
        return Err(CoreError::Parameter(format!("v must be > 2, got {v}")));
    }
    let thr = (h as f64).powf(-v);
    let (lo, hi) = curve.domain();
    let mut ivs = Vec::new();
    planar::sweep_pair(curve, lambda, form.coeff(1), form.coeff(2), thr, lo, hi, None, &mut |p| {
        if p.a0 == form.a0() {
            ivs.push((p.lo, p.hi));
        }
    });
    Ok(IntervalSet::from_intervals(ivs))
}

/// Occupancy bitmap over a dyadic grid on the domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Occupancy {
    pub bits_log2: u32,
    words: Vec<u64>,
    lo: f64,
    len: f64,
}

impl Occupancy {
    pub fn new(bits_log2: u32, lo: f64, len: f64) -> Self {
        let cells = 1usize << bits_log2;
        Self { bits_log2, words: vec![0; cells.div_ceil(64)], lo, len }
    }

    pub fn cells(&self) -> usize {
        1 << self.bits_log2
    }

    pub fn mark_interval(&mut self, lo: f64, hi: f64) {
        if hi < lo {
            return;
        }
        let cells = self.cells() as f64;
        let c0 = (((lo - self.lo) / self.len * cells).floor() as i64).clamp(0, self.cells() as i64 - 1);
        let c1 = (((hi - self.lo) / self.len * cells).floor() as i64).clamp(0, self.cells() as i64 - 1);
        for c in c0..=c1 {
            self.words[(c as usize) >> 6] |= 1u64 << (c & 63);
        }
    }

    pub fn get(&self, cell: usize) -> bool {
        self.words[cell >> 6] >> (cell & 63) & 1 == 1
    }

    pub fn count_set(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Whether any fine cell inside coarse cell `c` (grid of `1 << coarse`
    /// cells) is set.
    pub fn coarse_hit(&self, coarse: u32, c: usize) -> bool {
        let shift = self.bits_log2 - coarse;
        let (lo, hi) = (c << shift, (c + 1) << shift);
        (lo..hi).any(|f| self.get(f))
    }
}

/// Streamed summary of one dyadic stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub t: u32,
    pub v: f64,
    pub piece_count: u64,
    /// Sum of raw piece widths (pieces may overlap; >= union measure).
    pub width_sum: f64,
    pub union_measure: f64,
    pub union_count: usize,
    /// `sum |d|^s` over pieces for each requested `s`.
    pub svol: Vec<(f64, f64)>,
    pub occupancy: Occupancy,
    /// Full union set; kept only when requested (memory grows with `t`).
    pub union: Option<IntervalSet>,
}

/// Upper estimate of the number of solution pieces of the stage, used for
/// the budget check.
pub fn stage_piece_estimate(curve: &CurveSystem, lambda: &InhomFunction, t: u32) -> u128 {
    let h_hi = 1i64 << t;
    let pairs = (2 * h_hi as u128 + 1).pow(2);
    let range = 2.0 * h_hi as f64 * (1.0 + curve.sup_coordinate(2)) + lambda.sup(0) + 2.0;
    pairs * (range.ceil() as u128 + 1)
}

/// Build the dyadic stage `2^{t-1} <= H(F) < 2^t` by streaming pairs.
pub fn build_stage(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    t: u32,
    s_grid: &[f64],
    store_union: bool,
    budget: u128,
) -> Result<StageSummary> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("stage machinery is planar (n = 2) only".into()));
    }
    if t < 2 {
        return Err(CoreError::Parameter(format!("t must be >= 2, got {t}")));
    }
    if !(v > 2.0) {
        return Err(CoreError::Parameter(format!("v must be > 2, got {v}")));
    }
    let requested = stage_piece_estimate(curve, lambda, t);
    if requested > budget {
        return Err(CoreError::Budget { requested, budget });
    }
    let (dlo, dhi) = curve.domain();
    let mut occupancy = Occupancy::new(OCCUPANCY_BITS, dlo, dhi - dlo);
    let mut piece_count = 0u64;
    let mut width_sum = 0.0f64;
    let mut svol: Vec<(f64, f64)> = s_grid.iter().map(|&s| (s, 0.0)).collect();
    let mut union_acc = UnionAccumulator::new();
    let (h_lo, h_hi) = (1i64 << (t - 1), (1i64 << t) - 1);
    for (a1, a2) in planar::pairs_in_window(h_lo, h_hi) {
        let h = a1.abs().max(a2.abs());
        let thr = (h as f64).powf(-v);
        planar::sweep_pair(curve, lambda, a1, a2, thr, dlo, dhi, None, &mut |p| {
            piece_count += 1;
            let w = p.hi - p.lo;
            width_sum += w;
            if w > 0.0 {
                for (s, acc) in svol.iter_mut() {
                    *acc += w.powf(*s);
                }
            }
            occupancy.mark_interval(p.lo, p.hi);
            union_acc.push(p.lo, p.hi);
        });
    }
    let union = union_acc.finish();
    Ok(StageSummary {
        t,
        v,
        piece_count,
        width_sum,
        union_measure: union.measure(),
        union_count: union.count(),
        svol,
        occupancy,
        union: store_union.then_some(union),
    })
}

/// Incremental union builder with bounded peak memory.
struct UnionAccumulator {
    set: IntervalSet,
    buf: Vec<(f64, f64)>,
}

const UNION_BUF: usize = 4_000_000;

impl UnionAccumulator {
    fn new() -> Self {
        Self { set: IntervalSet::empty(), buf: Vec::new() }
    }

    fn push(&mut self, lo: f64, hi: f64) {
        self.buf.push((lo, hi));
        if self.buf.len() >= UNION_BUF {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let batch = IntervalSet::from_intervals(std::mem::take(&mut self.buf));
        self.set = self.set.union(&batch);
    }

    fn finish(mut self) -> IntervalSet {
        self.flush();
        self.set
    }
}

/// Box-dimension estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub v: f64,
    /// Per scale: (log2(1/eps), height window [H_lo, H_hi], cell count).
    pub scales: Vec<(u32, i64, i64, u64)>,
    /// Scales that entered the regression (unsaturated, nonzero).
    pub fit_scales: Vec<u32>,
    pub slope: f64,
    pub residual: f64,
    pub target: f64,
    pub lower_target: f64,
    /// Radius multiplier for the matched height window.
    pub kappa: f64,
    /// Survivor requirement: cells must meet at least this many coarser
    /// stages (capped by availability).
    pub survivor_m: usize,
    pub zero_counts: bool,
}

/// Knobs for the box-count proxy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoxCountOptions {
    /// Matched height cutoff is `H <= kappa * eps^{-1/(v+1)}`. A value
    /// `<= 0` auto-calibrates kappa so that the finest scale occupies
    /// about a quarter of its cells.
    pub kappa: f64,
    /// Required coarser-stage coverage count.
    pub survivor_m: usize,
    /// Coarsest stage considered.
    pub t_min: u32,
    /// Scales with `N > sat_fraction * 2^k` are too saturated for the
    /// collision correction and are excluded from the regression.
    pub sat_fraction: f64,
}

impl Default for BoxCountOptions {
    fn default() -> Self {
        Self { kappa: 0.0, survivor_m: 2, t_min: 2, sat_fraction: 0.6 }
    }
}

/// Occupancy ratio targeted at the finest scale when kappa is
/// auto-calibrated. Dense targets (higher dimension) need a fuller grid
/// before the height range reaches its cubic growth regime.
pub fn kappa_target_ratio(v: f64) -> f64 {
    let sigma = 3.0 / (v + 1.0);
    (0.25 + 1.5 * (sigma - 0.75).max(0.0)).min(0.45)
}

/// Pick kappa so that the finest-scale window occupies about
/// `kappa_target_ratio(v)` of its cells: log-bisection of the monotone
/// occupancy count.
fn calibrate_box_kappa(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    k_max: u32,
) -> f64 {
    let eps = 2f64.powi(-(k_max as i32));
    let target = kappa_target_ratio(v) * 2f64.powi(k_max as i32);
    let ratio_at = |kappa: f64| {
        let h_max = (kappa * eps.powf(-1.0 / (v + 1.0))).max(1.0);
        window_occupancy(curve, lambda, v, h_max, k_max).count_set() as f64
    };
    let (mut lo, mut hi) = (0.125f64, 8.0f64);
    if ratio_at(lo) >= target {
        return lo;
    }
    if ratio_at(hi) <= target {
        return hi;
    }
    for _ in 0..14 {
        let mid = (lo * hi).sqrt();
        if ratio_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Occupancy at scale `2^-bits` of the solution pieces of all forms with
/// `H <= h_max`, each piece clipped to the scale width around its center.
/// Counting cells this way records where resonant points of the matched
/// height range sit, without letting the wide pieces of low forms flood
/// whole subintervals.
///
/// A fractional `h_max` includes a deterministic prefix of the next
/// height shell sized so that the pair count interpolates the cubic
/// growth law; integer cutoffs would otherwise move in unit steps and
/// put a staircase into the scale sweep.
fn window_occupancy(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    h_max: f64,
    bits: u32,
) -> Occupancy {
    let (dlo, dhi) = curve.domain();
    let mut occ = Occupancy::new(bits, dlo, dhi - dlo);
    let eps = (dhi - dlo) / (1u64 << bits) as f64;
    let h_full = h_max.floor().max(1.0) as i64;
    let mut sweep = |a1: i64, a2: i64| {
        if a1 == 0 && a2 == 0 {
            return;
        }
        let h = a1.abs().max(a2.abs());
        let thr = (h as f64).powf(-v);
        planar::sweep_pair(curve, lambda, a1, a2, thr, dlo, dhi, None, &mut |p| {
            let c = 0.5 * (p.lo + p.hi);
            occ.mark_interval(p.lo.max(c - 0.5 * eps), p.hi.min(c + 0.5 * eps));
        });
    };
    for (a1, a2) in planar::pairs_up_to(h_full) {
        sweep(a1, a2);
    }
    let frac = h_max - h_full as f64;
    if frac > 0.0 {
        let shell = planar::pairs_in_window(h_full + 1, h_full + 1);
        let cube = |x: f64| x * x * x;
        let f = (cube(h_max) - cube(h_full as f64))
            / (cube(h_full as f64 + 1.0) - cube(h_full as f64));
        let take = (f * shell.len() as f64).round() as usize;
        for &(a1, a2) in shell.iter().take(take) {
            sweep(a1, a2);
        }
    }
    occ
}

/// Box-counting dimension of the stage proxy across dyadic scales
/// `eps = 2^{-k}` for `k` in `scale_range`, compared against `3/(v+1)`.
pub fn box_dimension(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    scale_range: (u32, u32),
    opts: BoxCountOptions,
) -> Result<DimensionEstimate> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("stage machinery is planar (n = 2) only".into()));
    }
    if !(v > 2.0) {
        return Err(CoreError::Parameter(format!("v must be > 2, got {v}")));
    }
    if scale_range.1 < scale_range.0 + 2 {
        return Err(CoreError::Parameter("need at least 3 scales for the regression".into()));
    }
    if scale_range.1 > OCCUPANCY_BITS {
        return Err(CoreError::Parameter(format!(
            "finest scale 2^-{} below the occupancy resolution 2^-{OCCUPANCY_BITS}",
            scale_range.1
        )));
    }
    let kappa = if opts.kappa > 0.0 {
        opts.kappa
    } else {
        calibrate_box_kappa(curve, lambda, v, scale_range.1)
    };
    // Fixed survivor mask: fine cells meeting at least m of the three
    // coarse stage unions starting at t_min. The same mask applies at
    // every scale, so it thins the counts without tilting the slope.
    let survivor_stages = 3u32;
    let coarse: Vec<Occupancy> = (opts.t_min..opts.t_min + survivor_stages)
        .map(|t| build_stage(curve, lambda, v, t, &[], false, u128::MAX).map(|s| s.occupancy))
        .collect::<Result<_>>()?;
    let need = opts.survivor_m.min(coarse.len());
    let mut scales = Vec::new();
    let mut zero_counts = false;
    for k in scale_range.0..=scale_range.1 {
        let eps = 2f64.powi(-(k as i32));
        let h_max = (kappa * eps.powf(-1.0 / (v + 1.0))).max(1.0);
        let occ = window_occupancy(curve, lambda, v, h_max, k);
        let mut count = 0u64;
        for c in 0..(1usize << k) {
            if !occ.get(c) {
                continue;
            }
            let hits = coarse
                .iter()
                .filter(|o| {
                    if o.bits_log2 >= k {
                        o.coarse_hit(k, c)
                    } else {
                        o.get(c >> (k - o.bits_log2))
                    }
                })
                .count();
            if hits >= need {
                count += 1;
            }
        }
        if count == 0 {
            zero_counts = true;
        }
        scales.push((k, 1, h_max.ceil() as i64, count));
    }
    // least squares of log2 N against k over unsaturated scales; near
    // the cell budget the count is capped, not informative
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .filter(|&&(k, _, _, n)| n > 0 && (n as f64) <= opts.sat_fraction * 2f64.powi(k as i32))
        .map(|&(k, _, _, n)| (k as f64, (n as f64).log2()))
        .collect();
    if pts.len() < 3 {
        return Err(CoreError::Parameter(format!(
            "only {} unsaturated scales; extend the scale range or lower kappa",
            pts.len()
        )));
    }
    let fit_scales: Vec<u32> = pts.iter().map(|p| p.0 as u32).collect();
    let (slope, residual) = linfit(&pts);
    Ok(DimensionEstimate {
        v,
        scales,
        fit_scales,
        slope,
        residual,
        target: 3.0 / (v + 1.0),
        lower_target: 3.0 / (v + 1.0),
        kappa,
        survivor_m: opts.survivor_m,
        zero_counts,
    })
}

/// Least squares fit `y = a + b x`; returns (b, rms residual).
pub fn linfit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    let rms = (pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / n).sqrt();
    (b, rms)
}

/// Critical exponent of the cover sums: smallest `s` on the grid whose
/// per-stage sums `sum |d|^s` trend downward across the available stages,
/// refined by interpolating the trend slope to zero.
pub fn svolume_critical_exponent(stages: &[StageSummary], s_grid: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    if stages.len() < 3 {
        return Err(CoreError::Parameter(format!(
            "need at least 3 stages, got {}",
            stages.len()
        )));
    }
    // trend slope of log2(sum) vs t per s
    let mut trends: Vec<(f64, f64)> = Vec::new();
    for (i, &s) in s_grid.iter().enumerate() {
        let pts: Vec<(f64, f64)> = stages
            .iter()
            .map(|st| {
                let (gs, acc) = st.svol[i];
                debug_assert_eq!(gs, s);
                (st.t as f64, acc.max(1e-300).log2())
            })
            .collect();
        trends.push((s, linfit(&pts).0));
    }
    // interpolate the first sign change of the trend
    for w in trends.windows(2) {
        let (s0, m0) = w[0];
        let (s1, m1) = w[1];
        if m0 >= 0.0 && m1 < 0.0 {
            let frac = m0 / (m0 - m1);
            return Ok((s0 + frac * (s1 - s0), trends));
        }
    }
    // no crossing: report the boundary
    let s_star = if trends.first().map(|&(_, m)| m < 0.0).unwrap_or(false) {
        trends.first().unwrap().0
    } else {
        trends.last().unwrap().0
    };
    Ok((s_star, trends))
}
