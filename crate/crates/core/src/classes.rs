//! Slope classification of stage solution pieces and incidence structure
//! of the small-slope coefficient triples.
//!
//! Each solution piece of a form of height `H` is classified by `|G'|`:
//! steep pieces (`|G'| > H^{1-eps}`), a geometric ladder of intermediate
//! slopes, and the near-critical pieces `|G'| <= H^{(2-v)/3}` whose
//! coefficient triples drive the hardest counting estimates. The
//! near-critical triples incident to one cell of a slightly
//! super-exponential partition should always lie on an integer plane or
//! line; four affinely independent incident triples would break the
//! underlying area bound and are flagged as violations.

use crate::counting::{cross, gcd, sublevel_intervals};
use crate::error::{CoreError, Result};
use crate::funcspace::{CurveSystem, InhomFunction};
use crate::planar;
use serde::{Deserialize, Serialize};

/// Defaults for the slope classification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Exponent margin of the steep class boundary `H^{1-eps}`.
    pub eps: f64,
    /// Partition exponent margin: cells have width `~2^{-(1+eps1) t}`.
    pub eps1: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { eps: 0.1, eps1: 0.05 }
    }
}

/// Geometric exponent ladder for the intermediate class: `delta_1 = eps`,
/// `delta_{i+1} = (v+1)/3 * delta_i`, stopping once the ladder passes the
/// near-critical exponent `(v+1)/3` (where `H^{1-delta}` meets
/// `H^{(2-v)/3}`).
pub fn delta_ladder(v: f64, eps: f64) -> Vec<f64> {
    let k = (v + 1.0) / 3.0;
    let mut out = vec![eps];
    while *out.last().unwrap() < k {
        let next = out.last().unwrap() * k;
        out.push(next);
    }
    let last = out.last_mut().unwrap();
    *last = last.min(k);
    out
}

/// Width and count of one slope class.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ClassBucket {
    pub count: u64,
    pub width: f64,
}

impl ClassBucket {
    fn add(&mut self, w: f64) {
        self.count += 1;
        self.width += w;
    }
}

/// Classification of one dyadic stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSummary {
    pub t: u32,
    pub v: f64,
    pub eps: f64,
    /// Steep pieces, `|G'| > H^{1-eps}`.
    pub steep: ClassBucket,
    /// Intermediate ladder strata; stratum `i` holds
    /// `H^{1-delta_{i+1}} < |G'| <= H^{1-delta_i}`.
    pub strata: Vec<ClassBucket>,
    /// Ladder exponents (one more entry than `strata`).
    pub deltas: Vec<f64>,
    /// Near-critical pieces, `|G'| <= H^{(2-v)/3}`.
    pub critical: ClassBucket,
    /// Total width of all pieces; the class widths partition it.
    pub total_width: f64,
}

impl ClassSummary {
    pub fn class_width_sum(&self) -> f64 {
        self.steep.width
            + self.strata.iter().map(|b| b.width).sum::<f64>()
            + self.critical.width
    }
}

fn check_planar(curve: &CurveSystem, v: f64) -> Result<()> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("classification is planar (n = 2) only".into()));
    }
    if !(v > 2.0) {
        return Err(CoreError::Parameter(format!("v must be > 2, got {v}")));
    }
    Ok(())
}

/// Classify every solution piece of the dyadic stage `t` by its slope.
/// Pieces straddling a class boundary are split at the boundary crossing,
/// so the class widths partition the total width exactly.
pub fn classify(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    t: u32,
    opts: ClassifyOptions,
) -> Result<ClassSummary> {
    check_planar(curve, v)?;
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(CoreError::Parameter(format!("eps must be in (0,1), got {}", opts.eps)));
    }
    if t < 2 {
        return Err(CoreError::Parameter(format!("t must be >= 2, got {t}")));
    }
    let deltas = delta_ladder(v, opts.eps);
    let (dlo, dhi) = curve.domain();
    let mut summary = ClassSummary {
        t,
        v,
        eps: opts.eps,
        steep: ClassBucket::default(),
        strata: vec![ClassBucket::default(); deltas.len() - 1],
        deltas: deltas.clone(),
        critical: ClassBucket::default(),
        total_width: 0.0,
    };
    let (h_lo, h_hi) = (1i64 << (t - 1), (1i64 << t) - 1);
    for (a1, a2) in planar::pairs_in_window(h_lo, h_hi) {
        let h = a1.abs().max(a2.abs());
        let hf = h as f64;
        let thr = hf.powf(-v);
        // descending slope boundaries: steep | strata ... | critical
        let mut bounds: Vec<f64> = deltas.iter().map(|d| hf.powf(1.0 - d)).collect();
        let crit = hf.powf((2.0 - v) / 3.0);
        *bounds.last_mut().unwrap() = crit;
        let dg = |x: f64| a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x);
        planar::sweep_pair(curve, lambda, a1, a2, thr, dlo, dhi, None, &mut |p| {
            summary.total_width += p.hi - p.lo;
            for (blo, bhi, class) in split_by_slope(&dg, p.lo, p.hi, &bounds) {
                let bucket = match class {
                    0 => &mut summary.steep,
                    c if c <= summary.strata.len() => &mut summary.strata[c - 1],
                    _ => &mut summary.critical,
                };
                bucket.add(bhi - blo);
            }
        });
    }
    Ok(summary)
}

/// Split `[lo, hi]` into maximal subintervals of constant slope class.
/// Class `c` means `bounds[c] < |g'| <= bounds[c-1]` (class 0: above
/// `bounds[0]`, class `bounds.len()`: at or below the last bound).
fn split_by_slope(
    dg: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    bounds: &[f64],
) -> Vec<(f64, f64, usize)> {
    let class_of = |s: f64| bounds.iter().position(|&b| s > b).unwrap_or(bounds.len());
    let (clo, chi) = (class_of(dg(lo).abs()), class_of(dg(hi).abs()));
    // |g'| is monotone on a solution piece except across a critical point
    // of g'; probe the midpoint, subdivide there when it falls outside
    // the endpoint classes, then split each monotone run at its boundary
    // crossings
    let mid = 0.5 * (lo + hi);
    let cmid = class_of(dg(mid).abs());
    if clo == chi && cmid == clo {
        return vec![(lo, hi, clo)];
    }
    let mut out = Vec::new();
    let runs: Vec<(f64, usize, f64, usize)> =
        if cmid > clo.max(chi) || cmid < clo.min(chi) {
            vec![(lo, clo, mid, cmid), (mid, cmid, hi, chi)]
        } else {
            vec![(lo, clo, hi, chi)]
        };
    for (rlo, rclo, rhi, rchi) in runs {
        let mut cur = rlo;
        let mut ccur = rclo;
        while ccur != rchi {
            let step = if ccur < rchi { 1 } else { -1 };
            // boundary between class ccur and ccur+step
            let b = bounds[if step > 0 { ccur } else { ccur - 1 }];
            let f = |x: f64| dg(x).abs() - b;
            let x = bisect(&f, cur, rhi);
            out.push((cur, x, ccur));
            cur = x;
            ccur = (ccur as i64 + step) as usize;
        }
        out.push((cur, rhi, ccur));
    }
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One near-critical solution segment: a maximal subinterval where both
/// `|G| < H^{-v}` and `|G'| <= H^{(2-v)/3}` hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSegment {
    pub a0: i64,
    pub a1: i64,
    pub a2: i64,
    pub lo: f64,
    pub hi: f64,
    pub min_abs_slope: f64,
}

impl CriticalSegment {
    pub fn triple(&self) -> [i64; 3] {
        [self.a0, self.a1, self.a2]
    }
}

/// Near-critical segments of the dyadic stage `t`, found by restricting
/// the piece sweep to the small-slope region of each pair.
pub fn critical_segments(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    t: u32,
) -> Result<Vec<CriticalSegment>> {
    check_planar(curve, v)?;
    if t < 2 {
        return Err(CoreError::Parameter(format!("t must be >= 2, got {t}")));
    }
    let (dlo, dhi) = curve.domain();
    let mut out = Vec::new();
    let (h_lo, h_hi) = (1i64 << (t - 1), (1i64 << t) - 1);
    for (a1, a2) in planar::pairs_in_window(h_lo, h_hi) {
        let h = a1.abs().max(a2.abs());
        let hf = h as f64;
        let thr = hf.powf(-v);
        let cap = hf.powf((2.0 - v) / 3.0);
        let dg = |x: f64| a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x);
        // the small-slope region is at most a few intervals around the
        // critical points of g; scan coarsely when curvature certifies
        // a single critical point
        let scan = match curve.curvature_bounds() {
            Some((c1, _)) if (a2.unsigned_abs() as f64) * c1 > lambda.sup(2) => 8,
            _ => 128,
        };
        for (rlo, rhi) in sublevel_intervals(&dg, dlo, dhi, cap, scan) {
            planar::sweep_pair(curve, lambda, a1, a2, thr, rlo, rhi, None, &mut |p| {
                let s = dg(p.lo).abs().min(dg(p.hi).abs());
                out.push(CriticalSegment {
                    a0: p.a0,
                    a1,
                    a2,
                    lo: p.lo,
                    hi: p.hi,
                    min_abs_slope: s,
                });
            });
        }
    }
    Ok(out)
}

/// Cell partition of the domain with near-critical segment counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub t: u32,
    pub c: f64,
    pub cell_count: u64,
    pub cell_width: f64,
    /// Crowding threshold `threshold_constant * 2^{t(3/2 - c)}`.
    pub threshold: f64,
    /// Nonempty cells: (cell index, incident segment count).
    pub occupied: Vec<(u64, u64)>,
    /// Cells whose count reaches the threshold.
    pub crowded: Vec<u64>,
    pub segment_count: u64,
}

/// Partition the domain into `ceil(2^{ct})` equal cells, `c = 1 + eps1`,
/// and count the near-critical segments incident to each cell. Crowded
/// cells (count at or above `threshold_constant * 2^{t(3/2-c)}`) are the
/// ones whose incidence structure is analyzed.
pub fn class_ii_partition(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    v: f64,
    t: u32,
    eps1: f64,
    threshold_constant: f64,
) -> Result<PartitionReport> {
    check_planar(curve, v)?;
    if !(eps1 > 0.0 && eps1 < 0.5) {
        return Err(CoreError::Parameter(format!("eps1 must be in (0, 0.5), got {eps1}")));
    }
    if v <= 2.0 + 3.0 * eps1 {
        return Err(CoreError::Parameter(format!(
            "v = {v} too small: the crowded-cell analysis needs v > 2 + 3 eps1 = {}",
            2.0 + 3.0 * eps1
        )));
    }
    let c = 1.0 + eps1;
    let cell_count = 2f64.powf(c * t as f64).ceil() as u64;
    let (dlo, dhi) = curve.domain();
    let cell_width = (dhi - dlo) / cell_count as f64;
    let segments = critical_segments(curve, lambda, v, t)?;
    let mut counts: std::collections::BTreeMap<u64, u64> = std::collections::BTreeMap::new();
    for seg in &segments {
        let c0 = (((seg.lo - dlo) / cell_width).floor() as i64).clamp(0, cell_count as i64 - 1);
        let c1 = (((seg.hi - dlo) / cell_width).floor() as i64).clamp(0, cell_count as i64 - 1);
        for cell in c0..=c1 {
            *counts.entry(cell as u64).or_insert(0) += 1;
        }
    }
    let threshold = threshold_constant * 2f64.powf(t as f64 * (1.5 - c));
    let crowded = counts
        .iter()
        .filter(|&(_, &n)| (n as f64) >= threshold)
        .map(|(&cell, _)| cell)
        .collect();
    Ok(PartitionReport {
        t,
        c,
        cell_count,
        cell_width,
        threshold,
        occupied: counts.into_iter().collect(),
        crowded,
        segment_count: segments.len() as u64,
    })
}

/// Exact incidence structure of a set of integer coefficient triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncidenceFit {
    /// One triple (or copies of it).
    Point,
    /// All triples on an integer line: primitive direction vector.
    Line { direction: [i64; 3] },
    /// All triples on an integer plane through them: gcd-normalized
    /// normal vector and offset `n . p = d`.
    Plane { normal: [i64; 3], d: i64 },
    /// Four affinely independent triples: no common plane.
    FullRank,
}

/// Incidence analysis of one crowded cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub cell: u64,
    pub triples: Vec<[i64; 3]>,
    pub fit: IncidenceFit,
    /// Line case: whether the direction's constant coordinate satisfies
    /// `|beta_0| <= 2^{t(c - 1/2)}`.
    pub line_bound_ok: Option<bool>,
    /// True when four affinely independent triples are incident: this
    /// should never happen.
    pub violation: bool,
}

/// Affine incidence of the distinct triples: point, line, plane, or a
/// genuine violation (affine rank 3).
pub fn fit_triples(triples: &[[i64; 3]]) -> IncidenceFit {
    let mut distinct: Vec<[i64; 3]> = triples.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() <= 1 {
        return IncidenceFit::Point;
    }
    let base = distinct[0];
    let diffs: Vec<Vec<i64>> = distinct[1..]
        .iter()
        .map(|p| vec![p[0] - base[0], p[1] - base[1], p[2] - base[2]])
        .collect();
    match crate::construct::rank_of(&diffs) {
        1 => {
            let d = diffs[0].clone();
            let g = gcd(gcd(d[0].abs(), d[1].abs()), d[2].abs()).max(1);
            let mut dir = [d[0] / g, d[1] / g, d[2] / g];
            if dir.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                dir = [-dir[0], -dir[1], -dir[2]];
            }
            IncidenceFit::Line { direction: dir }
        }
        2 => {
            // normal from the first two independent differences
            let d0 = [diffs[0][0], diffs[0][1], diffs[0][2]];
            let mut normal = [0i64; 3];
            for d in &diffs[1..] {
                let n = cross(d0, [d[0], d[1], d[2]]);
                if n != [0, 0, 0] {
                    normal = n;
                    break;
                }
            }
            let g = gcd(gcd(normal[0].abs(), normal[1].abs()), normal[2].abs()).max(1);
            let mut n = [normal[0] / g, normal[1] / g, normal[2] / g];
            if n.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                n = [-n[0], -n[1], -n[2]];
            }
            let d = n[0] * base[0] + n[1] * base[1] + n[2] * base[2];
            IncidenceFit::Plane { normal: n, d }
        }
        3 => IncidenceFit::FullRank,
        _ => IncidenceFit::Point,
    }
}

/// Analyze every crowded cell of a partition: collect the incident
/// triples, fit them exactly, and flag violations.
pub fn incidence_analysis(
    report: &PartitionReport,
    segments: &[CriticalSegment],
    curve: &CurveSystem,
) -> Result<Vec<IncidenceReport>> {
    let (dlo, _) = curve.domain();
    let mut out = Vec::new();
    for &cell in &report.crowded {
        let clo = dlo + cell as f64 * report.cell_width;
        let chi = clo + report.cell_width;
        let triples: Vec<[i64; 3]> = segments
            .iter()
            .filter(|s| s.hi >= clo && s.lo <= chi)
            .map(|s| s.triple())
            .collect();
        let fit = fit_triples(&triples);
        let line_bound = 2f64.powf(report.t as f64 * (report.c - 0.5));
        let line_bound_ok = match &fit {
            IncidenceFit::Line { direction } => Some((direction[0].abs() as f64) <= line_bound),
            _ => None,
        };
        let violation = fit == IncidenceFit::FullRank;
        out.push(IncidenceReport { cell, triples, fit, line_bound_ok, violation });
    }
    Ok(out)
}
