//! Brute-force counting and measure oracles: the small-measure set
//! `Phi(Q, delta)`, the planar solution count `N(delta)` against
//! `H^{1+delta}`, sublevel-measure bounds for functions with a certified
//! n-th derivative, the first/second-derivative dichotomy, and the minimal
//! triangle area on integer planes.

use crate::error::{CoreError, Result};
use crate::funcspace::{CurveSystem, InhomFunction};
use crate::interval::IntervalSet;
use crate::planar;
use serde::{Deserialize, Serialize};

/// Number of domain chunks used by the streaming measure path; bounds the
/// peak interval count per chunk.
const PHI_CHUNKS: usize = 64;

/// `Phi(Q, delta)`: the set of `x in J` where some nonzero integer form of
/// height `<= Q` satisfies `|F(x)| < delta * Q^{-n}` (homogeneous: no
/// lambda). Returns the exact interval set; intended for moderate `Q` where
/// the set fits in memory.
pub fn phi_set(curve: &CurveSystem, q: i64, delta: f64, j: (f64, f64)) -> Result<IntervalSet> {
    check_phi_args(curve, q, delta, j)?;
    let (_, set) = phi_sweep(curve, q, delta, j, true)?;
    Ok(set.expect("interval set requested"))
}

/// Measure of `Phi(Q, delta) ∩ J` computed chunk-by-chunk without keeping
/// the full interval set; returns (measure, merged interval count).
pub fn phi_measure(curve: &CurveSystem, q: i64, delta: f64, j: (f64, f64)) -> Result<(f64, usize)> {
    check_phi_args(curve, q, delta, j)?;
    let (measure, _) = phi_sweep(curve, q, delta, j, false)?;
    Ok(measure)
}

/// Membership test `x in Phi(Q, delta)` by direct evaluation: some pair
/// `(a_1, a_2)` brings `a_1 x + a_2 f(x)` within `delta * Q^{-n}` of an
/// integer.
pub fn phi_contains(curve: &CurveSystem, q: i64, delta: f64, x: f64) -> Result<bool> {
    check_phi_args(curve, q, delta, curve.domain())?;
    let thr = delta * (q as f64).powi(-(curve.n() as i32));
    let fx = curve.f2(0, x);
    for (a1, a2) in planar::pairs_up_to(q) {
        let h = a1 as f64 * x + a2 as f64 * fx;
        let dist = (h - h.round()).abs();
        if dist < thr {
            // nearest integer m gives a_0 = -m; exclude the zero form
            if a1 != 0 || a2 != 0 || h.round() != 0.0 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn check_phi_args(curve: &CurveSystem, q: i64, delta: f64, j: (f64, f64)) -> Result<()> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("Phi sweep is planar (n = 2) only".into()));
    }
    if q < 1 {
        return Err(CoreError::Parameter(format!("Q must be >= 1, got {q}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(CoreError::Parameter(format!("delta must be in (0, 1], got {delta}")));
    }
    let (lo, hi) = curve.domain();
    if j.0 < lo - 1e-12 || j.1 > hi + 1e-12 || j.0 >= j.1 {
        return Err(CoreError::Parameter(format!("J = [{}, {}] not inside I", j.0, j.1)));
    }
    Ok(())
}

type PhiResult = ((f64, usize), Option<IntervalSet>);

fn phi_sweep(
    curve: &CurveSystem,
    q: i64,
    delta: f64,
    j: (f64, f64),
    keep_set: bool,
) -> Result<PhiResult> {
    let zero = InhomFunction::zero();
    let thr = delta * (q as f64).powi(-(curve.n() as i32));
    let pairs = planar::pairs_up_to(q);
    let chunks = if keep_set { 1 } else { PHI_CHUNKS };
    let mut total = 0.0;
    let mut count = 0usize;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let step = (j.1 - j.0) / chunks as f64;
    for c in 0..chunks {
        let clo = j.0 + step * c as f64;
        let chi = if c + 1 == chunks { j.1 } else { j.0 + step * (c + 1) as f64 };
        let mut ivs: Vec<(f64, f64)> = Vec::new();
        for &(a1, a2) in &pairs {
            planar::sweep_pair(curve, &zero, a1, a2, thr, clo, chi, None, &mut |p| {
                // the zero form (a_1 = a_2 = 0, a_0 = 0) is not in F_n
                if a1 != 0 || a2 != 0 || p.a0 != 0 {
                    ivs.push((p.lo, p.hi));
                }
            });
        }
        let set = IntervalSet::from_intervals(ivs);
        // half-open chunks: drop mass up to the previous chunk boundary by
        // clipping; the boundary point itself has measure zero
        let set = set.clip(clo, chi);
        total += set.measure();
        count += set.count();
        if keep_set {
            kept.extend(set.intervals().iter().copied());
        }
    }
    let set = keep_set.then(|| IntervalSet::from_intervals(kept));
    Ok(((total, count), set))
}

/// Exact per-parameter record of a planar solution count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountReport {
    pub h: i64,
    pub delta: f64,
    pub v: f64,
    /// Triples certainly admitting a solution (boundary-uncertain pieces
    /// excluded).
    pub lower: u64,
    /// Triples possibly admitting a solution (boundary-uncertain pieces
    /// included).
    pub upper: u64,
    /// `lower / H^{1+delta}`.
    pub ratio_lower: f64,
    /// `upper / H^{1+delta}`.
    pub ratio_upper: f64,
}

/// Boundary guard separating the certain and uncertain counts.
const COUNT_GUARD: f64 = 1e-10;

/// Count triples `(a_0, a_1, a_2)` with `max(|a_0|, |a_1|, |a_2|) <= H`
/// (all three coefficients bounded, unlike the form height) admitting a
/// solution `x in I` of `|G(x)| <= H^{-v}` and `|G'(x)| <= H^delta`.
pub fn count_n(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h: i64,
    delta: f64,
    v: f64,
) -> Result<CountReport> {
    count_over_pairs(curve, lambda, h, delta, v, planar::pairs_up_to(h))
}

/// Same thresholds, but only triples whose pair height
/// `max(|a_1|, |a_2|)` equals `H` exactly. This is the regime the
/// `H^{1+delta}` normalization describes: the cumulative count over all
/// lower heights is dominated by the many low-height pairs once the slope
/// cap is loose (it grows like `H^{2+delta}` at `delta = 1`), while the
/// exact-height count stays bounded after normalization.
pub fn count_n_exact_height(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h: i64,
    delta: f64,
    v: f64,
) -> Result<CountReport> {
    count_over_pairs(curve, lambda, h, delta, v, planar::pairs_in_window(h, h))
}

fn count_over_pairs(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h: i64,
    delta: f64,
    v: f64,
    pairs: Vec<(i64, i64)>,
) -> Result<CountReport> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("count is planar (n = 2) only".into()));
    }
    if h < 2 || !(0.0..=1.0).contains(&delta) || !(v > 0.0) {
        return Err(CoreError::Parameter(format!(
            "need H >= 2, 0 <= delta <= 1, v > 0; got H={h} delta={delta} v={v}"
        )));
    }
    let (lo, hi) = curve.domain();
    let hf = h as f64;
    let thr = hf.powf(-v);
    let slope_cap = hf.powf(delta);

    let mut lower = 0u64;
    let mut upper = 0u64;
    for (a1, a2) in pairs {
        let hx = |x: f64| a1 as f64 * x + a2 as f64 * curve.f2(0, x) + lambda.eval(0, x);
        let dh = |x: f64| a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x);
        // region P where |G'| <= H^delta; independent of a_0
        let monotone_slope = match curve.curvature_bounds() {
            Some((c1, _)) => (a2.unsigned_abs() as f64) * c1 > lambda.sup(2),
            None => false,
        };
        let scan = if monotone_slope { 8 } else { 128 };
        let region = sublevel_intervals(&dh, lo, hi, slope_cap, scan);
        if region.is_empty() {
            continue;
        }
        // candidate a_0 values with certainty tags; certain overrides
        let mut cands: Vec<(i64, bool)> = Vec::new();
        for &(u, w) in &region {
            let breaks = planar::monotone_breakpoints(curve, lambda, a1, a2, u, w);
            for win in breaks.windows(2) {
                let (r1, r2) = (hx(win[0]), hx(win[1]));
                let (rmin, rmax) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                let m_lo = (rmin - thr - COUNT_GUARD).ceil() as i64;
                let m_hi = (rmax + thr + COUNT_GUARD).floor() as i64;
                for m in m_lo..=m_hi {
                    let a0 = -m;
                    if a0.abs() > h || (a0 == 0 && a1 == 0 && a2 == 0) {
                        continue;
                    }
                    let mf = m as f64;
                    let dist = if mf < rmin {
                        rmin - mf
                    } else if mf > rmax {
                        mf - rmax
                    } else {
                        0.0
                    };
                    if dist <= thr - COUNT_GUARD {
                        cands.push((a0, true));
                    } else if dist <= thr + COUNT_GUARD {
                        cands.push((a0, false));
                    }
                }
            }
        }
        cands.sort_unstable_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
        cands.dedup_by_key(|c| c.0);
        for (_, certain) in cands {
            upper += 1;
            if certain {
                lower += 1;
            }
        }
    }
    let norm = hf.powf(1.0 + delta);
    Ok(CountReport {
        h,
        delta,
        v,
        lower,
        upper,
        ratio_lower: lower as f64 / norm,
        ratio_upper: upper as f64 / norm,
    })
}

/// Intervals where `|g(x)| <= nu` on `[lo, hi]`: grid scan of `|g| - nu`
/// with bisection-refined boundary crossings.
pub fn sublevel_intervals(
    g: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    nu: f64,
    scan: usize,
) -> Vec<(f64, f64)> {
    let d = |x: f64| g(x).abs() - nu;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_x = lo;
    let mut prev_d = d(lo);
    if prev_d <= 0.0 {
        open = Some(lo);
    }
    for k in 1..=scan {
        let x = if k == scan { hi } else { lo + (hi - lo) * k as f64 / scan as f64 };
        let dx = d(x);
        if (prev_d > 0.0) != (dx > 0.0) {
            let b = refine_crossing(&d, prev_x, x);
            if dx <= 0.0 {
                open = Some(b);
            } else if let Some(s) = open.take() {
                out.push((s, b));
            }
        }
        prev_x = x;
        prev_d = dx;
    }
    if let Some(s) = open {
        out.push((s, hi));
    }
    out
}

fn refine_crossing(d: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut dlo = d(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = d(mid);
        if dm == 0.0 {
            return mid;
        }
        if (dm > 0.0) == (dlo > 0.0) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sublevel-measure check for a function with `|phi^(n)| > delta` certified
/// on a grid: returns (measure of `{|phi| < nu}` on J, `(nu/delta)^{1/n}`,
/// implied constant measure/bound).
pub fn sublevel_measure_check(
    phi: &impl Fn(usize, f64) -> f64,
    nu: f64,
    delta: f64,
    n: usize,
    j: (f64, f64),
) -> Result<(f64, f64, f64)> {
    if !(nu > 0.0) || !(delta > 0.0) || n == 0 {
        return Err(CoreError::Parameter(format!("need nu, delta > 0 and n >= 1; got {nu}, {delta}, {n}")));
    }
    // certify the n-th derivative bound on a grid
    const GRID: usize = 512;
    for k in 0..=GRID {
        let x = j.0 + (j.1 - j.0) * k as f64 / GRID as f64;
        let d = phi(n, x).abs();
        if d <= delta {
            return Err(CoreError::Certification(format!(
                "|phi^({n})({x})| = {d} <= delta = {delta}"
            )));
        }
    }
    let g = |x: f64| phi(0, x);
    let ivs = sublevel_intervals(&g, j.0, j.1, nu, 1024);
    let measure: f64 = ivs.iter().map(|(a, b)| b - a).sum();
    let bound = (nu / delta).powf(1.0 / n as f64);
    Ok((measure, bound, measure / bound))
}

/// Empirical first/second-derivative dichotomy over sampled forms: reports
/// the largest `C_1` such that `max(|G'|, |G''|) > C_1 * H` held at every
/// sampled point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub h_range: (i64, i64),
    pub empirical_c1: f64,
    /// (H, a_1, a_2, x) attaining the minimum of `max(|G'|, |G''|) / H`.
    pub argmin: (i64, i64, i64, f64),
    pub samples: usize,
}

/// Sweep forms of height exactly `H` for `H` doubling through `h_range`,
/// sampling `max(|G'|, |G''|) / H` on a grid of subintervals of the given
/// length. `a_0` never enters the derivatives, so pairs suffice.
pub fn dichotomy_check(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h_range: (i64, i64),
    subinterval_len: f64,
) -> Result<DichotomyReport> {
    if curve.n() != 2 {
        return Err(CoreError::Parameter("dichotomy check is planar only".into()));
    }
    if h_range.0 < 1 || h_range.1 < h_range.0 || !(subinterval_len > 0.0) {
        return Err(CoreError::Parameter("bad dichotomy parameters".into()));
    }
    let (lo, hi) = curve.domain();
    let mut best = f64::INFINITY;
    let mut argmin = (0i64, 0i64, 0i64, 0.0f64);
    let mut samples = 0usize;
    let mut h = h_range.0;
    while h <= h_range.1 {
        for (a1, a2) in planar::pairs_in_window(h, h) {
            let pts = ((hi - lo) / subinterval_len).ceil() as usize * 4;
            for k in 0..=pts {
                let x = lo + (hi - lo) * k as f64 / pts as f64;
                let d1 = (a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x)).abs();
                let d2 = (a2 as f64 * curve.f2(2, x) + lambda.eval(2, x)).abs();
                let ratio = d1.max(d2) / h as f64;
                samples += 1;
                if ratio < best {
                    best = ratio;
                    argmin = (h, a1, a2, x);
                }
            }
        }
        h *= 2;
    }
    Ok(DichotomyReport { h_range, empirical_c1: best, argmin, samples })
}

/// Result of the minimal-triangle search on an integer plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleWitness {
    pub area: f64,
    /// `sqrt(A^2 + B^2 + C^2) / 2`.
    pub bound: f64,
    pub points: [[i64; 3]; 3],
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn cross(u: [i64; 3], v: [i64; 3]) -> [i64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm2(u: [i64; 3]) -> i64 {
    u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
}

/// Basis of the rank-2 lattice `{u in Z^3 : A u_0 + B u_1 + C u_2 = 0}`,
/// Lagrange-reduced so both vectors are as short as possible.
fn plane_lattice_basis(a: i64, b: i64, c: i64) -> ([i64; 3], [i64; 3]) {
    let (mut u, mut v) = if b == 0 && c == 0 {
        ([0, 1, 0], [0, 0, 1])
    } else {
        let g = gcd(b, c);
        let u = [0, c / g, -b / g];
        // Bp + Cq = g, then (g, -Ap, -Aq) solves A g + B(-Ap) + C(-Aq)
        // = g(A - A(Bp + Cq)/g) ... direct: A*g + B*(-A p) + C*(-A q)
        // = A(g - (Bp + Cq)) = 0
        let (p, q) = bezout(b, c);
        let v = [g, -a * p, -a * q];
        (u, v)
    };
    // Lagrange reduction in the induced Euclidean norm
    loop {
        if norm2(u) > norm2(v) {
            std::mem::swap(&mut u, &mut v);
        }
        let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let mu = ((2 * dot + norm2(u)).div_euclid(2 * norm2(u))) as i64;
        if mu == 0 {
            break;
        }
        for i in 0..3 {
            v[i] -= mu * u[i];
        }
        if norm2(v) >= norm2(u) {
            break;
        }
    }
    (u, v)
}

/// (p, q) with `b p + c q = gcd(b, c)`.
fn bezout(b: i64, c: i64) -> (i64, i64) {
    if c == 0 {
        return (b.signum(), 0);
    }
    let (p, q) = bezout(c, b % c);
    (q, p - (b / c) * q)
}

/// Minimal triangle area over integer points of `Ax + By + Cz = D` inside
/// `[-R, R]^3`, with the `sqrt(A^2+B^2+C^2)/2` lower bound and a minimizing
/// witness. Exhaustive in effect: any lattice triangle has area
/// `k * covolume / 2` for an integer `k >= 1`, so the reduced-basis
/// triangle is the exact minimum whenever it fits in the box; otherwise a
/// direct search over the boxed points is used.
pub fn min_triangle_area(a: i64, b: i64, c: i64, d: i64, box_radius: i64) -> Result<TriangleWitness> {
    if gcd(gcd(a, b), c) != 1 {
        return Err(CoreError::Parameter(format!("gcd({a}, {b}, {c}) != 1")));
    }
    if box_radius < 1 {
        return Err(CoreError::BoxTooSmall { radius: box_radius });
    }
    let bound = ((a * a + b * b + c * c) as f64).sqrt() / 2.0;
    let points = plane_points_in_box(a, b, c, d, box_radius);
    if points.len() < 3 {
        return Err(CoreError::BoxTooSmall { radius: box_radius });
    }
    let (u, v) = plane_lattice_basis(a, b, c);
    // anchor the reduced-basis triangle inside the box if possible
    for &p in &points {
        for (du, dv) in [(u, v), (u, [-v[0], -v[1], -v[2]]), ([-u[0], -u[1], -u[2]], v)] {
            let p2 = [p[0] + du[0], p[1] + du[1], p[2] + du[2]];
            let p3 = [p[0] + dv[0], p[1] + dv[1], p[2] + dv[2]];
            if in_box(p2, box_radius) && in_box(p3, box_radius) {
                let cr = cross(du, dv);
                let area = (norm2(cr) as f64).sqrt() / 2.0;
                return Ok(TriangleWitness { area, bound, points: [p, p2, p3] });
            }
        }
    }
    // box too tight for the reduced basis: exhaustive search
    let mut best: Option<TriangleWitness> = None;
    for i in 0..points.len() {
        for jj in (i + 1)..points.len() {
            let du = sub(points[jj], points[i]);
            for k in (jj + 1)..points.len() {
                let dv = sub(points[k], points[i]);
                let cr = cross(du, dv);
                let n2 = norm2(cr);
                if n2 == 0 {
                    continue;
                }
                let area = (n2 as f64).sqrt() / 2.0;
                if best.as_ref().is_none_or(|w| area < w.area) {
                    best = Some(TriangleWitness {
                        area,
                        bound,
                        points: [points[i], points[jj], points[k]],
                    });
                }
            }
        }
    }
    best.ok_or(CoreError::BoxTooSmall { radius: box_radius })
}

fn sub(p: [i64; 3], q: [i64; 3]) -> [i64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

fn in_box(p: [i64; 3], r: i64) -> bool {
    p.iter().all(|&c| c.abs() <= r)
}

/// Integer points of the plane within `[-R, R]^3`.
pub fn plane_points_in_box(a: i64, b: i64, c: i64, d: i64, r: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    // solve for the coordinate with the largest coefficient
    let coeffs = [a, b, c];
    let idx = (0..3).max_by_key(|&i| coeffs[i].abs()).unwrap();
    let (i1, i2) = match idx {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for s in -r..=r {
        for t in -r..=r {
            let rest = d - coeffs[i1] * s - coeffs[i2] * t;
            if coeffs[idx] == 0 {
                if rest == 0 {
                    // free coordinate
                    for w in -r..=r {
                        let mut p = [0i64; 3];
                        p[i1] = s;
                        p[i2] = t;
                        p[idx] = w;
                        out.push(p);
                    }
                }
                continue;
            }
            if rest % coeffs[idx] == 0 {
                let w = rest / coeffs[idx];
                if w.abs() <= r {
                    let mut p = [0i64; 3];
                    p[i1] = s;
                    p[i2] = t;
                    p[idx] = w;
                    out.push(p);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::enumerate_forms;

    fn parabola() -> CurveSystem {
        CurveSystem::parabola((0.0, 1.0)).unwrap()
    }

    #[test]
    fn phi_q1_matches_form_union_oracle() {
        // independent oracle: union over the 62 literal forms via dense
        // sampling of the defining inequality
        let curve = parabola();
        let zero = InhomFunction::zero();
        let set = phi_set(&curve, 1, 1.0, (0.0, 1.0)).unwrap();
        assert!(set.measure() <= 1.0 + 1e-12);
        let forms: Vec<_> = enumerate_forms(&curve, &zero, 1, u128::MAX).unwrap().collect();
        let grid = 20_000;
        let mut hits = 0usize;
        for k in 0..=grid {
            let x = k as f64 / grid as f64;
            let inside = forms.iter().any(|f| f.deriv(&curve, 0, x).abs() < 1.0);
            if inside {
                hits += 1;
            }
            // skip points within a grid cell of a set boundary
            let margin = 2.0 / grid as f64;
            let near_boundary = set
                .intervals()
                .iter()
                .any(|&(l, r)| (x - l).abs() < margin || (x - r).abs() < margin);
            if !near_boundary {
                assert_eq!(set.contains(x), inside, "x = {x}");
            }
        }
        // sampled measure agrees with the exact one
        let sampled = hits as f64 / (grid + 1) as f64;
        assert!((sampled - set.measure()).abs() < 5e-3);
    }

    #[test]
    fn phi_measure_matches_set_and_shrinks_with_delta() {
        let curve = parabola();
        let set = phi_set(&curve, 4, 0.5, (0.0, 1.0)).unwrap();
        let (m, _) = phi_measure(&curve, 4, 0.5, (0.0, 1.0)).unwrap();
        assert!((m - set.measure()).abs() < 1e-12);
        // monotone in delta
        let (m_small, _) = phi_measure(&curve, 4, 0.05, (0.0, 1.0)).unwrap();
        assert!(m_small <= m + 1e-12);
        // delta -> 0: measure -> 0
        let (m_tiny, _) = phi_measure(&curve, 4, 1e-6, (0.0, 1.0)).unwrap();
        assert!(m_tiny < 1e-2, "measure {m_tiny}");
    }

    #[test]
    fn phi_membership_agrees_with_set() {
        let curve = parabola();
        let set = phi_set(&curve, 3, 0.3, (0.0, 1.0)).unwrap();
        for k in 0..200 {
            let x = (k as f64 + 0.5) / 200.0;
            let margin = 1e-9;
            let near = set
                .intervals()
                .iter()
                .any(|&(l, r)| (x - l).abs() < margin || (x - r).abs() < margin);
            if !near {
                assert_eq!(phi_contains(&curve, 3, 0.3, x).unwrap(), set.contains(x));
            }
        }
    }

    #[test]
    fn count_small_h_matches_exhaustive_oracle() {
        // oracle: all (2H+1)^3 - 1 triples, dense-grid existence check
        let curve = parabola();
        let zero = InhomFunction::zero();
        let (h, delta, v) = (2i64, 0.0, 3.0);
        let thr = (h as f64).powf(-v);
        let cap = (h as f64).powf(delta);
        let mut oracle = 0u64;
        for a0 in -h..=h {
            for a1 in -h..=h {
                for a2 in -h..=h {
                    if a0 == 0 && a1 == 0 && a2 == 0 {
                        continue;
                    }
                    let grid = 400_000;
                    let hit = (0..=grid).any(|k| {
                        let x = k as f64 / grid as f64;
                        let g = a0 as f64 + a1 as f64 * x + a2 as f64 * x * x;
                        let dg = a1 as f64 + 2.0 * a2 as f64 * x;
                        g.abs() <= thr && dg.abs() <= cap
                    });
                    if hit {
                        oracle += 1;
                    }
                }
            }
        }
        let report = count_n(&curve, &zero, h, delta, v).unwrap();
        assert!(report.lower <= report.upper);
        // dense sampling can only under-count; the certified window must
        // bracket the oracle
        assert!(
            report.lower <= oracle && oracle <= report.upper,
            "oracle {oracle} outside [{}, {}]",
            report.lower,
            report.upper
        );
        // at this scale the window is tight
        assert!(report.upper - report.lower <= 6);
    }

    #[test]
    fn count_exact_height_matches_exhaustive_oracle() {
        // same dense-grid oracle, restricted to pair height exactly H
        let curve = parabola();
        let zero = InhomFunction::zero();
        let (h, delta, v) = (4i64, 1.0, 3.0);
        let thr = (h as f64).powf(-v);
        let cap = (h as f64).powf(delta);
        let mut oracle = 0u64;
        for a0 in -h..=h {
            for a1 in -h..=h {
                for a2 in -h..=h {
                    if a1.abs().max(a2.abs()) != h {
                        continue;
                    }
                    let grid = 400_000;
                    let hit = (0..=grid).any(|k| {
                        let x = k as f64 / grid as f64;
                        let g = a0 as f64 + a1 as f64 * x + a2 as f64 * x * x;
                        let dg = a1 as f64 + 2.0 * a2 as f64 * x;
                        g.abs() <= thr && dg.abs() <= cap
                    });
                    if hit {
                        oracle += 1;
                    }
                }
            }
        }
        let report = count_n_exact_height(&curve, &zero, h, delta, v).unwrap();
        assert!(
            report.lower <= oracle && oracle <= report.upper,
            "oracle {oracle} outside [{}, {}]",
            report.lower,
            report.upper
        );
        // the exact-height pairs are a subset of the full pair set, so
        // this count can never exceed the cumulative one
        let full = count_n(&curve, &zero, h, delta, v).unwrap();
        assert!(report.upper <= full.upper);
    }

    #[test]
    fn count_exact_height_ratio_bounded_at_loose_slope_cap() {
        // with the slope cap at H the cumulative count grows like H^3,
        // driven by low-height pairs; the exact-height count stays within
        // the H^{1+delta} normalization
        let curve = parabola();
        let zero = InhomFunction::zero();
        let ratios: Vec<f64> = [8i64, 16, 32]
            .iter()
            .map(|&h| count_n_exact_height(&curve, &zero, h, 1.0, 3.0).unwrap().ratio_upper)
            .collect();
        let (min, max) = (
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0f64, f64::max),
        );
        assert!(max <= 1.5 * min, "exact-height ratios {ratios:?} not bounded");
    }

    #[test]
    fn count_symmetric_under_negation() {
        // lambda = 0: solutions of (a0,a1,a2) and -(a0,a1,a2) coincide, so
        // the count is even apart from nothing (no self-negated nonzero
        // triple exists)
        let curve = parabola();
        let zero = InhomFunction::zero();
        let r = count_n(&curve, &zero, 3, 0.5, 3.0).unwrap();
        assert_eq!(r.lower % 2, 0);
        assert_eq!(r.upper % 2, 0);
    }

    #[test]
    fn count_monotone_in_delta() {
        let curve = parabola();
        let zero = InhomFunction::zero();
        let r0 = count_n(&curve, &zero, 4, 0.0, 3.0).unwrap();
        let r1 = count_n(&curve, &zero, 4, 1.0, 3.0).unwrap();
        assert!(r0.upper <= r1.upper);
        assert!(r0.lower <= r1.lower);
    }

    #[test]
    fn sublevel_examples() {
        // phi = x, n = 1: |{|x| < 0.1} ∩ [0,1]| = 0.1, c = 0.5
        let lin = |o: usize, x: f64| if o == 0 { x } else { 1.0 };
        let (m, b, c) = sublevel_measure_check(&lin, 0.1, 0.5, 1, (0.0, 1.0)).unwrap();
        assert!((m - 0.1).abs() < 1e-9);
        assert!((b - 0.2).abs() < 1e-12);
        assert!((c - 0.5).abs() < 1e-8);

        // phi = x^2, n = 2, phi'' = 2 > 1: |{|x| < 0.1}| on [-1,1] = 0.2
        let quad = |o: usize, x: f64| match o {
            0 => x * x,
            1 => 2.0 * x,
            _ => 2.0,
        };
        let (m, b, c) = sublevel_measure_check(&quad, 0.01, 1.0, 2, (-1.0, 1.0)).unwrap();
        assert!((m - 0.2).abs() < 1e-9);
        assert!((b - 0.1).abs() < 1e-12);
        assert!((c - 2.0).abs() < 1e-7);

        // derivative bound failure is an error
        assert!(sublevel_measure_check(&quad, 0.01, 3.0, 2, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn sublevel_random_quadratics_bounded_c() {
        // implied constants stay bounded over a sample of integer
        // quadratics with second derivative bounded away from zero
        for a in 1..=5i64 {
            for b in -3..=3i64 {
                let phi = move |o: usize, x: f64| match o {
                    0 => a as f64 * x * x + b as f64 * x,
                    1 => 2.0 * a as f64 * x + b as f64,
                    _ => 2.0 * a as f64,
                };
                let (m, bound, c) =
                    sublevel_measure_check(&phi, 0.01, 1.0, 2, (0.0, 1.0)).unwrap();
                assert!(m <= 1.0);
                assert!(c <= 4.0, "c = {c} (m = {m}, bound = {bound}) at a={a} b={b}");
            }
        }
    }

    #[test]
    fn dichotomy_boundary_forms() {
        let curve = parabola();
        let cubic = InhomFunction::power(3, (0.0, 1.0));
        // a2 = H, a1 = 0: |G''| = |2H + 6x| >= 2H
        let h = 16i64;
        let x = 0.4;
        let d2 = (h as f64 * curve.f2(2, x) + cubic.eval(2, x)).abs();
        assert!(d2 >= 2.0 * h as f64);
        // a1 = H, a2 = 0: |G'| = |H + 3x^2| >= H
        let d1 = (h as f64 + cubic.eval(1, x)).abs();
        assert!(d1 >= h as f64);
        // full sweep keeps max(|G'|, |G''|)/H bounded below
        let rep = dichotomy_check(&curve, &cubic, (16, 64), 0.1).unwrap();
        assert!(rep.empirical_c1 > 0.0, "C1 = {}", rep.empirical_c1);
        assert!(rep.samples > 1000);
    }

    #[test]
    fn triangle_bound_attained_on_reference_planes() {
        // x + y + z = 0: bound sqrt(3)/2, attained
        let w = min_triangle_area(1, 1, 1, 0, 2).unwrap();
        assert!((w.area - 3.0f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((w.bound - 3.0f64.sqrt() / 2.0).abs() < 1e-12);
        // z = 0: bound 1/2, attained
        let w = min_triangle_area(0, 0, 1, 0, 1).unwrap();
        assert!((w.area - 0.5).abs() < 1e-12);
        // 2x + 3y + 6z = 1: bound 7/2
        let w = min_triangle_area(2, 3, 6, 1, 6).unwrap();
        assert!(w.area >= 3.5 - 1e-9);
        assert!((w.bound - 3.5).abs() < 1e-12);
    }

    #[test]
    fn triangle_witness_validates() {
        let w = min_triangle_area(2, 3, 6, 1, 6).unwrap();
        for p in &w.points {
            assert_eq!(2 * p[0] + 3 * p[1] + 6 * p[2], 1);
        }
        let u = sub(w.points[1], w.points[0]);
        let v = sub(w.points[2], w.points[0]);
        let area = (norm2(cross(u, v)) as f64).sqrt() / 2.0;
        assert!((area - w.area).abs() < 1e-12);
        assert!(w.area + 1e-9 >= w.bound);
    }

    #[test]
    fn triangle_errors() {
        assert!(matches!(min_triangle_area(2, 2, 2, 0, 3), Err(CoreError::Parameter(_))));
        // plane 9x + 10y + 8z = 5 has points, but a radius-0 box holds < 3
        assert!(matches!(
            min_triangle_area(9, 10, 8, 5, 0),
            Err(CoreError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn lattice_basis_spans_plane() {
        for (a, b, c) in [(1, 1, 1), (2, 3, 6), (0, 0, 1), (5, -7, 3), (1, 0, 0)] {
            let (u, v) = plane_lattice_basis(a, b, c);
            assert_eq!(a * u[0] + b * u[1] + c * u[2], 0);
            assert_eq!(a * v[0] + b * v[1] + c * v[2], 0);
            // basis covolume equals the plane normal length
            let n2 = norm2(cross(u, v));
            assert_eq!(n2, a * a + b * b + c * c, "non-basis for ({a},{b},{c})");
        }
    }
}
