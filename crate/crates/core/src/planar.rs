//! Streaming solution-interval engine for planar forms.
//!
//! Every planar measurement in this crate reduces to the same question: for a
//! coefficient pair `(a_1, a_2)` and `h(x) = a_1 x + a_2 f(x) + lambda(x)`,
//! which integers `m` does `h` approach within `thr` on `I`, and on which
//! x-intervals? Writing `m = -a_0` this enumerates the nonempty solution sets
//! `{x : |a_0 + a_1 x + a_2 f(x) + lambda(x)| < thr}` of every form sharing
//! the pair, without materializing the forms. The walk over `m` follows the
//! monotone pieces of `h`, so interval endpoints come from certified
//! monotone root solves.

use crate::funcspace::{CurveSystem, InhomFunction};

/// Monotone pieces of `h(x) = a_1 x + a_2 f(x) + lambda(x)` on `[lo, hi]`:
/// returns breakpoints `lo = b_0 < b_1 < ... < b_k = hi` with `h'` of constant
/// sign on each `(b_i, b_{i+1})`.
pub fn monotone_breakpoints(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    a1: i64,
    a2: i64,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let dh = |x: f64| a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x);
    let mut breaks = vec![lo];

    // If h'' = a_2 f'' + lambda'' has constant sign, h' is monotone and has
    // at most one root. This covers the vast majority of pairs when the
    // curvature is bounded away from zero.
    let convexity_certain = match curve.curvature_bounds() {
        Some((c1, _)) => (a2.unsigned_abs() as f64) * c1 > lambda.sup(2),
        None => false,
    };

    if convexity_certain {
        let (dlo, dhi) = (dh(lo), dh(hi));
        if dlo == 0.0 || dhi == 0.0 || (dlo > 0.0) != (dhi > 0.0) {
            breaks.push(bisect_root(&dh, lo, hi));
        }
    } else {
        // grid scan for sign changes of h'
        const SCAN: usize = 64;
        let step = (hi - lo) / SCAN as f64;
        let mut x_prev = lo;
        let mut d_prev = dh(lo);
        for k in 1..=SCAN {
            let x = if k == SCAN { hi } else { lo + step * k as f64 };
            let d = dh(x);
            if d_prev != 0.0 && d != 0.0 && (d_prev > 0.0) != (d > 0.0) {
                breaks.push(bisect_root(&dh, x_prev, x));
            }
            x_prev = x;
            d_prev = d;
        }
    }
    breaks.push(hi);
    breaks.dedup_by(|a, b| a == b);
    breaks
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `h(x) = target` on a monotone piece `[lo, hi]` with
/// `h(lo) = hlo`, `h(hi) = hhi` bracketing the target. Newton from the warm
/// start with bisection safeguard.
fn solve_monotone(
    h: &impl Fn(f64) -> f64,
    dh: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    increasing: bool,
    target: f64,
    warm: f64,
) -> f64 {
    let mut x = if warm > lo && warm < hi { warm } else { 0.5 * (lo + hi) };
    for _ in 0..60 {
        let val = h(x) - target;
        if val == 0.0 {
            return x;
        }
        if (val > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let d = dh(x);
        let step = x - val / d;
        let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if next == x || hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return x;
        }
        x = next;
    }
    x
}

/// One nonempty solution interval produced by [`sweep_pair`].
#[derive(Debug, Clone, Copy)]
pub struct SolutionPiece {
    /// Constant coefficient of the witness form.
    pub a0: i64,
    pub lo: f64,
    pub hi: f64,
    /// Derivative `h'` at the located crossing (0 when the crossing is a
    /// boundary sliver without an interior root).
    pub slope: f64,
}

/// Enumerate the solution intervals `{x in [lo, hi] : |h(x) + a_0| < thr}`
/// over all integers `a_0` (optionally clamped to `|a_0| <= a0_max`), visiting
/// each maximal interval per monotone piece in deterministic order.
#[allow(clippy::too_many_arguments)]
pub fn sweep_pair(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    a1: i64,
    a2: i64,
    thr: f64,
    lo: f64,
    hi: f64,
    a0_max: Option<i64>,
    visit: &mut impl FnMut(SolutionPiece),
) {
    debug_assert!(thr > 0.0);
    let h = |x: f64| a1 as f64 * x + a2 as f64 * curve.f2(0, x) + lambda.eval(0, x);
    let dh = |x: f64| a1 as f64 + a2 as f64 * curve.f2(1, x) + lambda.eval(1, x);

    let breaks = monotone_breakpoints(curve, lambda, a1, a2, lo, hi);
    for w in breaks.windows(2) {
        let (plo, phi) = (w[0], w[1]);
        let (hlo, hhi) = (h(plo), h(phi));
        let increasing = hhi >= hlo;
        let (hmin, hmax) = if increasing { (hlo, hhi) } else { (hhi, hlo) };

        let m_lo = (hmin - thr).ceil() as i64;
        let m_hi = (hmax + thr).floor() as i64;
        let mut warm = if increasing { plo } else { phi };
        for m in m_lo..=m_hi {
            let a0 = -m;
            if let Some(cap) = a0_max {
                if a0.abs() > cap {
                    continue;
                }
            }
            let mf = m as f64;
            // sanity: the band must truly intersect the piece range
            if mf - thr >= hmax || mf + thr <= hmin {
                continue;
            }
            let (t_lo, t_hi) = (mf - thr, mf + thr);
            let mut slope = 0.0;
            // x where h = m, used as the warm start and the slope probe
            if mf > hmin && mf < hmax {
                let x_star = solve_monotone(&h, &dh, plo, phi, increasing, mf, warm);
                slope = dh(x_star);
                warm = x_star;
            }
            let x_at = |t: f64, fallback: f64| -> f64 {
                if t <= hmin {
                    if increasing { plo } else { phi }
                } else if t >= hmax {
                    if increasing { phi } else { plo }
                } else if slope != 0.0 && (thr / slope.abs()) < 1e-7 * (phi - plo) {
                    // thr below evaluation noise: first-order expansion
                    // around the located crossing
                    (warm + (t - mf) / slope).clamp(plo, phi)
                } else {
                    solve_monotone(&h, &dh, plo, phi, increasing, t, fallback)
                }
            };
            let (x1, x2) = if increasing {
                (x_at(t_lo, warm), x_at(t_hi, warm))
            } else {
                (x_at(t_hi, warm), x_at(t_lo, warm))
            };
            let (ivlo, ivhi) = (x1.min(x2), x1.max(x2));
            if ivhi >= ivlo {
                visit(SolutionPiece { a0, lo: ivlo, hi: ivhi, slope });
            }
        }
    }
}

/// Deterministic enumeration of coefficient pairs with
/// `h_lo <= max(|a_1|, |a_2|) <= h_hi`.
pub fn pairs_in_window(h_lo: i64, h_hi: i64) -> Vec<(i64, i64)> {
    assert!(h_lo >= 1 && h_hi >= h_lo);
    let mut out = Vec::new();
    for a2 in -h_hi..=h_hi {
        for a1 in -h_hi..=h_hi {
            let h = a1.abs().max(a2.abs());
            if h >= h_lo && h <= h_hi {
                out.push((a1, a2));
            }
        }
    }
    out
}

/// Pairs with `max(|a_1|, |a_2|) <= h`, including `(0, 0)`.
pub fn pairs_up_to(h: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(((2 * h + 1) * (2 * h + 1)) as usize);
    for a2 in -h..=h {
        for a1 in -h..=h {
            out.push((a1, a2));
        }
    }
    out
}
