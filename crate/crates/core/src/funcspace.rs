//! Approximation functions, curve systems and inhomogeneous functions.
//!
//! All three types are immutable after construction and cheap to clone; the
//! evaluators for built-in curves are analytic so derivative bounds are exact
//! up to rounding. User-supplied closures must provide every derivative order
//! themselves and are sanity-checked against finite differences at
//! construction.

use crate::error::{CoreError, Result};
use crate::interval::IntervalSet;
use std::sync::Arc;

/// Grid size used to certify derivative closures and cache sup bounds.
const CERT_GRID: usize = 10_000;
/// Relative mismatch tolerance of the Richardson derivative check.
const CERT_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Approximation functions
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum ApproxKind {
    /// psi(q) = q^{-v}, v > 0.
    PowerLaw { v: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A positive non-increasing approximation function `psi`.
#[derive(Clone)]
pub struct ApproxFunction {
    kind: ApproxKind,
}

/// Result of a lower-order computation: exact for power laws, a probe-grid
/// estimate otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerOrder {
    pub value: f64,
    pub exact: bool,
    pub probe_max: u64,
}

impl ApproxFunction {
    pub fn power_law(v: f64) -> Result<Self> {
        if !(v > 0.0) {
            return Err(CoreError::Parameter(format!("power-law exponent must be positive, got {v}")));
        }
        Ok(Self { kind: ApproxKind::PowerLaw { v } })
    }

    /// Arbitrary closure; positivity and monotonicity are certified on a
    /// geometric probe grid up to `probe_max`.
    pub fn custom<F>(eval: F, probe_max: u64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut prev = f64::INFINITY;
        let mut q = 1.0f64;
        while q <= probe_max as f64 {
            let val = eval(q);
            if !(val > 0.0) {
                return Err(CoreError::Parameter(format!("psi({q}) = {val} is not positive")));
            }
            if val > prev {
                return Err(CoreError::Parameter(format!("psi is increasing near q = {q}")));
            }
            prev = val;
            q *= 2.0;
        }
        Ok(Self { kind: ApproxKind::Custom(Arc::new(eval)) })
    }

    pub fn eval(&self, q: f64) -> f64 {
        match &self.kind {
            ApproxKind::PowerLaw { v } => q.powf(-v),
            ApproxKind::Custom(f) => f(q),
        }
    }

    pub fn power_law_exponent(&self) -> Option<f64> {
        match &self.kind {
            ApproxKind::PowerLaw { v } => Some(*v),
            _ => None,
        }
    }
}

/// Lower order of `1/psi`: exact `v` for power laws, otherwise the minimum of
/// `-log psi(q) / log q` over the geometric probe grid `16, 32, ..., q_max`.
pub fn lower_order(psi: &ApproxFunction, q_max: u64) -> Result<LowerOrder> {
    if q_max < 16 {
        return Err(CoreError::Parameter(format!("q_max must be >= 16, got {q_max}")));
    }
    if let Some(v) = psi.power_law_exponent() {
        return Ok(LowerOrder { value: v, exact: true, probe_max: q_max });
    }
    let mut min = f64::INFINITY;
    let mut q = 16.0f64;
    while q <= q_max as f64 {
        let val = psi.eval(q);
        if !(val > 0.0) {
            return Err(CoreError::Parameter(format!("psi({q}) = {val} is not positive")));
        }
        min = min.min(-val.ln() / q.ln());
        q *= 2.0;
    }
    Ok(LowerOrder { value: min, exact: false, probe_max: q_max })
}

// ---------------------------------------------------------------------------
// Curve systems
// ---------------------------------------------------------------------------

/// Second coordinate of a planar curve `(x, f(x))`.
#[derive(Clone)]
pub enum PlanarFn {
    /// f(x) = x^2
    Parabola,
    /// f(x) = x^3
    Cubic,
    /// f(x) = sin x
    Sin,
    /// f(x) = e^x
    Exp,
    /// f(x) given by a closure over (derivative order, x); all orders required.
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl PlanarFn {
    #[inline]
    fn eval(&self, order: usize, x: f64) -> f64 {
        match self {
            PlanarFn::Parabola => match order {
                0 => x * x,
                1 => 2.0 * x,
                2 => 2.0,
                _ => 0.0,
            },
            PlanarFn::Cubic => match order {
                0 => x * x * x,
                1 => 3.0 * x * x,
                2 => 6.0 * x,
                3 => 6.0,
                _ => 0.0,
            },
            PlanarFn::Sin => match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            PlanarFn::Exp => x.exp(),
            PlanarFn::Custom(f) => f(order, x),
        }
    }
}

#[derive(Clone)]
enum CurveKind {
    /// f_i(x) = x^i for i = 1..=n.
    Veronese,
    /// n = 2, first coordinate is the identity.
    Planar(PlanarFn),
    /// General evaluator over (coordinate i, derivative order j, x).
    Custom(Arc<dyn Fn(usize, usize, f64) -> f64 + Send + Sync>),
}

/// A non-degenerate-candidate curve `f = (f_1, ..., f_n)` on `I = [a, b]`
/// with `f_1(x) = x` (the normalization assumed by the whole construction).
#[derive(Clone)]
pub struct CurveSystem {
    n: usize,
    domain: (f64, f64),
    kind: CurveKind,
    sup_bound: f64,
    sup_coord: Vec<f64>,
    curvature: Option<(f64, f64)>,
}

impl CurveSystem {
    /// Veronese curve `(x, x^2, ..., x^n)`.
    pub fn veronese(n: usize, domain: (f64, f64)) -> Result<Self> {
        Self::build(n, domain, CurveKind::Veronese, false)
    }

    /// The parabola `(x, x^2)`.
    pub fn parabola(domain: (f64, f64)) -> Result<Self> {
        Self::veronese(2, domain)
    }

    /// Planar curve `(x, f(x))`.
    pub fn planar(f: PlanarFn, domain: (f64, f64)) -> Result<Self> {
        let certify = matches!(f, PlanarFn::Custom(_));
        Self::build(2, domain, CurveKind::Planar(f), certify)
    }

    /// General curve from an `(i, j, x)` evaluator. Rejected unless
    /// `f_1(x) = x` holds on the certification grid; use
    /// [`CurveSystem::planar_reparam`] to normalize a planar curve whose first
    /// coordinate is not the identity.
    pub fn custom<F>(n: usize, eval: F, domain: (f64, f64)) -> Result<Self>
    where
        F: Fn(usize, usize, f64) -> f64 + Send + Sync + 'static,
    {
        let eval = Arc::new(eval);
        // first-coordinate normalization check
        let (a, b) = domain;
        for k in 0..=64 {
            let x = a + (b - a) * k as f64 / 64.0;
            if (eval(1, 0, x) - x).abs() > 1e-12 * (1.0 + x.abs()) || (eval(1, 1, x) - 1.0).abs() > 1e-12 {
                return Err(CoreError::Parameter(
                    "first coordinate must be the identity (f_1(x) = x); re-parameterize first".into(),
                ));
            }
        }
        Self::build(n, domain, CurveKind::Custom(eval), true)
    }

    /// Re-parameterization hook: given a planar curve `(g_1(u), g_2(u))` with
    /// `g_1` strictly monotone on `[a, b]`, produce the normalized curve
    /// `(x, g_2(g_1^{-1}(x)))` on `[g_1(a), g_1(b)]` (sorted). The closure
    /// receives `(coordinate 1|2, order 0..=2, u)`.
    pub fn planar_reparam<G>(g: G, udomain: (f64, f64)) -> Result<Self>
    where
        G: Fn(usize, usize, f64) -> f64 + Send + Sync + 'static,
    {
        let g = Arc::new(g);
        let (ua, ub) = udomain;
        let (xa, xb) = (g(1, 0, ua), g(1, 0, ub));
        let (lo, hi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
        if !(hi > lo) {
            return Err(CoreError::Parameter("g_1 must be non-constant on the domain".into()));
        }
        // reject non-monotone g_1
        for k in 0..=256 {
            let u = ua + (ub - ua) * k as f64 / 256.0;
            if g(1, 1, u).abs() < 1e-12 {
                return Err(CoreError::Parameter(format!("g_1'({u}) vanishes; cannot invert")));
            }
        }
        let inv = {
            let g = g.clone();
            let (ua, ub) = (ua.min(ub), ua.max(ub));
            move |x: f64| -> f64 {
                // Newton with bisection safeguard on g_1(u) = x
                let (mut lo_u, mut hi_u) = (ua, ub);
                let mut u = 0.5 * (lo_u + hi_u);
                let increasing = g(1, 0, ub) > g(1, 0, ua);
                for _ in 0..128 {
                    let val = g(1, 0, u) - x;
                    if val.abs() < 1e-15 * (1.0 + x.abs()) {
                        break;
                    }
                    if (val > 0.0) == increasing {
                        hi_u = u;
                    } else {
                        lo_u = u;
                    }
                    let d = g(1, 1, u);
                    let step = u - val / d;
                    u = if step > lo_u && step < hi_u { step } else { 0.5 * (lo_u + hi_u) };
                }
                u
            }
        };
        let g2 = g.clone();
        let f = move |order: usize, x: f64| -> f64 {
            let u = inv(x);
            let g1p = g2(1, 1, u);
            match order {
                0 => g2(2, 0, u),
                1 => g2(2, 1, u) / g1p,
                2 => (g2(2, 2, u) * g1p - g2(2, 1, u) * g2(1, 2, u)) / (g1p * g1p * g1p),
                _ => f64::NAN,
            }
        };
        Self::build(2, (lo, hi), CurveKind::Planar(PlanarFn::Custom(Arc::new(f))), false)
    }

    fn build(n: usize, domain: (f64, f64), kind: CurveKind, certify: bool) -> Result<Self> {
        if n < 1 {
            return Err(CoreError::Parameter("ambient dimension must be >= 1".into()));
        }
        let (a, b) = domain;
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(CoreError::Parameter(format!("domain [{a}, {b}] must be finite with b > a")));
        }
        let mut curve = Self { n, domain, kind, sup_bound: 0.0, sup_coord: Vec::new(), curvature: None };
        if certify {
            curve.certify_derivatives()?;
        }
        curve.cache_bounds();
        Ok(curve)
    }

    /// Richardson check of supplied derivatives: each order j is compared with
    /// the extrapolated central difference of order j-1.
    fn certify_derivatives(&self) -> Result<()> {
        let (a, b) = self.domain;
        let h0 = (b - a) * 1e-4;
        let max_order = self.n.min(3);
        for k in 0..=100 {
            let x = a + (b - a) * (0.5 + k as f64) / 101.0;
            for i in 1..=self.n {
                for j in 1..=max_order {
                    let supplied = self.deriv(i, j, x);
                    let diff = |h: f64| (self.deriv(i, j - 1, x + h) - self.deriv(i, j - 1, x - h)) / (2.0 * h);
                    let d1 = diff(h0);
                    let d2 = diff(h0 / 2.0);
                    let extrap = (4.0 * d2 - d1) / 3.0;
                    let scale = supplied.abs().max(extrap.abs()).max(1.0);
                    if (supplied - extrap).abs() > CERT_TOL * scale {
                        return Err(CoreError::Certification(format!(
                            "f_{i}^{{({j})}}({x}) = {supplied} disagrees with finite difference {extrap}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn cache_bounds(&mut self) {
        let (a, b) = self.domain;
        let mut sup = 0.0f64;
        let mut sup_coord = vec![0.0f64; self.n];
        let mut c1 = f64::INFINITY;
        let mut c2 = 0.0f64;
        for k in 0..=CERT_GRID {
            let x = a + (b - a) * k as f64 / CERT_GRID as f64;
            for i in 1..=self.n {
                for j in 0..=self.n {
                    let v = self.deriv(i, j, x).abs();
                    sup = sup.max(v);
                    if j == 0 {
                        sup_coord[i - 1] = sup_coord[i - 1].max(v);
                    }
                }
            }
            if self.n == 2 {
                let f2 = self.deriv(2, 2, x).abs();
                c1 = c1.min(f2);
                c2 = c2.max(f2);
            }
        }
        self.sup_bound = sup;
        self.sup_coord = sup_coord;
        self.curvature = if self.n == 2 { Some((c1, c2)) } else { None };
    }

    /// Cached `sup_I |f_i|` for `1 <= i <= n`.
    pub fn sup_coordinate(&self, i: usize) -> f64 {
        self.sup_coord[i - 1]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn domain_len(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    /// Global derivative bound `C = sup |f_i^{(j)}|` over the certification grid.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// `(c_1, c_2)` with `c_1 <= |f''| <= c_2` on the grid; `None` for n != 2.
    pub fn curvature_bounds(&self) -> Option<(f64, f64)> {
        self.curvature
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.domain.0 && x <= self.domain.1
    }

    /// `f_i^{(j)}(x)` for `1 <= i <= n`, `j >= 0`.
    #[inline]
    pub fn deriv(&self, i: usize, j: usize, x: f64) -> f64 {
        debug_assert!(i >= 1 && i <= self.n);
        if i == 1 {
            return match j {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            };
        }
        match &self.kind {
            CurveKind::Veronese => {
                if j > i {
                    0.0
                } else {
                    // falling factorial i * (i-1) * ... * (i-j+1) * x^{i-j}
                    let mut c = 1.0;
                    for k in 0..j {
                        c *= (i - k) as f64;
                    }
                    c * x.powi((i - j) as i32)
                }
            }
            CurveKind::Planar(f) => f.eval(j, x),
            CurveKind::Custom(f) => f(i, j, x),
        }
    }

    /// Fast path for planar curves: `f^{(order)}(x)` of the second coordinate.
    #[inline]
    pub fn f2(&self, order: usize, x: f64) -> f64 {
        debug_assert_eq!(self.n, 2);
        match &self.kind {
            CurveKind::Veronese => PlanarFn::Parabola.eval(order, x),
            CurveKind::Planar(f) => f.eval(order, x),
            CurveKind::Custom(f) => f(2, order, x),
        }
    }
}

/// `w(f_1', ..., f_n')(x) = det(f_i^{(j)}(x))`, the non-degeneracy Wronskian.
pub fn wronskian(curve: &CurveSystem, x: f64) -> Result<f64> {
    if !curve.contains(x) {
        let (lo, hi) = curve.domain();
        return Err(CoreError::OutsideDomain { x, lo, hi });
    }
    let n = curve.n();
    let mut m: Vec<Vec<f64>> = (1..=n)
        .map(|i| (1..=n).map(|j| curve.deriv(i, j, x)).collect())
        .collect();
    // LU with partial pivoting
    let mut det = 1.0f64;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    Ok(det)
}

/// Outcome of a non-degeneracy grid scan.
#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub min_abs_wronskian: f64,
    pub argmin: f64,
    pub floor: f64,
    /// Subintervals of the grid where |W| < floor.
    pub bad_subintervals: IntervalSet,
}

impl NondegeneracyReport {
    pub fn is_nondegenerate(&self) -> bool {
        self.bad_subintervals.is_empty()
    }
}

/// Scan `|W|` over a uniform grid and report where it falls below `floor`.
pub fn certify_nondegenerate(curve: &CurveSystem, grid_points: usize, floor: f64) -> Result<NondegeneracyReport> {
    if grid_points < 2 {
        return Err(CoreError::Parameter("grid_points must be >= 2".into()));
    }
    let (a, b) = curve.domain();
    let step = (b - a) / (grid_points - 1) as f64;
    let mut min_abs = f64::INFINITY;
    let mut argmin = a;
    let mut bad = Vec::new();
    for k in 0..grid_points {
        let x = a + step * k as f64;
        let w = wronskian(curve, x.min(b))?.abs();
        if w < min_abs {
            min_abs = w;
            argmin = x;
        }
        if w < floor {
            bad.push(((x - step).max(a), (x + step).min(b)));
        }
    }
    Ok(NondegeneracyReport {
        min_abs_wronskian: min_abs,
        argmin,
        floor,
        bad_subintervals: IntervalSet::from_intervals(bad),
    })
}

// ---------------------------------------------------------------------------
// Inhomogeneous functions
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum InhomKind {
    Zero,
    Constant(f64),
    /// x^k
    Power(u32),
    /// c_0 + c_1 x + ... + c_d x^d
    Poly(Vec<f64>),
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

/// The inhomogeneous shift `lambda in C^2(I)` with cached sup bounds for
/// orders 0..=2.
#[derive(Clone)]
pub struct InhomFunction {
    kind: InhomKind,
    sup: [f64; 3],
}

impl InhomFunction {
    pub fn zero() -> Self {
        Self { kind: InhomKind::Zero, sup: [0.0; 3] }
    }

    pub fn constant(c: f64) -> Self {
        Self { kind: InhomKind::Constant(c), sup: [c.abs(), 0.0, 0.0] }
    }

    pub fn power(k: u32, domain: (f64, f64)) -> Self {
        let mut out = Self { kind: InhomKind::Power(k), sup: [0.0; 3] };
        out.cache_sup(domain);
        out
    }

    pub fn poly(coeffs: Vec<f64>, domain: (f64, f64)) -> Self {
        let mut out = Self { kind: InhomKind::Poly(coeffs), sup: [0.0; 3] };
        out.cache_sup(domain);
        out
    }

    pub fn custom<F>(eval: F, domain: (f64, f64)) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        let out = Self { kind: InhomKind::Custom(Arc::new(eval)), sup: [0.0; 3] };
        // Richardson check of lambda' and lambda''
        let (a, b) = domain;
        let h0 = (b - a) * 1e-4;
        for k in 0..=100 {
            let x = a + (b - a) * (0.5 + k as f64) / 101.0;
            for j in 1..=2usize {
                let supplied = out.eval(j, x);
                let diff = |h: f64| (out.eval(j - 1, x + h) - out.eval(j - 1, x - h)) / (2.0 * h);
                let extrap = (4.0 * diff(h0 / 2.0) - diff(h0)) / 3.0;
                let scale = supplied.abs().max(extrap.abs()).max(1.0);
                if (supplied - extrap).abs() > CERT_TOL * scale {
                    return Err(CoreError::Certification(format!(
                        "lambda^{{({j})}}({x}) = {supplied} disagrees with finite difference {extrap}"
                    )));
                }
            }
        }
        let mut out = out;
        out.cache_sup(domain);
        Ok(out)
    }

    fn cache_sup(&mut self, domain: (f64, f64)) {
        let (a, b) = domain;
        let mut sup = [0.0f64; 3];
        for k in 0..=CERT_GRID {
            let x = a + (b - a) * k as f64 / CERT_GRID as f64;
            for (j, s) in sup.iter_mut().enumerate() {
                *s = s.max(self.eval(j, x).abs());
            }
        }
        self.sup = sup;
    }

    /// `lambda^{(order)}(x)` for order 0..=2.
    #[inline]
    pub fn eval(&self, order: usize, x: f64) -> f64 {
        match &self.kind {
            InhomKind::Zero => 0.0,
            InhomKind::Constant(c) => {
                if order == 0 {
                    *c
                } else {
                    0.0
                }
            }
            InhomKind::Power(k) => {
                let k = *k as i32;
                let order = order as i32;
                if order > k {
                    0.0
                } else {
                    let mut c = 1.0;
                    for m in 0..order {
                        c *= (k - m) as f64;
                    }
                    c * x.powi(k - order)
                }
            }
            InhomKind::Poly(coeffs) => {
                let mut acc = 0.0;
                for (d, &c) in coeffs.iter().enumerate().rev() {
                    if d < order {
                        break;
                    }
                    let mut fac = 1.0;
                    for m in 0..order {
                        fac *= (d - m) as f64;
                    }
                    acc += c * fac * x.powi((d - order) as i32);
                }
                acc
            }
            InhomKind::Custom(f) => f(order, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, InhomKind::Zero)
    }

    /// Cached `sup_I |lambda^{(order)}|`.
    pub fn sup(&self, order: usize) -> f64 {
        self.sup[order]
    }
}
