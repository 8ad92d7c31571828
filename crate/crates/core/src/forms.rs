//! The family `F_n` of integer forms `a_0 + a_1 f_1(x) + ... + a_n f_n(x)`,
//! their heights, and complete enumeration of `F_n(H)`.
//!
//! The constant coefficient `a_0` does not enter the height, so `F_n(H)` is
//! infinite as printed; the enumeration bounds `|a_0|` by [`a0_bound`], which
//! is large enough that every form admitting a solution of `|F + lambda| < 1`
//! on `I` is produced.

use crate::error::{CoreError, Result};
use crate::funcspace::{CurveSystem, InhomFunction};
use serde::{Deserialize, Serialize};

/// Default cap on the number of enumerated forms.
pub const DEFAULT_FORM_BUDGET: u128 = 1_000_000_000;

/// An integer form: coefficient vector `(a_0, a_1, ..., a_n)`, not all zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerForm {
    coeffs: Vec<i64>,
}

impl IntegerForm {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() < 2 || coeffs.iter().all(|&c| c == 0) {
            return Err(CoreError::InvalidForm);
        }
        Ok(Self { coeffs })
    }

    /// `(a_0, ..., a_n)` including the constant term.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn a0(&self) -> i64 {
        self.coeffs[0]
    }

    /// Coefficient `a_i` (i = 0 is the constant term).
    pub fn coeff(&self, i: usize) -> i64 {
        self.coeffs[i]
    }

    pub fn n(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `H(F) = max(|a_1|, ..., |a_n|)`; the constant term is excluded.
    pub fn height(&self) -> i64 {
        self.coeffs[1..].iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn negated(&self) -> IntegerForm {
        IntegerForm { coeffs: self.coeffs.iter().map(|&c| -c).collect() }
    }

    /// `F^{(j)}(x)` on the given curve.
    pub fn deriv(&self, curve: &CurveSystem, j: usize, x: f64) -> f64 {
        let mut acc = if j == 0 { self.coeffs[0] as f64 } else { 0.0 };
        for i in 1..self.coeffs.len() {
            if self.coeffs[i] != 0 {
                acc += self.coeffs[i] as f64 * curve.deriv(i, j, x);
            }
        }
        acc
    }
}

/// A form bound to a curve and inhomogeneous function:
/// `G^{(j)}(x) = F^{(j)}(x) + lambda^{(j)}(x)`.
#[derive(Clone)]
pub struct EvaluatedForm<'a> {
    pub form: &'a IntegerForm,
    pub curve: &'a CurveSystem,
    pub lambda: &'a InhomFunction,
}

impl<'a> EvaluatedForm<'a> {
    pub fn new(form: &'a IntegerForm, curve: &'a CurveSystem, lambda: &'a InhomFunction) -> Self {
        Self { form, curve, lambda }
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    #[inline]
    pub fn deriv(&self, j: usize, x: f64) -> f64 {
        self.form.deriv(self.curve, j, x) + self.lambda.eval(j, x)
    }
}

/// Bound `B_0` on the constant term such that any form with `|a_0| > B_0` and
/// `H(F) <= H` satisfies `|F(x) + lambda(x)| >= 1` on all of `I`.
pub fn a0_bound(curve: &CurveSystem, lambda: &InhomFunction, h: i64) -> i64 {
    assert!(h >= 1, "a0_bound requires H >= 1");
    let mut sup = lambda.sup(0);
    for i in 1..=curve.n() {
        sup += h as f64 * curve.sup_coordinate(i);
    }
    sup.ceil() as i64 + 1
}

/// Deterministic lexicographic enumeration of `F_n(H)` with `|a_0| <=
/// a0_bound`. The outermost coordinate is `a_n`, the innermost `a_0`; the
/// all-zero vector is skipped.
#[derive(Debug)]
pub struct FormEnumeration {
    n: usize,
    h: i64,
    b0: i64,
    /// inclusive upper bound for the outermost coordinate (differs from `h`
    /// only for partitioned sub-streams)
    outer_hi: i64,
    /// current coefficients (a_0, ..., a_n); None once exhausted
    state: Option<Vec<i64>>,
}

impl FormEnumeration {
    pub fn total_count(n: usize, h: i64, b0: i64) -> u128 {
        (2 * b0 as u128 + 1) * (2 * h as u128 + 1).pow(n as u32) - 1
    }

    fn start(n: usize, h: i64, b0: i64) -> Self {
        let mut state = vec![-b0; n + 1];
        for c in state.iter_mut().skip(1) {
            *c = -h;
        }
        Self { n, h, b0, outer_hi: h, state: Some(state) }
    }

    fn slice(n: usize, h: i64, b0: i64, an: i64) -> Self {
        let mut part = Self::start(n, h, b0);
        if let Some(state) = part.state.as_mut() {
            state[n] = an;
        }
        part.outer_hi = an;
        part
    }
}

impl Iterator for FormEnumeration {
    type Item = IntegerForm;

    fn next(&mut self) -> Option<IntegerForm> {
        loop {
            let state = self.state.as_mut()?;
            let candidate = state.clone();
            // advance: a_0 innermost, a_n outermost
            let mut idx = 0;
            loop {
                let max = if idx == 0 {
                    self.b0
                } else if idx == self.n {
                    self.outer_hi
                } else {
                    self.h
                };
                if state[idx] < max {
                    state[idx] += 1;
                    break;
                }
                state[idx] = -max;
                idx += 1;
                if idx > self.n {
                    self.state = None;
                    break;
                }
            }
            if candidate.iter().any(|&c| c != 0) {
                return Some(IntegerForm { coeffs: candidate });
            }
        }
    }
}

/// Enumerate `F_n(H)` (plus the derived `a_0` range) in deterministic order.
pub fn enumerate_forms(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h: i64,
    budget: u128,
) -> Result<FormEnumeration> {
    if h < 1 {
        return Err(CoreError::Parameter(format!("height bound must be >= 1, got {h}")));
    }
    let b0 = a0_bound(curve, lambda, h);
    let requested = FormEnumeration::total_count(curve.n(), h, b0);
    if requested > budget {
        return Err(CoreError::Budget { requested, budget });
    }
    Ok(FormEnumeration::start(curve.n(), h, b0))
}

/// Split the enumeration into independent sub-streams by the outermost
/// coordinate `a_n`; concatenating them in order reproduces
/// [`enumerate_forms`] exactly.
pub fn enumerate_forms_partitioned(
    curve: &CurveSystem,
    lambda: &InhomFunction,
    h: i64,
    budget: u128,
) -> Result<Vec<FormEnumeration>> {
    enumerate_forms(curve, lambda, h, budget)?; // validate + budget
    let n = curve.n();
    let b0 = a0_bound(curve, lambda, h);
    Ok((-h..=h).map(|an| FormEnumeration::slice(n, h, b0, an)).collect())
}
