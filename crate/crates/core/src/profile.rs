//! Radial scalar profiles on the unit ball.
//!
//! A profile supplies its value and first two radial derivatives. Conformal
//! factors must equal 1 at r = 1 and stay positive; potentials carry no such
//! constraint. Profiles are evaluated slightly outside [0, 1] by the finite
//! difference stencils in [`crate::symcalc`], so implementations should be
//! defined on a neighbourhood of the closed interval.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub trait RadialProfile: Send + Sync {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;

    /// Value at the boundary sphere.
    fn endpoint(&self) -> f64 {
        self.value(1.0)
    }

    /// Outward normal derivative at the boundary.
    fn normal_derivative(&self) -> f64 {
        self.d1(1.0)
    }
}

/// `c(r) = Σ a_i (r² − 1)^i`. Even in r, hence smooth at the origin, and
/// `c(1) = a_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenPolynomial {
    pub coeffs: Vec<f64>,
}

impl EvenPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Profile `1 + β (r² − 1)^m / (m! 2^m)`, whose first `m − 1` outward
    /// normal derivatives vanish at r = 1 and whose m-th equals β.
    pub fn matched_jet(m: usize, beta: f64) -> Self {
        assert!(m >= 1, "jet order must be positive");
        let mut coeffs = vec![0.0; m + 1];
        coeffs[0] = 1.0;
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        coeffs[m] = beta / (fact * 2f64.powi(m as i32));
        Self { coeffs }
    }

    // Σ a_i s^i with s = r² − 1, and its s-derivatives.
    fn eval_s(&self, s: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            ddp = ddp * s + 2.0 * dp;
            dp = dp * s + p;
            p = p * s + a;
        }
        (p, dp, ddp)
    }
}

impl RadialProfile for EvenPolynomial {
    fn value(&self, r: f64) -> f64 {
        self.eval_s(r * r - 1.0).0
    }
    fn d1(&self, r: f64) -> f64 {
        2.0 * r * self.eval_s(r * r - 1.0).1
    }
    fn d2(&self, r: f64) -> f64 {
        let (_, dp, ddp) = self.eval_s(r * r - 1.0);
        2.0 * dp + 4.0 * r * r * ddp
    }
}

/// `c(r) = Σ a_i (1 − r)^i`. Not even at the origin unless a_1 = a_3 = … = 0
/// after re-expansion; useful for boundary-localized examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolynomial {
    pub coeffs: Vec<f64>,
}

impl BoundaryPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    fn eval_s(&self, s: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            ddp = ddp * s + 2.0 * dp;
            dp = dp * s + p;
            p = p * s + a;
        }
        (p, dp, ddp)
    }
}

impl RadialProfile for BoundaryPolynomial {
    fn value(&self, r: f64) -> f64 {
        self.eval_s(1.0 - r).0
    }
    fn d1(&self, r: f64) -> f64 {
        -self.eval_s(1.0 - r).1
    }
    fn d2(&self, r: f64) -> f64 {
        self.eval_s(1.0 - r).2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant(pub f64);

impl RadialProfile for Constant {
    fn value(&self, _r: f64) -> f64 {
        self.0
    }
    fn d1(&self, _r: f64) -> f64 {
        0.0
    }
    fn d2(&self, _r: f64) -> f64 {
        0.0
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile given by three closures (value, first, second derivative).
#[derive(Clone)]
pub struct FnProfile {
    value: RealFn,
    d1: RealFn,
    d2: RealFn,
}

impl FnProfile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    }
}

impl fmt::Debug for FnProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnProfile")
    }
}

impl RadialProfile for FnProfile {
    fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }
    fn d1(&self, r: f64) -> f64 {
        (self.d1)(r)
    }
    fn d2(&self, r: f64) -> f64 {
        (self.d2)(r)
    }
}

/// Pointwise negation; used to pass `−q_c` to the potential solver.
pub struct Negated<P>(pub P);

impl<P: RadialProfile> RadialProfile for Negated<P> {
    fn value(&self, r: f64) -> f64 {
        -self.0.value(r)
    }
    fn d1(&self, r: f64) -> f64 {
        -self.0.d1(r)
    }
    fn d2(&self, r: f64) -> f64 {
        -self.0.d2(r)
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for &P {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn d1(&self, r: f64) -> f64 {
        (**self).d1(r)
    }
    fn d2(&self, r: f64) -> f64 {
        (**self).d2(r)
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for Box<P> {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn d1(&self, r: f64) -> f64 {
        (**self).d1(r)
    }
    fn d2(&self, r: f64) -> f64 {
        (**self).d2(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(p: &dyn RadialProfile, r: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
        let d2 = (p.value(r + h) - 2.0 * p.value(r) + p.value(r - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn even_polynomial_derivatives() {
        let p = EvenPolynomial::new(vec![1.0, 0.3, -0.7, 0.2]);
        for &r in &[0.1, 0.5, 0.9, 1.0] {
            let (d1, d2) = fd(&p, r);
            assert!((p.d1(r) - d1).abs() < 1e-7);
            assert!((p.d2(r) - d2).abs() < 1e-5);
        }
        assert_eq!(p.d1(0.0), 0.0);
    }

    #[test]
    fn matched_jet_has_prescribed_derivative() {
        // m = 2: (r² − 1)² / 8 · β has second derivative β at r = 1.
        let p = EvenPolynomial::matched_jet(2, 0.5);
        assert!((p.value(1.0) - 1.0).abs() < 1e-15);
        assert!(p.d1(1.0).abs() < 1e-15);
        assert!((p.d2(1.0) - 0.5).abs() < 1e-14);
        let p1 = EvenPolynomial::matched_jet(1, 0.2);
        assert!((p1.d1(1.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn boundary_polynomial_derivatives() {
        let p = BoundaryPolynomial::new(vec![1.0, 0.0, 1.0]);
        assert_eq!(p.value(1.0), 1.0);
        assert_eq!(p.d1(1.0), 0.0);
        assert_eq!(p.d2(0.3), 2.0);
        assert!((p.d1(0.0) + 2.0).abs() < 1e-15);
    }
}
