use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Regularity level `α ∈ [0, 1]`: 0 is regular, 1 is MHR.
///
/// Values within `1e-9` of 1 use the exponential branch of `E_α`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

const MHR_CUTOFF: f64 = 1e-9;

impl Alpha {
    pub const MHR: Alpha = Alpha(1.0);
    pub const REGULAR: Alpha = Alpha(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return domain(format!("alpha must lie in [0, 1], got {value}"));
        }
        Ok(Alpha(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_mhr(self) -> bool {
        1.0 - self.0 < MHR_CUTOFF
    }

    fn kappa(self) -> f64 {
        1.0 - self.0
    }

    /// `E_α(v)`; `v = +∞` gives 0.
    #[inline]
    pub fn survival(self, v: f64) -> f64 {
        if self.is_mhr() {
            (-v).exp()
        } else {
            let k = self.kappa();
            (-(k * v).ln_1p() / k).exp()
        }
    }

    /// `E_α⁻¹(q)` for `q ∈ (0, 1]`.
    #[inline]
    pub fn survival_inv(self, q: f64) -> f64 {
        if self.is_mhr() {
            -q.ln()
        } else {
            let k = self.kappa();
            (-k * q.ln()).exp_m1() / k
        }
    }

    /// `∫₀^y E_α(t) dt`.
    pub fn integral(self, y: f64) -> f64 {
        if self.is_mhr() {
            -(-y).exp_m1()
        } else if self.0 == 0.0 {
            y.ln_1p()
        } else {
            let k = self.kappa();
            -(-(self.0 / k) * (k * y).ln_1p()).exp_m1() / self.0
        }
    }

    /// `∫_y^∞ E_α(t) dt`, infinite at α = 0.
    pub fn tail_integral(self, y: f64) -> f64 {
        if self.is_mhr() {
            (-y).exp()
        } else if self.0 == 0.0 {
            f64::INFINITY
        } else {
            let k = self.kappa();
            (-(self.0 / k) * (k * y).ln_1p()).exp() / self.0
        }
    }

    /// Whether the η-th moment of `E_α` is finite, i.e. `η·(1−α) < 1`.
    pub fn moment_finite(self, eta: f64) -> bool {
        eta * self.kappa() < 1.0
    }

    pub(crate) fn tail_exponent(self) -> f64 {
        if self.is_mhr() {
            0.0
        } else {
            self.kappa()
        }
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// `E_α(v)`, the generalized Pareto survival function.
pub fn pareto_survival(alpha: Alpha, v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return domain(format!("survival argument must be nonnegative, got {v}"));
    }
    Ok(alpha.survival(v))
}

/// Inverse of [`pareto_survival`] on `(0, 1]`.
pub fn pareto_survival_inv(alpha: Alpha, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return domain(format!("survival level must lie in (0, 1], got {q}"));
    }
    Ok(alpha.survival_inv(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, integrate_to_infinity};

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert_eq!(pareto_survival(Alpha::MHR, 0.0).unwrap(), 1.0);
        assert!((pareto_survival(Alpha::REGULAR, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pareto_survival(a(0.5), 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(pareto_survival(Alpha::MHR, -1.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert!((pareto_survival_inv(Alpha::MHR, (-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-14);
        assert!((pareto_survival_inv(Alpha::REGULAR, 0.5).unwrap() - 1.0).abs() < 1e-15);
        for x in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(pareto_survival_inv(a(x), 1.0).unwrap(), 0.0);
        }
        assert!(pareto_survival_inv(Alpha::MHR, 0.0).is_err());
        assert!(pareto_survival_inv(Alpha::MHR, 1.5).is_err());
    }

    #[test]
    fn near_one_uses_exponential_branch() {
        let near = a(1.0 - 1e-12);
        assert!(near.is_mhr());
        assert_eq!(near.survival(3.0), (-3.0f64).exp());
        assert!(!a(1.0 - 1e-6).is_mhr());
    }

    #[test]
    fn alpha_out_of_range() {
        assert!(Alpha::new(-0.1).is_err());
        assert!(Alpha::new(1.1).is_err());
        assert!(serde_json::from_str::<Alpha>("2.0").is_err());
        assert_eq!(serde_json::from_str::<Alpha>("0.5").unwrap(), a(0.5));
    }

    #[test]
    fn integrals_match_quadrature() {
        for x in [0.0, 0.3, 0.7, 1.0] {
            let al = a(x);
            for y in [0.0, 0.5, 3.0] {
                let q = integrate(|t| al.survival(t), 0.0, y, 1e-13);
                assert!((al.integral(y) - q).abs() < 1e-10, "alpha={x} y={y}");
            }
        }
        for x in [0.5, 0.7, 1.0] {
            let al = a(x);
            let q = integrate_to_infinity(|t| al.survival(t), 1.0, 1e-12);
            assert!((al.tail_integral(1.0) - q).abs() < 1e-7, "alpha={x}");
            assert!((al.integral(f64::INFINITY) - 1.0 / x).abs() < 1e-12);
        }
        assert_eq!(Alpha::REGULAR.tail_integral(1.0), f64::INFINITY);
    }
}
