use serde::{Deserialize, Serialize};

use super::{check_eta, check_q, cvar_from_tail, moment_by_quantile, Alpha, OptPrice, Valuation};
use crate::error::{Error, Result};
use crate::numerics::{gamma_upper_scaled, ExtReal, Tolerances};

/// Shifted generalized Pareto `F̂_{λ,b}`: no mass below `b`, survival
/// `E_α(λ(v−b))` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HatRaw")]
pub struct HatDist {
    pub alpha: Alpha,
    pub lambda: f64,
    pub b: f64,
}

#[derive(Deserialize)]
struct HatRaw {
    alpha: Alpha,
    lambda: f64,
    b: f64,
}

impl TryFrom<HatRaw> for HatDist {
    type Error = Error;
    fn try_from(r: HatRaw) -> Result<Self> {
        HatDist::new(r.alpha, r.lambda, r.b)
    }
}

impl HatDist {
    pub fn new(alpha: Alpha, lambda: f64, b: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidDistribution(format!("hat lambda must be finite and > 0, got {lambda}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidDistribution(format!("hat shift b must be finite and >= 0, got {b}")));
        }
        Ok(Self { alpha, lambda, b })
    }

    /// Whether the distribution lies in the maximal family, `λb ≥ 1`.
    pub fn is_member(&self) -> bool {
        self.lambda * self.b >= 1.0
    }
}

impl Valuation for HatDist {
    fn survival_at_or_above(&self, v: f64) -> f64 {
        self.survival(v)
    }

    fn survival(&self, v: f64) -> f64 {
        if v <= self.b {
            1.0
        } else {
            self.alpha.survival(self.lambda * (v - self.b))
        }
    }

    fn opt_price(&self) -> OptPrice {
        let al = self.alpha.value();
        let lb = self.lambda * self.b;
        if lb >= 1.0 {
            return OptPrice { price: self.b, revenue: self.b };
        }
        if al == 0.0 {
            return OptPrice { price: f64::INFINITY, revenue: 1.0 / self.lambda };
        }
        let price = (1.0 - (1.0 - al) * lb) / (al * self.lambda);
        OptPrice { price, revenue: self.revenue(price) }
    }

    fn support_max(&self) -> Option<f64> {
        None
    }

    fn mean(&self) -> ExtReal {
        let al = self.alpha.value();
        if al == 0.0 {
            return ExtReal::PosInfinity;
        }
        ExtReal::Finite(self.b + 1.0 / (self.lambda * al))
    }

    fn lnorm(&self, eta: f64) -> Result<ExtReal> {
        check_eta(eta)?;
        if !self.alpha.moment_finite(eta) {
            return Ok(ExtReal::PosInfinity);
        }
        if eta == 1.0 {
            return Ok(self.mean());
        }
        if self.alpha.is_mhr() {
            let x = self.lambda * self.b;
            let m = self.lambda.powf(-eta) * gamma_upper_scaled(eta + 1.0, x)?;
            return Ok(ExtReal::Finite(m.powf(1.0 / eta)));
        }
        let tol = Tolerances::default();
        let m = moment_by_quantile(self, eta, self.alpha.tail_exponent(), &tol);
        Ok(ExtReal::Finite(m.powf(1.0 / eta)))
    }

    fn var_q(&self, q: f64) -> Result<f64> {
        check_q(q)?;
        Ok(self.b + self.alpha.survival_inv(q) / self.lambda)
    }

    fn cvar_q(&self, q: f64) -> Result<ExtReal> {
        let var = self.var_q(q)?;
        let tail = self.alpha.tail_integral(self.alpha.survival_inv(q)) / self.lambda;
        Ok(cvar_from_tail(var, tail, q))
    }

    fn upper_quantile(&self, u: f64) -> f64 {
        self.b + self.alpha.survival_inv(u) / self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_to_infinity;

    fn mhr(lambda: f64, b: f64) -> HatDist {
        HatDist::new(Alpha::MHR, lambda, b).unwrap()
    }

    #[test]
    fn survival_and_revenue() {
        let d = mhr(1.0, 1.0);
        assert_eq!(d.survival_at_or_above(0.5), 1.0);
        assert!((d.revenue(2.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn revenue_matches_monte_carlo() {
        let d: super::super::Distribution = mhr(1.0, 1.0).into();
        let n = 10_000_000;
        let hits = d.sample(42, n).into_iter().filter(|&x| x >= 2.0).count() as f64;
        let p = hits / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((2.0 * p - 0.735_758_882_342_885).abs() < 3.0 * 2.0 * sigma);
    }

    #[test]
    fn opt_price_branches() {
        assert_eq!(mhr(1.0, 2.0).opt_price(), OptPrice { price: 2.0, revenue: 2.0 });
        // λb < 1: interior price (1 − (1−α)λb)/(αλ).
        let d = HatDist::new(Alpha::new(0.5).unwrap(), 1.0, 0.5).unwrap();
        let o = d.opt_price();
        assert!((o.price - 1.5).abs() < 1e-15);
        let r = HatDist::new(Alpha::REGULAR, 2.0, 0.1).unwrap().opt_price();
        assert_eq!(r.price, f64::INFINITY);
        assert_eq!(r.revenue, 0.5);
    }

    #[test]
    fn mean_and_divergence() {
        assert_eq!(mhr(1.0, 1.7).mean(), ExtReal::Finite(2.7));
        assert_eq!(HatDist::new(Alpha::REGULAR, 1.0, 1.0).unwrap().mean(), ExtReal::PosInfinity);
        let d = HatDist::new(Alpha::new(0.5).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(d.lnorm(2.0).unwrap(), ExtReal::PosInfinity);
        assert!(d.lnorm(1.5).unwrap().is_finite());
    }

    #[test]
    fn lnorm_closed_form_matches_quadrature() {
        for (lambda, b, eta) in [(1.0, 1.0, 1.37), (3.0, 1.0, 2.0), (0.5, 2.0, 2.5)] {
            let d = mhr(lambda, b);
            let m = b.powf(eta) + integrate_to_infinity(|v| eta * v.powf(eta - 1.0) * d.survival(v), b, 1e-12);
            let n = d.lnorm(eta).unwrap().to_f64();
            assert!((n - m.powf(1.0 / eta)).abs() < 1e-8, "{lambda} {b} {eta}");
        }
        // Large λb stays finite and tends to b.
        let n = mhr(1000.0, 1.0).lnorm(1.37).unwrap().to_f64();
        assert!(n > 1.0 && n < 1.002);
    }

    #[test]
    fn lnorm_quadrature_path_for_alpha_below_one() {
        let d = HatDist::new(Alpha::new(0.7).unwrap(), 1.3, 0.8).unwrap();
        let mean = d.moment_probe(1.0);
        assert!((mean - d.mean().to_f64()).abs() < 1e-7);
        let eta = 2.0;
        let m = d.b.powf(eta) + integrate_to_infinity(|v| eta * v.powf(eta - 1.0) * d.survival(v), d.b, 1e-13);
        assert!((d.moment_probe(eta) - m).abs() < 1e-6);
    }

    #[test]
    fn cvar_closed_forms() {
        let d = mhr(2.0, 1.0);
        assert!((d.cvar_q(1.0).unwrap().to_f64() - 1.5).abs() < 1e-15);
        let q: f64 = 0.92;
        assert!((d.cvar_q(q).unwrap().to_f64() - (1.0 + (1.0 - q.ln()) / 2.0)).abs() < 1e-14);
        assert!((d.var_q(q).unwrap() - (1.0 - q.ln() / 2.0)).abs() < 1e-15);
        let g = HatDist::new(Alpha::new(0.6).unwrap(), 1.0, 1.0).unwrap();
        assert!((g.cvar_q(1.0).unwrap().to_f64() - g.mean().to_f64()).abs() < 1e-12);
        assert_eq!(HatDist::new(Alpha::REGULAR, 1.0, 1.0).unwrap().cvar_q(0.5).unwrap(), ExtReal::PosInfinity);
    }

    impl HatDist {
        fn moment_probe(&self, eta: f64) -> f64 {
            moment_by_quantile(self, eta, self.alpha.tail_exponent(), &Tolerances::default())
        }
    }
}
