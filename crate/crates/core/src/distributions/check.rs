use serde::{Deserialize, Serialize};

use super::{check_eta, check_q, cvar_from_tail, moment_by_quantile, Alpha, OptPrice, Valuation};
use crate::error::{Error, Result};
use crate::numerics::{gamma_lower, ExtReal, Tolerances};

/// Truncated generalized Pareto `F̌_{λ,a}`: survival `E_α(λv)` below `a`
/// and an atom of mass `E_α(λa)` at `a`. `λ = 0` is the point mass at `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CheckRaw")]
pub struct CheckDist {
    pub alpha: Alpha,
    pub lambda: f64,
    pub a: f64,
}

#[derive(Deserialize)]
struct CheckRaw {
    alpha: Alpha,
    lambda: f64,
    a: f64,
}

impl TryFrom<CheckRaw> for CheckDist {
    type Error = Error;
    fn try_from(r: CheckRaw) -> Result<Self> {
        CheckDist::new(r.alpha, r.lambda, r.a)
    }
}

impl CheckDist {
    pub fn new(alpha: Alpha, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidDistribution(format!("check lambda must be finite and >= 0, got {lambda}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidDistribution(format!("check truncation a must be finite and > 0, got {a}")));
        }
        Ok(Self { alpha, lambda, a })
    }

    pub fn point_mass(a: f64) -> Result<Self> {
        Self::new(Alpha::MHR, 0.0, a)
    }

    /// Whether the distribution lies in the minimal family, `αλa ≤ 1`.
    pub fn is_member(&self) -> bool {
        self.alpha.value() * self.lambda * self.a <= 1.0
    }

    /// Mass of the atom at `a`.
    pub fn atom(&self) -> f64 {
        self.alpha.survival(self.lambda * self.a)
    }
}

impl Valuation for CheckDist {
    fn survival_at_or_above(&self, v: f64) -> f64 {
        if v <= 0.0 {
            1.0
        } else if v <= self.a {
            self.alpha.survival(self.lambda * v)
        } else {
            0.0
        }
    }

    fn survival(&self, v: f64) -> f64 {
        if v < 0.0 {
            1.0
        } else if v < self.a {
            self.alpha.survival(self.lambda * v)
        } else {
            0.0
        }
    }

    fn opt_price(&self) -> OptPrice {
        let al = self.alpha.value();
        let price = if al * self.lambda * self.a <= 1.0 {
            self.a
        } else {
            1.0 / (al * self.lambda)
        };
        OptPrice { price, revenue: self.revenue(price) }
    }

    fn support_max(&self) -> Option<f64> {
        Some(self.a)
    }

    fn mean(&self) -> ExtReal {
        if self.lambda == 0.0 {
            return ExtReal::Finite(self.a);
        }
        ExtReal::Finite(self.alpha.integral(self.lambda * self.a) / self.lambda)
    }

    fn lnorm(&self, eta: f64) -> Result<ExtReal> {
        check_eta(eta)?;
        let x = self.lambda * self.a;
        if x == 0.0 {
            return Ok(ExtReal::Finite(self.a));
        }
        if eta == 1.0 {
            return Ok(self.mean());
        }
        if self.alpha.is_mhr() {
            let m = (-x).exp() + x.powf(-eta) * gamma_lower(eta + 1.0, x)?;
            return Ok(ExtReal::Finite(self.a * m.powf(1.0 / eta)));
        }
        let tol = Tolerances::default();
        // Bounded support: no tail singularity to flatten.
        let m = moment_by_quantile(self, eta, 0.0, &tol);
        Ok(ExtReal::Finite(m.powf(1.0 / eta)))
    }

    fn var_q(&self, q: f64) -> Result<f64> {
        check_q(q)?;
        if self.lambda == 0.0 {
            return Ok(self.a);
        }
        Ok(self.a.min(self.alpha.survival_inv(q) / self.lambda))
    }

    fn cvar_q(&self, q: f64) -> Result<ExtReal> {
        let var = self.var_q(q)?;
        if var >= self.a {
            return Ok(ExtReal::Finite(self.a));
        }
        let tail = (self.alpha.integral(self.lambda * self.a) - self.alpha.integral(self.lambda * var)) / self.lambda;
        Ok(cvar_from_tail(var, tail, q))
    }

    fn upper_quantile(&self, u: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.a;
        }
        self.a.min(self.alpha.survival_inv(u) / self.lambda)
    }
}
