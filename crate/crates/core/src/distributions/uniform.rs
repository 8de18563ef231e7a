use serde::{Deserialize, Serialize};

use super::{check_eta, check_q, OptPrice, Valuation};
use crate::error::{Error, Result};
use crate::numerics::ExtReal;

/// Uniform distribution on `[a, b]`; `a = b` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UniformRaw")]
pub struct UniformDist {
    pub a: f64,
    pub b: f64,
}

#[derive(Deserialize)]
struct UniformRaw {
    a: f64,
    b: f64,
}

impl TryFrom<UniformRaw> for UniformDist {
    type Error = Error;
    fn try_from(r: UniformRaw) -> Result<Self> {
        UniformDist::new(r.a, r.b)
    }
}

impl UniformDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) || !(b >= a) || !b.is_finite() || b == 0.0 {
            return Err(Error::InvalidDistribution(format!("uniform needs 0 <= a <= b, b > 0, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }
}

impl Valuation for UniformDist {
    fn survival_at_or_above(&self, v: f64) -> f64 {
        if v <= self.a {
            1.0
        } else if v >= self.b {
            0.0
        } else {
            (self.b - v) / (self.b - self.a)
        }
    }

    fn survival(&self, v: f64) -> f64 {
        if v < self.a {
            1.0
        } else if v >= self.b {
            0.0
        } else {
            (self.b - v) / (self.b - self.a)
        }
    }

    /// Piecewise: `p* = a` when `a ≥ b/2`, otherwise `p* = b/2` with
    /// revenue `b²/(4(b−a))`.
    fn opt_price(&self) -> OptPrice {
        if self.a >= 0.5 * self.b {
            OptPrice { price: self.a, revenue: self.a }
        } else {
            OptPrice {
                price: 0.5 * self.b,
                revenue: self.b * self.b / (4.0 * (self.b - self.a)),
            }
        }
    }

    fn support_max(&self) -> Option<f64> {
        Some(self.b)
    }

    fn mean(&self) -> ExtReal {
        ExtReal::Finite(0.5 * (self.a + self.b))
    }

    fn lnorm(&self, eta: f64) -> Result<ExtReal> {
        check_eta(eta)?;
        if self.a == self.b {
            return Ok(ExtReal::Finite(self.a));
        }
        let m = (self.b.powf(eta + 1.0) - self.a.powf(eta + 1.0)) / ((eta + 1.0) * (self.b - self.a));
        Ok(ExtReal::Finite(m.powf(1.0 / eta)))
    }

    fn var_q(&self, q: f64) -> Result<f64> {
        check_q(q)?;
        Ok(self.upper_quantile(q))
    }

    fn cvar_q(&self, q: f64) -> Result<ExtReal> {
        let var = self.var_q(q)?;
        Ok(ExtReal::Finite(0.5 * (var + self.b)))
    }

    fn upper_quantile(&self, u: f64) -> f64 {
        self.b - u * (self.b - self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn revenue_at_point_seven() {
        let u = UniformDist::new(0.6, 1.0).unwrap();
        assert!((u.revenue(0.7) - 0.525).abs() < 1e-15);
    }

    #[test]
    fn opt_is_piecewise() {
        let u = UniformDist::new(0.6, 1.0).unwrap();
        assert_eq!(u.opt_price(), OptPrice { price: 0.6, revenue: 0.6 });
        // Grid-scan oracle.
        let best = (0..=1_000_000).map(|i| u.revenue(i as f64 * 1e-6)).fold(0.0, f64::max);
        assert!((best - 0.6).abs() < 1e-12);
        let w = UniformDist::new(0.0, 1.0).unwrap().opt_price();
        assert_eq!((w.price, w.revenue), (0.5, 0.25));
    }

    #[test]
    fn stats() {
        let u = UniformDist::new(1.0, 3.0).unwrap();
        assert_eq!(u.mean(), ExtReal::Finite(2.0));
        assert!((u.lnorm(1.0).unwrap().to_f64() - 2.0).abs() < 1e-14);
        assert_eq!(u.cvar_q(1.0).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(u.cvar_q(0.5).unwrap(), ExtReal::Finite(2.5));
        assert!(UniformDist::new(2.0, 1.0).is_err());
    }
}
