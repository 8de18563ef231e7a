use serde::{Deserialize, Serialize};

use super::{check_eta, check_q, cvar_from_tail, moment_by_quantile, Alpha, CheckDist, HatDist, OptPrice, Valuation};
use crate::error::{Error, Result};
use crate::numerics::{ExtReal, Tolerances};

/// An α-regular distribution with survival `E_α(ψ(v))` for a convex,
/// nondecreasing, piecewise-linear `ψ` with `ψ(0) = 0`.
///
/// `ψ` has slope `slopes[i]` on `[knots[i], knots[i+1])`, the last slope
/// continuing to infinity. An optional `cap` truncates the support, leaving
/// an atom of mass `E_α(ψ(cap))` at `cap`.
///
/// Serialized as breakpoints `points = [[v, ψ(v)], ...]` starting at
/// `[0, 0]`, the slope after the last breakpoint, and the optional cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneralRaw", into = "GeneralRaw")]
pub struct GeneralRegular {
    alpha: Alpha,
    knots: Vec<f64>,
    psi_at: Vec<f64>,
    slopes: Vec<f64>,
    cap: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct GeneralRaw {
    alpha: Alpha,
    points: Vec<[f64; 2]>,
    tail_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<f64>,
}

impl TryFrom<GeneralRaw> for GeneralRegular {
    type Error = Error;
    fn try_from(r: GeneralRaw) -> Result<Self> {
        let pts: Vec<(f64, f64)> = r.points.iter().map(|p| (p[0], p[1])).collect();
        GeneralRegular::from_points(r.alpha, &pts, r.tail_slope, r.cap)
    }
}

impl From<GeneralRegular> for GeneralRaw {
    fn from(g: GeneralRegular) -> Self {
        GeneralRaw {
            alpha: g.alpha,
            points: g.knots.iter().zip(&g.psi_at).map(|(&v, &p)| [v, p]).collect(),
            tail_slope: *g.slopes.last().expect("at least one segment"),
            cap: g.cap,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidDistribution(msg.into()))
}

impl GeneralRegular {
    /// Builds `ψ` from its knots (starting at 0) and per-segment slopes.
    pub fn from_slopes(alpha: Alpha, knots: Vec<f64>, slopes: Vec<f64>, cap: Option<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != slopes.len() {
            return invalid("need one slope per knot and at least one knot");
        }
        if knots[0] != 0.0 {
            return invalid("first knot must be 0");
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|k| !k.is_finite()) {
            return invalid("knots must be finite and strictly increasing");
        }
        if slopes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return invalid("slopes must be finite and nonnegative");
        }
        if slopes.windows(2).any(|w| w[1] < w[0]) {
            return invalid("slopes must be nondecreasing (psi convex)");
        }
        if let Some(c) = cap {
            if !(c > 0.0) || !c.is_finite() {
                return invalid(format!("cap must be finite and positive, got {c}"));
            }
        } else if *slopes.last().unwrap() <= 0.0 {
            return invalid("an uncapped distribution needs a positive final slope");
        }
        let mut psi_at = Vec::with_capacity(knots.len());
        psi_at.push(0.0);
        for i in 1..knots.len() {
            psi_at.push(psi_at[i - 1] + slopes[i - 1] * (knots[i] - knots[i - 1]));
        }
        let g = Self { alpha, knots, psi_at, slopes, cap };
        if g.find_opt_price().is_none() {
            return invalid("revenue has no maximizer (alpha = 0 with unbounded increasing revenue)");
        }
        Ok(g)
    }

    /// Builds `ψ` from breakpoints `(v_i, ψ_i)` with `(v_0, ψ_0) = (0, 0)` and
    /// the slope beyond the last breakpoint.
    pub fn from_points(alpha: Alpha, points: &[(f64, f64)], tail_slope: f64, cap: Option<f64>) -> Result<Self> {
        if points.first() != Some(&(0.0, 0.0)) {
            return invalid("breakpoints must start at (0, 0)");
        }
        let knots: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut slopes: Vec<f64> = points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        slopes.push(tail_slope);
        Self::from_slopes(alpha, knots, slopes, cap)
    }

    pub fn from_check(d: &CheckDist) -> Result<Self> {
        Self::from_slopes(d.alpha, vec![0.0], vec![d.lambda], Some(d.a))
    }

    pub fn from_hat(d: &HatDist) -> Result<Self> {
        if d.b > 0.0 {
            Self::from_slopes(d.alpha, vec![0.0, d.b], vec![0.0, d.lambda], None)
        } else {
            Self::from_slopes(d.alpha, vec![0.0], vec![d.lambda], None)
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, v: f64) -> usize {
        self.knots.partition_point(|&k| k <= v).saturating_sub(1)
    }

    /// `ψ(v)` for `v ≥ 0`.
    pub fn psi(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let i = self.segment(v);
        self.psi_at[i] + self.slopes[i] * (v - self.knots[i])
    }

    /// Right derivative of `ψ` at `v`.
    pub fn right_slope(&self, v: f64) -> f64 {
        self.slopes[self.segment(v.max(0.0))]
    }

    /// Largest `x` with `ψ(x) ≤ y`, before truncation.
    fn psi_inv(&self, y: f64) -> f64 {
        let i = self.psi_at.partition_point(|&p| p <= y).saturating_sub(1);
        let s = self.slopes[i];
        if i + 1 < self.knots.len() {
            // ψ crosses y inside segment i, so s > 0 here.
            return self.knots[i] + (y - self.psi_at[i]) / s;
        }
        if s > 0.0 {
            self.knots[i] + (y - self.psi_at[i]) / s
        } else {
            f64::INFINITY
        }
    }

    fn upper_end(&self) -> f64 {
        self.cap.unwrap_or(f64::INFINITY)
    }

    // Revenue v·E(ψ(v)) increases while 1 + (1−α)ψ(v) − vψ'(v) > 0; that
    // quantity decreases in v, so the first sign change is the maximizer.
    fn find_opt_price(&self) -> Option<f64> {
        let al = self.alpha.value();
        let k = if self.alpha.is_mhr() { 0.0 } else { 1.0 - al };
        let top = self.upper_end();
        for i in 0..self.knots.len() {
            let start = self.knots[i];
            if start >= top {
                return Some(top);
            }
            let end = self.knots.get(i + 1).copied().unwrap_or(f64::INFINITY).min(top);
            let s = self.slopes[i];
            let g0 = 1.0 + k * self.psi_at[i] - s * start;
            if g0 <= 0.0 {
                return Some(start);
            }
            if al * s > 0.0 {
                let root = start + g0 / (al * s);
                if root < end {
                    return Some(root);
                }
            }
            if end == top && top.is_finite() {
                return Some(top);
            }
        }
        None
    }

    /// `∫_lo^hi P[X > v] dv` computed exactly segment by segment.
    pub fn integral_survival(&self, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(self.upper_end());
        if !(hi > lo) {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..self.knots.len() {
            let seg_lo = self.knots[i].max(lo);
            let seg_hi = self.knots.get(i + 1).copied().unwrap_or(f64::INFINITY).min(hi);
            if seg_hi <= seg_lo {
                continue;
            }
            let s = self.slopes[i];
            let p_lo = self.psi(seg_lo);
            total += if s == 0.0 {
                (seg_hi - seg_lo) * self.alpha.survival(p_lo)
            } else if seg_hi.is_finite() {
                (self.alpha.integral(self.psi(seg_hi)) - self.alpha.integral(p_lo)) / s
            } else {
                self.alpha.tail_integral(p_lo) / s
            };
        }
        total
    }

    /// The same distribution with its value axis multiplied by `beta`.
    pub fn scaled(&self, beta: f64) -> Result<Self> {
        Self::from_slopes(
            self.alpha,
            self.knots.iter().map(|k| k * beta).collect(),
            self.slopes.iter().map(|s| s / beta).collect(),
            self.cap.map(|c| c * beta),
        )
    }
}

impl Valuation for GeneralRegular {
    fn survival_at_or_above(&self, v: f64) -> f64 {
        if v <= 0.0 {
            1.0
        } else if v <= self.upper_end() {
            self.alpha.survival(self.psi(v))
        } else {
            0.0
        }
    }

    fn survival(&self, v: f64) -> f64 {
        if v < 0.0 {
            1.0
        } else if v < self.upper_end() {
            self.alpha.survival(self.psi(v))
        } else {
            0.0
        }
    }

    fn opt_price(&self) -> OptPrice {
        let price = self.find_opt_price().expect("validated at construction");
        OptPrice { price, revenue: self.revenue(price) }
    }

    fn support_max(&self) -> Option<f64> {
        self.cap
    }

    fn mean(&self) -> ExtReal {
        self.integral_survival(0.0, f64::INFINITY).into()
    }

    fn lnorm(&self, eta: f64) -> Result<ExtReal> {
        check_eta(eta)?;
        if self.cap.is_none() && !self.alpha.moment_finite(eta) {
            return Ok(ExtReal::PosInfinity);
        }
        if eta == 1.0 {
            return Ok(self.mean());
        }
        let kappa = if self.cap.is_some() { 0.0 } else { self.alpha.tail_exponent() };
        let m = moment_by_quantile(self, eta, kappa, &Tolerances::default());
        Ok(ExtReal::Finite(m.powf(1.0 / eta)))
    }

    fn var_q(&self, q: f64) -> Result<f64> {
        check_q(q)?;
        Ok(self.upper_quantile(q))
    }

    fn cvar_q(&self, q: f64) -> Result<ExtReal> {
        let var = self.var_q(q)?;
        let tail = self.integral_survival(var, f64::INFINITY);
        Ok(cvar_from_tail(var, tail, q))
    }

    fn upper_quantile(&self, u: f64) -> f64 {
        self.psi_inv(self.alpha.survival_inv(u)).min(self.upper_end())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, maximize_unimodal};

    fn al(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn rejects_nonconvex_and_bad_knots() {
        assert!(GeneralRegular::from_slopes(Alpha::MHR, vec![0.0, 1.0], vec![2.0, 1.0], None).is_err());
        assert!(GeneralRegular::from_slopes(Alpha::MHR, vec![0.5], vec![1.0], None).is_err());
        assert!(GeneralRegular::from_slopes(Alpha::MHR, vec![0.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(GeneralRegular::from_points(Alpha::MHR, &[(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], 5.0, None).is_err());
        // α = 0 with ψ linear of slope 1: revenue v/(1+v) has no maximizer.
        assert!(GeneralRegular::from_slopes(Alpha::REGULAR, vec![0.0], vec![1.0], None).is_err());
    }

    #[test]
    fn matches_boundary_families() {
        for alpha in [0.0, 0.4, 1.0] {
            let c = CheckDist::new(al(alpha), 0.7, 1.3).unwrap();
            let g = GeneralRegular::from_check(&c).unwrap();
            assert!((g.opt_price().price - c.opt_price().price).abs() < 1e-12);
            assert!((g.mean().to_f64() - c.mean().to_f64()).abs() < 1e-12);
            assert!((g.cvar_q(0.4).unwrap().to_f64() - c.cvar_q(0.4).unwrap().to_f64()).abs() < 1e-12);
            for v in [0.0, 0.5, 1.3, 1.4] {
                assert_eq!(g.survival_at_or_above(v), c.survival_at_or_above(v));
            }
        }
        for alpha in [0.3, 1.0] {
            let h = HatDist::new(al(alpha), 0.6, 1.2).unwrap();
            let g = GeneralRegular::from_hat(&h).unwrap();
            assert!((g.opt_price().price - h.opt_price().price).abs() < 1e-12);
            assert!((g.mean().to_f64() - h.mean().to_f64()).abs() < 1e-12);
            assert!((g.var_q(0.3).unwrap() - h.var_q(0.3).unwrap()).abs() < 1e-12);
            assert!((g.cvar_q(0.3).unwrap().to_f64() - h.cvar_q(0.3).unwrap().to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn opt_price_matches_golden_section() {
        let g = GeneralRegular::from_slopes(al(0.6), vec![0.0, 0.8, 2.0], vec![0.3, 0.9, 2.5], None).unwrap();
        let tol = Tolerances::default().with_opt_rel(1e-10);
        let (x, fx) = maximize_unimodal(|p| g.revenue(p), 0.0, 10.0, &tol);
        let o = g.opt_price();
        assert!((o.price - x).abs() < 1e-6);
        assert!((o.revenue - fx).abs() < 1e-12);
    }

    #[test]
    fn integrals_match_quadrature() {
        let g = GeneralRegular::from_slopes(al(0.5), vec![0.0, 1.0, 1.5], vec![0.5, 1.0, 3.0], Some(4.0)).unwrap();
        let q = integrate(|v| g.survival(v), 0.0, 4.0, 1e-13);
        assert!((g.mean().to_f64() - q).abs() < 1e-9);
        let n2 = g.lnorm(2.0).unwrap().to_f64();
        let m2 = integrate(|v| 2.0 * v * g.survival(v), 0.0, 4.0, 1e-13);
        assert!((n2 - m2.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn serde_round_trip() {
        let g = GeneralRegular::from_slopes(al(0.5), vec![0.0, 1.0], vec![0.5, 2.0], Some(3.0)).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GeneralRegular = serde_json::from_str(&s).unwrap();
        assert_eq!(back.knots(), g.knots());
        for (a, b) in back.slopes().iter().zip(g.slopes()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
