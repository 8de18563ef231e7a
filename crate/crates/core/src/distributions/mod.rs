//! α-regular valuation distributions: the generalized Pareto survival `E_α`,
//! the boundary families F̌ (truncated) and F̂ (shifted), a piecewise-linear
//! general encoding, and the uniform family.

mod alpha;
mod check;
mod general;
mod hat;
mod uniform;

pub use alpha::{pareto_survival, pareto_survival_inv, Alpha};
pub use check::CheckDist;
pub use general::GeneralRegular;
pub use hat::HatDist;
pub use uniform::UniformDist;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{find_root_monotone, integrate, ExtReal, Tolerances};

/// Monopoly price and the revenue it earns.
///
/// `price` is `+∞` only for α=0 shifted distributions with `λb < 1`, where
/// revenue increases towards `1/λ` without attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptPrice {
    pub price: f64,
    pub revenue: f64,
}

/// The set `[lb, ub]` of prices earning at least `gamma · OPT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalInterval {
    pub lb: f64,
    pub ub: ExtReal,
    pub gamma: f64,
}

/// Common interface of the valuation distributions.
pub trait Valuation {
    /// `P[X ≥ v]`, counting any atom at `v`.
    fn survival_at_or_above(&self, v: f64) -> f64;

    /// `P[X > v]`, the right-continuous survival.
    fn survival(&self, v: f64) -> f64;

    fn cdf(&self, v: f64) -> f64 {
        1.0 - self.survival(v)
    }

    fn revenue(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        p * self.survival_at_or_above(p)
    }

    fn opt_price(&self) -> OptPrice;

    /// Largest point of the support, if bounded.
    fn support_max(&self) -> Option<f64>;

    fn mean(&self) -> ExtReal;

    /// `(E[X^η])^(1/η)`.
    fn lnorm(&self, eta: f64) -> Result<ExtReal>;

    /// Upper `q`-quantile: the largest `x` with `P[X ≥ x] ≥ q`.
    fn var_q(&self, q: f64) -> Result<f64>;

    /// Mean of the upper `q` tail.
    fn cvar_q(&self, q: f64) -> Result<ExtReal>;

    /// Maps `u ∈ (0, 1]` to the value whose upper-tail probability is `u`.
    fn upper_quantile(&self, u: f64) -> f64;

    fn critical_interval(&self, gamma: f64, tol: &Tolerances) -> Result<CriticalInterval> {
        critical_interval_of(self, gamma, tol)
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return domain(format!("tail probability q must lie in (0, 1], got {q}"));
    }
    Ok(())
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return domain(format!("norm exponent must be positive, got {eta}"));
    }
    Ok(())
}

/// `CVaR_q = VaR_q + E[(X − VaR_q)⁺]/q`, given the tail integral above VaR.
pub(crate) fn cvar_from_tail(var: f64, tail: f64, q: f64) -> ExtReal {
    if tail.is_infinite() {
        ExtReal::PosInfinity
    } else {
        ExtReal::Finite(var + tail / q)
    }
}

/// `E[X^η]` as `∫₀¹ Q(u)^η du` for the upper quantile `Q`, after the
/// substitution `u = r^k` that flattens the `u → 0` singularity.
pub(crate) fn moment_by_quantile<D: Valuation + ?Sized>(dist: &D, eta: f64, kappa: f64, tol: &Tolerances) -> f64 {
    let k = 2.0 / (1.0 - kappa * eta).max(1e-3);
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let u = r.powf(k);
        if u <= 0.0 {
            return 0.0;
        }
        k * r.powf(k - 1.0) * dist.upper_quantile(u).powf(eta)
    };
    integrate(f, 0.0, 1.0, tol.quad_abs)
}

fn critical_interval_of<D: Valuation + ?Sized>(dist: &D, gamma: f64, tol: &Tolerances) -> Result<CriticalInterval> {
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("approximation level must lie in [0, 1], got {gamma}"));
    }
    let opt = dist.opt_price();
    let upper_support = dist.support_max().map_or(ExtReal::PosInfinity, ExtReal::Finite);
    if gamma == 0.0 {
        return Ok(CriticalInterval { lb: 0.0, ub: upper_support, gamma });
    }
    if gamma == 1.0 && opt.price.is_finite() {
        return Ok(CriticalInterval { lb: opt.price, ub: ExtReal::Finite(opt.price), gamma });
    }
    let target = gamma * opt.revenue;
    let rev = |p: f64| dist.revenue(p);

    let lb = if opt.price.is_finite() {
        find_root_monotone(rev, 0.0, opt.price, target, tol)?
    } else {
        let mut hi = 1.0;
        while rev(hi) < target {
            hi *= 2.0;
        }
        find_root_monotone(rev, 0.0, hi, target, tol)?
    };
    if !opt.price.is_finite() {
        return Ok(CriticalInterval { lb, ub: ExtReal::PosInfinity, gamma });
    }

    let ub = match dist.support_max() {
        Some(top) => {
            if rev(top) >= target {
                ExtReal::Finite(top)
            } else {
                ExtReal::Finite(find_root_monotone(rev, opt.price, top, target, tol)?)
            }
        }
        None => {
            let base = opt.price.max(f64::MIN_POSITIVE);
            let mut hi = 2.0 * base;
            loop {
                if rev(hi) < target {
                    break ExtReal::Finite(find_root_monotone(rev, opt.price, hi, target, tol)?);
                }
                if hi > 1e12 * base {
                    break ExtReal::PosInfinity;
                }
                hi *= 2.0;
            }
        }
    };
    Ok(CriticalInterval { lb, ub, gamma })
}

/// Any supported valuation distribution, tagged by `kind` in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Check(CheckDist),
    Hat(HatDist),
    General(GeneralRegular),
    Uniform(UniformDist),
}

macro_rules! dispatch {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            Distribution::Check($d) => $e,
            Distribution::Hat($d) => $e,
            Distribution::General($d) => $e,
            Distribution::Uniform($d) => $e,
        }
    };
}

impl Distribution {
    /// Regularity parameter; uniform distributions are MHR.
    pub fn alpha(&self) -> Alpha {
        match self {
            Distribution::Check(d) => d.alpha,
            Distribution::Hat(d) => d.alpha,
            Distribution::General(d) => d.alpha(),
            Distribution::Uniform(_) => Alpha::MHR,
        }
    }

    /// The same distribution with its value axis multiplied by `beta > 0`.
    pub fn scaled(&self, beta: f64) -> Result<Distribution> {
        if !(beta > 0.0) || !beta.is_finite() {
            return domain(format!("scale must be positive and finite, got {beta}"));
        }
        Ok(match self {
            Distribution::Check(d) => Distribution::Check(CheckDist::new(d.alpha, d.lambda / beta, d.a * beta)?),
            Distribution::Hat(d) => Distribution::Hat(HatDist::new(d.alpha, d.lambda / beta, d.b * beta)?),
            Distribution::General(d) => Distribution::General(d.scaled(beta)?),
            Distribution::Uniform(d) => Distribution::Uniform(UniformDist::new(d.a * beta, d.b * beta)?),
        })
    }

    /// `n` inverse-transform samples from a ChaCha8 stream seeded by `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_with(&mut rng)).collect()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U(0,1] keeps the quantile argument away from zero.
        let u = 1.0 - rng.random::<f64>();
        self.upper_quantile(u)
    }
}

impl Valuation for Distribution {
    fn survival_at_or_above(&self, v: f64) -> f64 {
        dispatch!(self, d => d.survival_at_or_above(v))
    }
    fn survival(&self, v: f64) -> f64 {
        dispatch!(self, d => d.survival(v))
    }
    fn revenue(&self, p: f64) -> f64 {
        dispatch!(self, d => d.revenue(p))
    }
    fn opt_price(&self) -> OptPrice {
        dispatch!(self, d => d.opt_price())
    }
    fn support_max(&self) -> Option<f64> {
        dispatch!(self, d => d.support_max())
    }
    fn mean(&self) -> ExtReal {
        dispatch!(self, d => d.mean())
    }
    fn lnorm(&self, eta: f64) -> Result<ExtReal> {
        dispatch!(self, d => d.lnorm(eta))
    }
    fn var_q(&self, q: f64) -> Result<f64> {
        dispatch!(self, d => d.var_q(q))
    }
    fn cvar_q(&self, q: f64) -> Result<ExtReal> {
        dispatch!(self, d => d.cvar_q(q))
    }
    fn upper_quantile(&self, u: f64) -> f64 {
        dispatch!(self, d => d.upper_quantile(u))
    }
}

impl From<CheckDist> for Distribution {
    fn from(d: CheckDist) -> Self {
        Distribution::Check(d)
    }
}

impl From<HatDist> for Distribution {
    fn from(d: HatDist) -> Self {
        Distribution::Hat(d)
    }
}

impl From<GeneralRegular> for Distribution {
    fn from(d: GeneralRegular) -> Self {
        Distribution::General(d)
    }
}

impl From<UniformDist> for Distribution {
    fn from(d: UniformDist) -> Self {
        Distribution::Uniform(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn point_mass_interval() {
        let d = CheckDist::point_mass(2.0).unwrap();
        for g in [0.3, 0.8] {
            let ci = d.critical_interval(g, &tol()).unwrap();
            assert!((ci.lb - g * 2.0).abs() < 1e-9);
            assert_eq!(ci.ub, ExtReal::Finite(2.0));
        }
        let ci = d.critical_interval(1.0, &tol()).unwrap();
        assert_eq!((ci.lb, ci.ub), (2.0, ExtReal::Finite(2.0)));
    }

    #[test]
    fn tangent_point_lower_bound() {
        let d = CheckDist::new(Alpha::MHR, 1.0, 0.47525).unwrap();
        let ci = d.critical_interval(0.8, &tol()).unwrap();
        assert!((ci.lb - 0.32821).abs() < 1e-5, "{}", ci.lb);
    }

    #[test]
    fn hat_upper_bound_at_concave_limit() {
        let d = HatDist::new(Alpha::MHR, 1.0, 1.7).unwrap();
        let ci = d.critical_interval(0.801, &tol()).unwrap();
        let ub = ci.ub.to_f64();
        // Bisection oracle on p·e^{−(p−1.7)} = 0.801·1.7 over [1.7, 10].
        let (mut lo, mut hi) = (1.7f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (-(mid - 1.7)).exp() >= 0.801 * 1.7 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((ub - lo).abs() < 1e-9);
        assert!((ub - 2.1627).abs() < 5e-4);
        assert!((ci.lb - 0.801 * 1.7).abs() < 1e-9);
    }

    #[test]
    fn regular_hat_has_infinite_upper_bound() {
        let d = HatDist::new(Alpha::REGULAR, 1.0, 1.0).unwrap();
        // Revenue tends to 1/λ = 1 = OPT, so every Γ < 1 keeps ub infinite.
        let ci = d.critical_interval(0.9, &tol()).unwrap();
        assert_eq!(ci.ub, ExtReal::PosInfinity);
        let ci = CheckDist::new(Alpha::MHR, 1.0, 3.0).unwrap().critical_interval(0.0, &tol()).unwrap();
        assert_eq!((ci.lb, ci.ub), (0.0, ExtReal::Finite(3.0)));
        assert!(d.critical_interval(1.5, &tol()).is_err());
    }

    #[test]
    fn check_upper_bound_at_the_atom() {
        let d = CheckDist::new(Alpha::MHR, 0.5, 1.0).unwrap();
        let ci = d.critical_interval(0.9, &tol()).unwrap();
        assert_eq!(ci.ub, ExtReal::Finite(1.0));
        let d = CheckDist::new(Alpha::MHR, 1.0, 5.0).unwrap();
        let ci = d.critical_interval(0.9, &tol()).unwrap();
        let ub = ci.ub.to_f64();
        assert!(ub > 1.0 && ub < 5.0);
        assert!((d.revenue(ub) - 0.9 * (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn sampling_examples() {
        let delta: Distribution = CheckDist::point_mass(1.5).unwrap().into();
        assert!(delta.sample(1, 100).iter().all(|&x| x == 1.5));

        let n = 1_000_000;
        let c: Distribution = CheckDist::new(Alpha::MHR, 1.0, 50.0).unwrap().into();
        let xs = c.sample(3, n);
        let m = xs.iter().sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{m}");

        let h: Distribution = HatDist::new(Alpha::MHR, 2.0, 1.0).unwrap().into();
        let xs = h.sample(4, n);
        let m = xs.iter().sum::<f64>() / n as f64;
        assert!((m - 1.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{m}");
        assert_eq!(h.sample(9, 10), h.sample(9, 10));
    }

    #[test]
    fn json_round_trip() {
        let d: Distribution = serde_json::from_str(r#"{"kind":"hat","alpha":1,"lambda":1,"b":1.7}"#).unwrap();
        assert_eq!(d.mean(), ExtReal::Finite(2.7));
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Distribution>(&s).unwrap(), d);
        assert!(serde_json::from_str::<Distribution>(r#"{"kind":"check","alpha":1,"lambda":-1,"a":1}"#).is_err());
        let g = r#"{"kind":"general","alpha":0.5,"points":[[0,0],[1,0.5]],"tail_slope":2.0}"#;
        assert!(matches!(serde_json::from_str::<Distribution>(g).unwrap(), Distribution::General(_)));
    }

    #[test]
    fn scaling_preserves_ratios() {
        let d: Distribution = CheckDist::new(Alpha::new(0.5).unwrap(), 0.8, 2.0).unwrap().into();
        let s = d.scaled(3.0).unwrap();
        assert!((s.mean().to_f64() - 3.0 * d.mean().to_f64()).abs() < 1e-12);
        assert!((s.opt_price().revenue - 3.0 * d.opt_price().revenue).abs() < 1e-12);
    }
}
