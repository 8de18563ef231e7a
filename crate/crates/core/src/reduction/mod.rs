//! Worst-case ratios of statistic-based pricing policies.
//!
//! A policy prices at `ω·Ψ(F)` for a monotone, homogeneous statistic `Ψ`.
//! Nature's worst case lies in the boundary families F̌ and F̂, and by
//! homogeneity in their `a = 1` / `b = 1` slices, so the searches here are
//! over one or two scalar parameters.

mod constraints;
mod boundary;
mod search;

pub use constraints::constraint_value;
pub use boundary::{lemma6_shrink, lemma7_expand};
pub use search::{
    optimize_discount, sweep_parameter, worst_ratio_normalized, worst_ratio_two_param, DiscountOptimum,
    DiscountProblem, SweepKind, SweepRow, SweepTable,
};

use serde::{Deserialize, Serialize};

use crate::distributions::{Alpha, Valuation};
use crate::error::{domain, Error, Result};
use crate::numerics::{ExtReal, Tolerances};

/// A monotone, homogeneous statistic of the valuation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    #[serde(rename = "lnorm")]
    LNorm { eta: f64 },
    #[serde(rename = "cvar")]
    CVaR { q: f64 },
    #[serde(rename = "var")]
    VaR { q: f64 },
}

impl Statistic {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Statistic::Mean => Ok(()),
            Statistic::LNorm { eta } if eta > 0.0 && eta.is_finite() => Ok(()),
            Statistic::LNorm { eta } => domain(format!("norm exponent must be positive, got {eta}")),
            Statistic::CVaR { q } | Statistic::VaR { q } if q > 0.0 && q <= 1.0 => Ok(()),
            Statistic::CVaR { q } | Statistic::VaR { q } => domain(format!("q must lie in (0, 1], got {q}")),
        }
    }

    pub fn evaluate<D: Valuation + ?Sized>(&self, dist: &D) -> Result<ExtReal> {
        match *self {
            Statistic::Mean => Ok(dist.mean()),
            Statistic::LNorm { eta } => dist.lnorm(eta),
            Statistic::CVaR { q } => dist.cvar_q(q),
            Statistic::VaR { q } => dist.var_q(q).map(ExtReal::Finite),
        }
    }

    /// Whether the statistic is infinite on the shifted family at this α.
    pub fn diverges_on_hat(&self, alpha: Alpha) -> bool {
        match *self {
            Statistic::Mean | Statistic::CVaR { .. } => alpha.value() == 0.0,
            Statistic::LNorm { eta } => !alpha.moment_finite(eta),
            Statistic::VaR { .. } => false,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Statistic::Mean => "mean".to_string(),
            Statistic::LNorm { eta } => format!("lnorm({eta})"),
            Statistic::CVaR { q } => format!("cvar({q})"),
            Statistic::VaR { q } => format!("var({q})"),
        }
    }
}

/// Prices every distribution at `omega · Ψ(F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticPolicy {
    pub statistic: Statistic,
    pub omega: f64,
}

impl StatisticPolicy {
    pub fn new(statistic: Statistic, omega: f64) -> Result<Self> {
        statistic.validate()?;
        if !(omega > 0.0 && omega <= 1.0) {
            return domain(format!("discount must lie in (0, 1], got {omega}"));
        }
        Ok(Self { statistic, omega })
    }

    pub fn price<D: Valuation + ?Sized>(&self, dist: &D) -> Result<f64> {
        match self.statistic.evaluate(dist)? {
            ExtReal::Finite(v) => Ok(self.omega * v),
            ExtReal::PosInfinity => Err(Error::DivergentStatistic(self.statistic.label())),
        }
    }

    /// `Rev(ω·Ψ(F), F) / OPT(F)`.
    pub fn ratio<D: Valuation + ?Sized>(&self, dist: &D) -> Result<f64> {
        let p = self.price(dist)?;
        Ok(dist.revenue(p) / dist.opt_price().revenue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Check,
    Hat,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Check => "check",
            Family::Hat => "hat",
        }
    }
}

/// How a worst case was located.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMeta {
    pub method: String,
    pub grid_points: usize,
    pub refinements: usize,
    pub grid_step: f64,
    pub hat_lambda_max: f64,
}

/// A worst-case ratio and the distribution attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCertificate {
    pub gamma: f64,
    pub omega: f64,
    pub worst_family: Family,
    pub worst_lambda: f64,
    /// Truncation point `a` (check) or shift `b` (hat) of the witness.
    pub worst_loc: f64,
    pub search_meta: SearchMeta,
}

/// Grid and refinement settings for the ratio searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    /// Step of the coarse scan in the mapped λ coordinate.
    pub grid_step: f64,
    /// Local minima per family refined by golden-section search.
    pub refine_best: usize,
    /// Truncation of unbounded λ ranges.
    pub hat_lambda_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_step: f64,
    /// Scales (values of `a` or `b`) scanned by the two-parameter search.
    pub two_param_scales: Vec<f64>,
    pub tol: Tolerances,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            grid_step: 1e-3,
            refine_best: 3,
            hat_lambda_max: 1e3,
            omega_min: 0.5,
            omega_max: 1.0,
            omega_step: 1e-3,
            two_param_scales: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            tol: Tolerances::default().with_opt_rel(1e-7),
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        self.tol.validate()?;
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return domain(format!("grid_step must lie in (0, 0.5], got {}", self.grid_step));
        }
        if !(self.hat_lambda_max > 1.0) || !self.hat_lambda_max.is_finite() {
            return domain("hat_lambda_max must be finite and > 1");
        }
        if !(0.0 < self.omega_min && self.omega_min < self.omega_max && self.omega_max <= 1.0) {
            return domain("need 0 < omega_min < omega_max <= 1");
        }
        if !(self.omega_step > 0.0) {
            return domain("omega_step must be positive");
        }
        if self.two_param_scales.is_empty() || self.two_param_scales.iter().any(|s| !(*s > 0.0)) {
            return domain("two_param_scales must be nonempty and positive");
        }
        Ok(())
    }
}
