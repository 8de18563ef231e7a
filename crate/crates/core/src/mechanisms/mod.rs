//! Hidden pricing rules `h(s, x)`: the buyer reports a scalar summary `x`,
//! the seller draws a hidden sample `s` from the reported distribution and
//! charges `h(s, x)` if the buyer accepts the expected price.

mod sim;
mod uniform;

pub use sim::{simulate_mechanism, simulate_mechanism_with, Experiment, Estimate, SimConfig, SimReport};
pub use uniform::{uniform_mechanism_ratio, uniform_worst, UniformWorst};

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, HatDist, Valuation};
use crate::error::{domain, Error, Result};
use crate::hiddenlp::{CertReport, PiecewiseRule};
use crate::numerics::{integrate, integrate_to_infinity, maximize_unimodal, ExtReal, Tolerances};

pub const UNIFORM_DISCOUNT: f64 = 7.0 / 8.0;
pub const UNIFORM_THRESHOLD: f64 = 7.0 / 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoringRule {
    /// `ω·s`.
    Mean { omega: f64 },
    /// `ω·((η−1)x + s^η/x^{η−1})/η`; truthful report `x = ‖F‖_η`.
    LNorm { omega: f64, eta: f64 },
    /// `ω·(x + (s − x)⁺/q)`; truthful report `x = VaR_q`.
    CVaR { omega: f64, q: f64 },
    /// `h(λs)/λ` for a certified step rule computed at normalized scale.
    Table { rule: PiecewiseRule, lambda: f64 },
    /// `discount·s`, accepted when `v ≥ threshold·(a + b)` for `U[a, b]`.
    Uniform { discount: f64, threshold_coeff: f64 },
}

impl ScoringRule {
    pub fn uniform() -> Self {
        ScoringRule::Uniform { discount: UNIFORM_DISCOUNT, threshold_coeff: UNIFORM_THRESHOLD }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ScoringRule::Mean { omega } => *omega >= 0.0 && omega.is_finite(),
            ScoringRule::LNorm { omega, eta } => *omega >= 0.0 && omega.is_finite() && *eta >= 1.0 && eta.is_finite(),
            ScoringRule::CVaR { omega, q } => *omega >= 0.0 && omega.is_finite() && *q > 0.0 && *q <= 1.0,
            ScoringRule::Table { lambda, .. } => *lambda > 0.0 && lambda.is_finite(),
            ScoringRule::Uniform { discount, threshold_coeff } => *discount >= 0.0 && *threshold_coeff >= 0.0,
        };
        if !ok {
            return domain(format!("invalid scoring rule parameters: {self:?}"));
        }
        Ok(())
    }

    /// Whether the payment depends on a report.
    pub fn has_report(&self) -> bool {
        matches!(self, ScoringRule::LNorm { .. } | ScoringRule::CVaR { .. })
    }

    /// Rule used for `F̂_{λ,b}` by the certified construction: the step rule
    /// for `𝔹`'s smallest point `≥ λb`, or the linear rule `c·s` beyond `b̄`.
    pub fn for_certified_hat(cert: &CertReport, dist: &HatDist) -> Result<Self> {
        let nb = dist.lambda * dist.b;
        if nb < cert.grid.b_min {
            return domain(format!("normalized shift λb = {nb} lies below the grid"));
        }
        if nb > cert.grid.b_max {
            return Ok(ScoringRule::Mean { omega: cert.c_of_gamma.c });
        }
        let rule = cert
            .rule_for(nb)
            .ok_or_else(|| Error::Domain(format!("certificate has no rule covering b = {nb}")))?;
        Ok(ScoringRule::Table { rule: rule.clone(), lambda: dist.lambda })
    }
}

/// `h(s, x)`.
pub fn payment(rule: &ScoringRule, s: f64, report: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return domain(format!("sample must be nonnegative, got {s}"));
    }
    Ok(match rule {
        ScoringRule::Mean { omega } => omega * s,
        ScoringRule::LNorm { omega, eta } => {
            if !(report > 0.0) {
                return domain(format!("norm report must be positive, got {report}"));
            }
            omega * ((eta - 1.0) * report + s.powf(*eta) / report.powf(eta - 1.0)) / eta
        }
        ScoringRule::CVaR { omega, q } => omega * (report + (s - report).max(0.0) / q),
        ScoringRule::Table { rule, lambda } => rule.eval(lambda * s) / lambda,
        ScoringRule::Uniform { discount, .. } => discount * s,
    })
}

// E(S − x)⁺ = ∫ₓ^∞ P[S > v] dv.
fn excess<D: Valuation + ?Sized>(dist: &D, x: f64, tol: &Tolerances) -> f64 {
    let x = x.max(0.0);
    match dist.support_max() {
        Some(top) if top <= x => 0.0,
        Some(top) => integrate(|v| dist.survival(v), x, top, tol.quad_abs),
        None => integrate_to_infinity(|v| dist.survival(v), x, tol.quad_abs),
    }
}

fn finite(v: ExtReal) -> Result<f64> {
    v.finite().ok_or(Error::DivergentPayment)
}

/// `E_{s∼F}[h(s, x)]`; the report is ignored by rules without one.
pub fn expected_payment(rule: &ScoringRule, dist: &Distribution, report: f64, tol: &Tolerances) -> Result<f64> {
    rule.validate()?;
    match rule {
        ScoringRule::Mean { omega } => Ok(omega * finite(dist.mean())?),
        ScoringRule::Uniform { discount, .. } => Ok(discount * finite(dist.mean())?),
        ScoringRule::LNorm { omega, eta } => {
            if !(report > 0.0) {
                return domain(format!("norm report must be positive, got {report}"));
            }
            let m = finite(dist.lnorm(*eta)?)?.powf(*eta);
            Ok(omega * ((eta - 1.0) * report + m / report.powf(eta - 1.0)) / eta)
        }
        ScoringRule::CVaR { omega, q } => Ok(omega * (report + excess(dist, report, tol) / q)),
        ScoringRule::Table { rule, lambda } => {
            let g = &rule.grid;
            let mut total = rule.values[0];
            for i in 1..rule.values.len() {
                let d = rule.values[i] - rule.values[i - 1];
                if d != 0.0 {
                    total += d * dist.survival(g.a(i - 1) / lambda);
                }
            }
            let tail = lambda * excess(dist, g.a_bar() / lambda, tol);
            if !tail.is_finite() {
                return Err(Error::DivergentPayment);
            }
            Ok((total + rule.tail_slope * tail) / lambda)
        }
    }
}

/// Minimizer of the expected payment over reports, with the closed-form
/// statistic it should reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestReport {
    /// `None` for rules without a report.
    pub report: Option<f64>,
    pub expected_payment: f64,
    /// `VaR_q` or `‖F‖_η` for report rules.
    pub statistic: Option<f64>,
    /// `ω·CVaR_q` or `ω·‖F‖_η` for report rules.
    pub statistic_payment: Option<f64>,
}

impl BestReport {
    /// Relative gaps `(report, payment)` against the closed forms.
    pub fn identity_errors(&self) -> Option<(f64, f64)> {
        let (x, s) = (self.report?, self.statistic?);
        let p = self.statistic_payment?;
        Some(((x - s).abs() / s.abs().max(1e-300), (self.expected_payment - p).abs() / p.abs().max(1e-300)))
    }
}

/// Golden-section minimization of `x ↦ E[h(s, x)]`, which is convex in `x`.
pub fn best_report(rule: &ScoringRule, dist: &Distribution, tol: &Tolerances) -> Result<BestReport> {
    if !rule.has_report() {
        let p = expected_payment(rule, dist, f64::NAN, tol)?;
        return Ok(BestReport { report: None, expected_payment: p, statistic: None, statistic_payment: None });
    }
    let f = |x: f64| expected_payment(rule, dist, x, tol).unwrap_or(f64::INFINITY);
    let floor = match rule {
        ScoringRule::LNorm { .. } => 1e-12,
        _ => 0.0,
    };
    let mut hi = dist.upper_quantile(0.5).max(1e-6);
    let mut guard = 0;
    while f(2.0 * hi) < f(hi) {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::DivergentPayment);
        }
    }
    let fine = tol.with_opt_rel(tol.opt_rel.min(1e-12));
    let (x, neg) = maximize_unimodal(|x| -f(x), floor, 2.0 * hi, &fine);
    let expected_payment = -neg;
    let (statistic, statistic_payment) = match rule {
        ScoringRule::CVaR { omega, q } => (dist.var_q(*q)?, omega * finite(dist.cvar_q(*q)?)?),
        ScoringRule::LNorm { omega, eta } => {
            let n = finite(dist.lnorm(*eta)?)?;
            (n, omega * n)
        }
        _ => unreachable!(),
    };
    Ok(BestReport {
        report: Some(x),
        expected_payment,
        statistic: Some(statistic),
        statistic_payment: Some(statistic_payment),
    })
}

/// The posted price a buyer faces: the expected payment at the best report.
///
/// Report rules use the closed-form statistic, so the price is exact.
pub fn expected_price(rule: &ScoringRule, dist: &Distribution, tol: &Tolerances) -> Result<(f64, Option<f64>)> {
    rule.validate()?;
    match rule {
        ScoringRule::CVaR { omega, q } => Ok((omega * finite(dist.cvar_q(*q)?)?, Some(dist.var_q(*q)?))),
        ScoringRule::LNorm { omega, eta } => {
            let n = finite(dist.lnorm(*eta)?)?;
            Ok((omega * n, Some(n)))
        }
        _ => Ok((expected_payment(rule, dist, f64::NAN, tol)?, None)),
    }
}
