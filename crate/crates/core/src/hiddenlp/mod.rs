//! Discretized certification of hidden-pricing ratios for MHR valuations.
//!
//! A rule `h^b` is a nondecreasing step function on the grid `𝔸` with a
//! linear tail of slope `e`. For every `b ∈ 𝔹` a linear program searches for
//! such a rule whose expectation under every truncated exponential `F̌_{λ,a}`
//! clears the lower end of its critical interval while its expectation under
//! the shifted exponential `F̂_{1,b}` stays below the upper end.

mod dual;
mod feasibility;
mod grid;
mod rule;

pub use dual::{dual_lp_bound, DualWitness, WeightPoint};
pub use feasibility::{
    c_of_gamma, feasibility_lp, max_certified_gamma, verify_gamma, CertReport, CofGamma, FeasibilityResult, LbTable,
};
pub use grid::{GridProfile, GridSpec};
pub use rule::{expect_rule_check, expect_rule_hat, PiecewiseRule};

use crate::distributions::{Alpha, CheckDist, HatDist, Valuation};
use crate::error::Result;
use crate::numerics::Tolerances;

/// `LB(F̌_{λ,a}, Γ)` for the MHR truncated exponential.
pub fn lb_check(lambda: f64, a: f64, gamma: f64, tol: &Tolerances) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(gamma * a);
    }
    let a = a.min(1.0 / lambda);
    Ok(CheckDist::new(Alpha::MHR, lambda, a)?.critical_interval(gamma, tol)?.lb)
}

/// `UB(F̂_{1,b}, Γ)` for the MHR shifted exponential.
pub fn ub_hat(b: f64, gamma: f64, tol: &Tolerances) -> Result<f64> {
    let ci = HatDist::new(Alpha::MHR, 1.0, b)?.critical_interval(gamma, tol)?;
    Ok(ci.ub.to_f64())
}
