//! Shared numerical kernel: bracketing root finder, golden-section search,
//! incomplete gamma functions, adaptive quadrature and a dense simplex solver.
//!
//! Everything here is pure and re-entrant.

mod ext;
mod gamma;
mod lp;
mod quad;
mod roots;

pub use ext::ExtReal;
pub use gamma::{gamma, gamma_lower, gamma_upper, gamma_upper_scaled, ln_gamma};
pub use lp::{lp_solve, lp_solve_with, DenseLP, LPSolution, LpStatus, ObjectiveSense, PivotRule, RowSense};
pub use quad::{integrate, integrate_to_infinity};
pub use roots::{find_root_monotone, maximize_unimodal};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Numerical tolerances shared by the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Bracket width at which bisection stops.
    pub root_abs: f64,
    /// Absolute error target for quadrature and special functions.
    pub quad_abs: f64,
    /// Feasibility tolerance for LP constraints.
    pub lp_feas: f64,
    /// Relative bracket width at which golden-section search stops.
    pub opt_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root_abs: 1e-10,
            quad_abs: 1e-10,
            lp_feas: 1e-9,
            opt_rel: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("root_abs", self.root_abs),
            ("quad_abs", self.quad_abs),
            ("lp_feas", self.lp_feas),
            ("opt_rel", self.opt_rel),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("tolerance {name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }

    /// Same tolerances with a tighter golden-section stopping rule.
    pub fn with_opt_rel(mut self, opt_rel: f64) -> Self {
        self.opt_rel = opt_rel;
        self
    }

    pub fn with_root_abs(mut self, root_abs: f64) -> Self {
        self.root_abs = root_abs;
        self
    }
}
