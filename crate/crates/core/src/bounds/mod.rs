//! Upper bounds on achievable approximation ratios.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{Alpha, HatDist, Valuation};
use crate::error::{domain, Error, Result};
use crate::numerics::{find_root_monotone, integrate, maximize_unimodal, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundWitness {
    /// `1 + ∫(5v − 3.5)⁺ dv` over `[0.6, 1]`, closed form and by quadrature.
    Uniform { integral: f64, quadrature: f64 },
    /// Minimizer `c*` of `g(c)` and whether it sits at `c = α/(2−α)`.
    GammaAlpha { c_star: f64, c_min: f64, at_boundary: bool },
    /// Shifted exponential where `UB(F̂, Γ) = Γ·mean(F̂)`.
    Concave { alpha: f64, lambda: f64, b: f64, mean: f64, ub_at_bound: f64 },
    /// No nontrivial ratio: the mean is infinite.
    Trivial { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub bound: f64,
    pub witness: BoundWitness,
}

/// `Γ_uni ≤ (1 + ∫_{0.6}^1 (5v − 3.5)⁺ dv)/1.4 = 7/8`.
pub fn uniform_upper() -> UpperBoundReport {
    // (5/2)·(3/10)² = 9/40, so the bound is (49/40)/(7/5) = 245/280.
    let (num, den) = (40 + 9, 40);
    let integral = num as f64 / den as f64;
    let quadrature = 1.0 + integrate(|v| (5.0 * v - 3.5).max(0.0), 0.6, 1.0, 1e-13);
    let bound = (num * 5) as f64 / (den * 7) as f64;
    UpperBoundReport { bound, witness: BoundWitness::Uniform { integral, quadrature } }
}

/// `g(c) = (c+1)/(c(c+1)·ln((c+1)/c) + 1)`.
pub fn gamma_alpha_g(c: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    (c + 1.0) / (c * (c + 1.0) * (1.0 / c).ln_1p() + 1.0)
}

fn gamma_alpha_g_prime(c: f64) -> f64 {
    let l = (1.0 / c).ln_1p();
    let d = c * (c + 1.0) * l + 1.0;
    let dd = (2.0 * c + 1.0) * l - 1.0;
    (d - (c + 1.0) * dd) / (d * d)
}

/// `Γ_α ≤ min_{c ≥ α/(2−α)} g(c)`.
pub fn gamma_alpha_upper(alpha: Alpha) -> UpperBoundReport {
    let a = alpha.value();
    let c_min = a / (2.0 - a);
    let tol = Tolerances::default().with_opt_rel(1e-12);
    if c_min > 0.0 && gamma_alpha_g_prime(c_min) >= 0.0 {
        return UpperBoundReport {
            bound: gamma_alpha_g(c_min),
            witness: BoundWitness::GammaAlpha { c_star: c_min, c_min, at_boundary: true },
        };
    }
    let mut hi = c_min + 1.0;
    while gamma_alpha_g(2.0 * hi) < gamma_alpha_g(hi) && hi < 1e12 {
        hi *= 2.0;
    }
    let (c, neg) = maximize_unimodal(|c| -gamma_alpha_g(c), c_min, 2.0 * hi, &tol);
    UpperBoundReport { bound: -neg, witness: BoundWitness::GammaAlpha { c_star: c, c_min, at_boundary: c <= c_min } }
}

/// Crossing of `UB(F̂_{λ,b}, Γ)` (decreasing in `Γ`) with `Γ·mean(F̂_{λ,b})`.
pub fn concave_upper(alpha: Alpha, lambda: f64, b: f64, tol: &Tolerances) -> Result<UpperBoundReport> {
    concave_upper_from(alpha, lambda, b, tol, false)
}

fn concave_upper_from(alpha: Alpha, lambda: f64, b: f64, tol: &Tolerances, flip: bool) -> Result<UpperBoundReport> {
    let d = HatDist::new(alpha, lambda, b)?;
    let mean = match d.mean().finite() {
        Some(m) => m,
        None => {
            return Ok(UpperBoundReport {
                bound: 0.0,
                witness: BoundWitness::Trivial { reason: "the shifted distribution has infinite mean, so only Γ = 0 is attainable".into() },
            })
        }
    };
    let ub = |g: f64| d.critical_interval(g, tol).map_or(f64::NAN, |c| c.ub.to_f64());
    let gap = |g: f64| if flip { g * mean - ub(g) } else { ub(g) - g * mean };
    let (lo, hi) = (1e-9, 1.0);
    if gap(lo).signum() == gap(hi).signum() {
        return Err(Error::Bracket { lo, hi, f_lo: gap(lo), f_hi: gap(hi) });
    }
    let fine = tol.with_root_abs(tol.root_abs.min(1e-12));
    let g = find_root_monotone(gap, lo, hi, 0.0, &fine)?;
    Ok(UpperBoundReport {
        bound: g,
        witness: BoundWitness::Concave { alpha: alpha.value(), lambda, b, mean, ub_at_bound: ub(g) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub alpha: f64,
    pub bound: f64,
    pub c_star: f64,
    pub at_boundary: bool,
}

/// `Γ_α` over a grid of `α`.
pub fn figure3_curve(alphas: &[f64]) -> Result<Vec<Figure3Row>> {
    alphas
        .iter()
        .map(|&a| {
            if !(0.0..=1.0).contains(&a) {
                return domain(format!("alpha must lie in [0, 1], got {a}"));
            }
            let r = gamma_alpha_upper(Alpha::new(a)?);
            let BoundWitness::GammaAlpha { c_star, at_boundary, .. } = r.witness else { unreachable!() };
            Ok(Figure3Row { alpha: a, bound: r.bound, c_star, at_boundary })
        })
        .collect()
}

pub fn write_figure3_csv<W: Write>(rows: &[Figure3Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "bound", "c_star"]).map_err(|e| Error::Domain(format!("csv: {e}")))?;
    for r in rows {
        w.serialize((r.alpha, r.bound, r.c_star)).map_err(|e| Error::Domain(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv: {e}")))
}
