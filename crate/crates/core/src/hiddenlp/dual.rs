use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, GRID_EPS};
use super::{lb_check, ub_hat};
use crate::error::{domain, Error, Result};
use crate::numerics::{lp_solve, DenseLP, LpStatus, ObjectiveSense, RowSense, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPoint {
    pub a: f64,
    pub lambda: f64,
    pub weight: f64,
}

/// Optimal mixture of truncated exponentials in the discretized primal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualWitness {
    /// Nonzero weights `K(a, λ)`.
    pub k: Vec<WeightPoint>,
    pub value: f64,
    pub b: f64,
    pub gamma: f64,
    /// `UB(F̂_{1,b}, Γ)`.
    pub ub: f64,
    /// `value > ub`: no concave monotone policy reaches `Γ` on this grid.
    pub upper_bound_violated: bool,
    /// Largest violation of the dominance rows by the returned weights.
    pub max_violation: f64,
    pub variables: usize,
}

/// Maximizes `Σ K(a,λ)·LB(F̌_{λ,a}, Γ)` over probability weights on
/// `{(a, λ) ∈ 𝔸 × 𝕃 : a ≤ dual_a_max, λa ≤ 1}` subject to
/// `Σ K(a,λ)·P_{F̌_{λ,a}}[S > s] ≤ P_{F̂_{1,b}}[S > s + Δa]` for all `s ∈ 𝔸`.
pub fn dual_lp_bound(gamma: f64, b: f64, grid: &GridSpec, tol: &Tolerances) -> Result<DualWitness> {
    grid.validate()?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("approximation level must lie in (0, 1), got {gamma}"));
    }
    if !(b >= grid.b_min && b <= grid.b_max) {
        return domain(format!("b must lie in [{}, {}], got {b}", grid.b_min, grid.b_max));
    }
    let mut points = Vec::new();
    for i in 0..=grid.n_a() {
        let a = grid.a(i);
        if a > grid.dual_a_max + GRID_EPS {
            break;
        }
        for k in 0..=grid.n_lambda() {
            let l = grid.lambda(k);
            if l * a > 1.0 + GRID_EPS {
                break;
            }
            points.push((a, l.min(1.0 / a)));
        }
    }
    let lbs = points.iter().map(|&(a, l)| lb_check(l, a, gamma, tol)).collect::<Result<Vec<_>>>()?;
    let surv = |a: f64, l: f64, s: f64| if s < a { (-l * s).exp() } else { 0.0 };

    let mut lp = DenseLP::new(lbs.clone(), ObjectiveSense::Maximize);
    let mut checks = Vec::new();
    for i in 0..=grid.n_a() {
        let s = grid.a(i);
        let coef: Vec<f64> = points.iter().map(|&(a, l)| surv(a, l, s)).collect();
        if coef.iter().all(|&c| c == 0.0) {
            continue;
        }
        let rhs = (b - s - grid.delta_a).exp().min(1.0);
        checks.push((coef.clone(), rhs));
        lp.add_row(coef, RowSense::Le, rhs);
    }
    lp.add_row(vec![1.0; points.len()], RowSense::Eq, 1.0);
    let sol = lp_solve(&lp, tol)?;
    match sol.status {
        LpStatus::Optimal => {}
        s => return Err(Error::Lp(format!("weight program ended {s:?}"))),
    }
    let max_violation = checks
        .iter()
        .map(|(c, r)| c.iter().zip(&sol.primal).map(|(x, y)| x * y).sum::<f64>() - r)
        .fold(0.0f64, f64::max);
    let k = points
        .iter()
        .zip(&sol.primal)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(&(a, lambda), &weight)| WeightPoint { a, lambda, weight })
        .collect();
    let ub = ub_hat(b, gamma, tol)?;
    Ok(DualWitness {
        k,
        value: sol.value,
        b,
        gamma,
        ub,
        upper_bound_violated: sol.value > ub,
        max_violation,
        variables: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_form_a_distribution() {
        let w = dual_lp_bound(0.796, 1.95, &GridSpec::coarse(), &Tolerances::default()).unwrap();
        let total: f64 = w.k.iter().map(|p| p.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(w.max_violation < 1e-9);
        assert!(w.k.iter().all(|p| p.lambda * p.a <= 1.0 + 1e-12 && p.a <= GridSpec::coarse().dual_a_max + 1e-12));
        let objective: f64 = w.k.iter().map(|p| p.weight * lb_check(p.lambda, p.a, 0.796, &Tolerances::default()).unwrap()).sum();
        assert!((objective - w.value).abs() < 1e-9);
    }

    #[test]
    fn point_mass_is_feasible() {
        let g = GridSpec::coarse();
        let b = 1.95;
        let w = dual_lp_bound(0.796, b, &g, &Tolerances::default()).unwrap();
        // δ_a satisfies every row iff s + Δa ≤ b for all grid s < a.
        let a = (0..=g.n_a()).map(|i| g.a(i)).filter(|&a| (0..=g.n_a()).map(|i| g.a(i)).filter(|&s| s < a).all(|s| s + g.delta_a <= b + 1e-12)).fold(0.0, f64::max);
        assert!(a >= 1.0);
        assert!(w.value >= 0.796 * a - 1e-12);
    }

    #[test]
    fn rejects_out_of_range_b() {
        assert!(dual_lp_bound(0.796, 0.5, &GridSpec::coarse(), &Tolerances::default()).is_err());
    }
}
