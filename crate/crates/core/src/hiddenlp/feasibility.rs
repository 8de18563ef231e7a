use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, GRID_EPS};
use super::rule::{expect_rule_check, expect_rule_hat, PiecewiseRule};
use super::{lb_check, ub_hat};
use crate::error::{domain, Error, Result};
use crate::numerics::{lp_solve, maximize_unimodal, DenseLP, LpStatus, ObjectiveSense, RowSense, Tolerances};

/// One lower-bound row: `E_{F̌_{𝕃[k],𝔸[i]}}[h] ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LbRow {
    k: usize,
    i: usize,
    rhs: f64,
}

/// `LB(F̌_{λ,a}, Γ)` over `𝕃 × 𝔸`, plus the lower-bound rows derived from it.
///
/// Entries with `λa > 1` hold `LB(F̌_{λ,1/λ}, Γ)`.
#[derive(Debug, Clone)]
pub struct LbTable {
    grid: GridSpec,
    gamma: f64,
    values: Vec<Vec<f64>>,
    rows: Vec<LbRow>,
    active_rows: usize,
}

impl LbTable {
    pub fn new(grid: GridSpec, gamma: f64, tol: &Tolerances) -> Result<Self> {
        grid.validate()?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return domain(format!("approximation level must lie in (0, 1), got {gamma}"));
        }
        let (na, nl) = (grid.n_a(), grid.n_lambda());
        let values = (0..=nl)
            .into_par_iter()
            .map(|k| {
                let l = grid.lambda(k);
                let clamp = if l * grid.a_max > 1.0 + GRID_EPS { Some(lb_check(l, 1.0 / l, gamma, tol)?) } else { None };
                (0..=na)
                    .map(|i| {
                        let a = grid.a(i);
                        match clamp {
                            Some(c) if l * a > 1.0 + GRID_EPS => Ok(c),
                            _ => lb_check(l, a, gamma, tol),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self { grid, gamma, values, rows: Vec::new(), active_rows: 0 };
        table.build_rows();
        Ok(table)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The stored entry for `(𝕃[k], 𝔸[i])`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k][i]
    }

    /// Number of lower-bound rows before and after pruning.
    pub fn row_counts(&self) -> (usize, usize) {
        (self.active_rows, self.rows.len())
    }

    fn active(&self, k: usize, i: usize) -> bool {
        k >= 1 && i >= 1 && k <= self.grid.n_lambda() && i <= self.grid.n_a() && self.grid.lambda(k - 1) * self.grid.a(i - 1) <= 1.0 + GRID_EPS
    }

    // Expectation at 𝕃[k] paired with the bound at 𝕃[k−1].
    fn rhs(&self, k: usize, i: usize) -> f64 {
        self.values[k - 1][i]
    }

    // A row is implied by an active neighbour whose expectation is never
    // larger for nondecreasing h (larger λ, or smaller a) and whose bound is
    // at least as large.
    fn build_rows(&mut self) {
        let (na, nl) = (self.grid.n_a(), self.grid.n_lambda());
        let mut rows = Vec::new();
        let mut active = 0;
        for i in 1..=na {
            for k in 1..=nl {
                if !self.active(k, i) {
                    continue;
                }
                active += 1;
                let rhs = self.rhs(k, i);
                let dominated = (self.active(k + 1, i) && self.rhs(k + 1, i) >= rhs)
                    || (self.active(k, i - 1) && self.rhs(k, i - 1) >= rhs);
                if !dominated {
                    rows.push(LbRow { k, i, rhs });
                }
            }
        }
        self.rows = rows;
        self.active_rows = active;
    }

    fn all_active_rows(&self) -> impl Iterator<Item = LbRow> + '_ {
        let (na, nl) = (self.grid.n_a(), self.grid.n_lambda());
        (1..=na).flat_map(move |i| {
            (1..=nl).filter(move |&k| self.active(k, i)).map(move |k| LbRow { k, i, rhs: self.rhs(k, i) })
        })
    }
}

/// Outcome of the linear program for one `b = 𝔹[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub j: usize,
    pub b: f64,
    pub b_prev: f64,
    /// Minimal `E_{F̂_{1,b}}[h]` over rules meeting the lower-bound rows.
    pub min_expectation: f64,
    /// `UB(F̂_{1,b_prev}, Γ)`.
    pub ub: f64,
    /// `min_expectation − ub`; feasible iff `≤ 0`.
    pub gap: f64,
    pub feasible: bool,
    pub lp_rows: usize,
    pub iterations: usize,
    /// The minimizing rule, kept only when feasible.
    #[serde(default, skip_serializing)]
    pub rule: Option<PiecewiseRule>,
}

/// Minimizes `E_{F̂_{1,𝔹[j]}}[h]` over nondecreasing step rules satisfying
/// every lower-bound row, and compares it with `UB(F̂_{1,𝔹[j−1]}, Γ)`.
///
/// The program is solved in its dual form
/// `max Σ LB_r y_r  s.t.  Gᵀy ≤ c, y ≥ 0`, whose origin is feasible; the
/// rule increments are read off the shadow prices and re-verified against
/// every active row.
pub fn feasibility_lp(table: &LbTable, j: usize, tol: &Tolerances) -> Result<FeasibilityResult> {
    let g = &table.grid;
    if j == 0 || j > g.n_b() {
        return domain(format!("b-grid index must lie in 1..={}, got {j}", g.n_b()));
    }
    let (b, b_prev) = (g.b(j), g.b(j - 1));
    let n = g.n_a();
    let a_min = g.a_min;

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(table.rows.len() + 1);
    let mut first = vec![0.0; n + 1];
    first[0] = 1.0;
    rows.push((first, table.gamma * a_min));
    for r in &table.rows {
        let l = g.lambda(r.k);
        let mut coef = vec![0.0; n + 1];
        coef[0] = 1.0;
        for (ip, c) in coef.iter_mut().enumerate().take(r.i + 1).skip(1) {
            *c = (-l * g.a(ip - 1)).exp();
        }
        rows.push((coef, r.rhs));
    }
    let cost: Vec<f64> = (0..=n).map(|ip| if ip == 0 { 1.0 } else { (b - g.a(ip - 1)).exp().min(1.0) }).collect();

    let m = rows.len();
    let mut lp = DenseLP::new(rows.iter().map(|r| r.1).collect(), ObjectiveSense::Maximize);
    for (ip, &c) in cost.iter().enumerate() {
        lp.add_row((0..m).map(|r| rows[r].0[ip]).collect(), RowSense::Le, c);
    }
    let sol = lp_solve(&lp, tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("dual program for j = {j} ended {:?}", sol.status)));
    }

    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for (ip, &x) in sol.duals.iter().enumerate() {
        if x < -tol.lp_feas * 10.0 {
            return Err(Error::Lp(format!("negative rule increment {x} at index {ip} for j = {j}")));
        }
        acc += x.max(0.0);
        values.push(acc);
    }
    let rule = PiecewiseRule::with_mhr_tail(*g, values)?;

    let slack = |rhs: f64| tol.lp_feas * 1e3 * (1.0 + rhs.abs());
    if rule.values[0] < table.gamma * a_min - slack(table.gamma * a_min) {
        return Err(Error::Lp(format!("recovered rule misses h(a_min) >= Γ·a_min for j = {j}")));
    }
    for r in table.all_active_rows() {
        let e = expect_rule_check(&rule, g.lambda(r.k), g.a(r.i));
        if e < r.rhs - slack(r.rhs) {
            return Err(Error::Lp(format!(
                "recovered rule violates row (k={}, i={}) by {} for j = {j}",
                r.k,
                r.i,
                r.rhs - e
            )));
        }
    }

    let min_expectation = expect_rule_hat(&rule, b);
    let ub = ub_hat(b_prev, table.gamma, tol)?;
    let gap = min_expectation - ub;
    let feasible = gap <= 0.0;
    Ok(FeasibilityResult {
        j,
        b,
        b_prev,
        min_expectation,
        ub,
        gap,
        feasible,
        lp_rows: m,
        iterations: sol.iterations,
        rule: feasible.then_some(rule),
    })
}

/// `c(Γ) = max_{a∈[0,1]} LB(F̌_{1,a}, Γ)/(1 − e^{−a})` and its maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CofGamma {
    pub c: f64,
    pub a_star: f64,
    pub lb_at_a_star: f64,
    pub mean_at_a_star: f64,
}

pub fn c_of_gamma(gamma: f64, tol: &Tolerances) -> Result<CofGamma> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("approximation level must lie in (0, 1), got {gamma}"));
    }
    let fine = tol.with_root_abs(tol.root_abs.min(1e-13)).with_opt_rel(tol.opt_rel.min(1e-9));
    let ratio = |a: f64| lb_check(1.0, a, gamma, &fine).map_or(f64::NEG_INFINITY, |lb| lb / -(-a).exp_m1());
    let n = 1000;
    let lo = 1e-6;
    let pts: Vec<f64> = (0..=n).map(|i| lo + (1.0 - lo) * i as f64 / n as f64).collect();
    let best = (0..=n).fold(0, |b, i| if ratio(pts[i]) > ratio(pts[b]) { i } else { b });
    let (a_star, c) = maximize_unimodal(ratio, pts[best.saturating_sub(1)], pts[(best + 1).min(n)], &fine);
    let lb = lb_check(1.0, a_star, gamma, &fine)?;
    Ok(CofGamma { c, a_star, lb_at_a_star: lb, mean_at_a_star: -(-a_star).exp_m1() })
}

/// Result of the full `𝔹` sweep at one `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub gamma: f64,
    pub grid: GridSpec,
    pub lb_rows_active: usize,
    pub lb_rows_kept: usize,
    pub results: Vec<FeasibilityResult>,
    pub all_feasible: bool,
    /// First `j` whose program failed, with its gap.
    pub first_failure: Option<(usize, f64)>,
    pub c_of_gamma: CofGamma,
    /// `b̄ − c·(b̄ + 1)`; positive when the linear rule covers `b > b̄`.
    pub case1_margin: f64,
    pub certified: bool,
}

impl CertReport {
    /// Rule for the normalized shifted distribution `F̂_{1,b}`, `b ≤ b̄`:
    /// the one computed at the smallest `𝔹[j] ≥ b`.
    pub fn rule_for(&self, b: f64) -> Option<&PiecewiseRule> {
        let j = self.grid.b_ceil_index(b).max(1);
        self.results.get(j - 1).and_then(|r| r.rule.as_ref())
    }
}

/// Runs [`feasibility_lp`] for every `j` and checks the `b > b̄` branch.
pub fn verify_gamma(gamma: f64, grid: &GridSpec, tol: &Tolerances) -> Result<CertReport> {
    if !(gamma > 0.0 && gamma <= 0.8) {
        return domain(format!("certification requires 0 < Γ <= 0.8, got {gamma}"));
    }
    let table = LbTable::new(*grid, gamma, tol)?;
    let results = (1..=grid.n_b())
        .into_par_iter()
        .map(|j| feasibility_lp(&table, j, tol))
        .collect::<Result<Vec<_>>>()?;
    let first_failure = results.iter().find(|r| !r.feasible).map(|r| (r.j, r.gap));
    let all_feasible = first_failure.is_none();
    let c = c_of_gamma(gamma, tol)?;
    let case1_margin = grid.b_max - c.c * (grid.b_max + 1.0);
    let (lb_rows_active, lb_rows_kept) = table.row_counts();
    Ok(CertReport {
        gamma,
        grid: *grid,
        lb_rows_active,
        lb_rows_kept,
        results,
        all_feasible,
        first_failure,
        c_of_gamma: c,
        case1_margin,
        certified: all_feasible && c.c < 0.9 && case1_margin > 0.0,
    })
}

/// Largest `Γ ∈ [lo, hi]` certified on `grid`, located by bisection to
/// within `resolution`. Returns the report at that `Γ`.
pub fn max_certified_gamma(grid: &GridSpec, lo: f64, hi: f64, resolution: f64, tol: &Tolerances) -> Result<CertReport> {
    if !(lo < hi && hi <= 0.8 && resolution > 0.0) {
        return domain(format!("bad search bracket [{lo}, {hi}] with resolution {resolution}"));
    }
    let mut best = verify_gamma(lo, grid, tol)?;
    if !best.certified {
        return domain(format!("Γ = {lo} is not certified on this grid"));
    }
    let top = verify_gamma(hi, grid, tol)?;
    if top.certified {
        return Ok(top);
    }
    let (mut l, mut h) = (lo, hi);
    while h - l > resolution {
        let mid = 0.5 * (l + h);
        let rep = verify_gamma(mid, grid, tol)?;
        if rep.certified {
            l = mid;
            best = rep;
        } else {
            h = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn lb_table_rows() {
        let g = GridSpec::coarse();
        let t = LbTable::new(g, 0.8, &tol()).unwrap();
        for i in 0..=g.n_a() {
            assert!((t.get(0, i) - 0.8 * g.a(i)).abs() < 1e-12);
        }
        for k in 0..=g.n_lambda() {
            for i in 1..=g.n_a() {
                assert!(t.get(k, i) >= t.get(k, i - 1) - 1e-9, "k={k} i={i}");
            }
        }
        let l = g.lambda(25);
        assert!((t.get(25, g.n_a()) - lb_check(l, 1.0 / l, 0.8, &tol()).unwrap()).abs() < 1e-12);
        let (active, kept) = t.row_counts();
        assert!(kept <= active && kept > 0);
    }

    #[test]
    fn linear_branch_constant() {
        let c = c_of_gamma(0.8, &tol()).unwrap();
        assert!((c.c - 0.86766).abs() < 5e-4, "{c:?}");
        assert!((c.a_star - 0.47525).abs() < 1e-4, "{c:?}");
        assert!((c.lb_at_a_star - 0.32821).abs() < 1e-4, "{c:?}");
        assert!((c.mean_at_a_star - 0.37827).abs() < 1e-4, "{c:?}");
        assert!(c_of_gamma(0.7, &tol()).unwrap().c < c.c);
    }

    #[test]
    fn slack_and_overreach() {
        let g = GridSpec::coarse();
        let t = LbTable::new(g, 0.5, &tol()).unwrap();
        for j in [1, 9, 45, 90] {
            let r = feasibility_lp(&t, j, &tol()).unwrap();
            assert!(r.feasible, "{r:?}");
            let rule = r.rule.unwrap();
            assert!(rule.is_nondecreasing(0.0));
        }
        let t = LbTable::new(g, 0.99, &tol()).unwrap();
        let r = feasibility_lp(&t, 1, &tol()).unwrap();
        assert!(!r.feasible && r.gap > 0.0 && r.rule.is_none());
    }

    #[test]
    fn index_bounds() {
        let t = LbTable::new(GridSpec::coarse(), 0.5, &tol()).unwrap();
        assert!(feasibility_lp(&t, 0, &tol()).is_err());
        assert!(feasibility_lp(&t, 91, &tol()).is_err());
        assert!(verify_gamma(0.85, &GridSpec::coarse(), &tol()).is_err());
    }
}
