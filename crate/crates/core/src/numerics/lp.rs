use serde::{Deserialize, Serialize};

use super::Tolerances;
use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Entering-variable rule for the simplex iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables throughout.
    Bland,
    /// Most negative reduced cost, switching permanently to Bland's rule
    /// after a run of degenerate pivots.
    #[default]
    DantzigBlandFallback,
}

/// A dense linear program.
///
/// Variables default to `0 <= x` with no upper bound. A lower bound of
/// `f64::NEG_INFINITY` makes the variable free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLP {
    pub objective: Vec<f64>,
    pub sense: ObjectiveSense,
    pub constraint_matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub row_sense: Vec<RowSense>,
    pub var_lower_bounds: Vec<f64>,
    pub var_upper_bounds: Vec<Option<f64>>,
}

impl DenseLP {
    pub fn new(objective: Vec<f64>, sense: ObjectiveSense) -> Self {
        let n = objective.len();
        Self {
            objective,
            sense,
            constraint_matrix: Vec::new(),
            rhs: Vec::new(),
            row_sense: Vec::new(),
            var_lower_bounds: vec![0.0; n],
            var_upper_bounds: vec![None; n],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) {
        self.constraint_matrix.push(coeffs);
        self.row_sense.push(sense);
        self.rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        let m = self.rhs.len();
        if self.constraint_matrix.len() != m || self.row_sense.len() != m {
            return Err(Error::Lp(format!(
                "{} matrix rows, {} rhs entries and {} row senses",
                self.constraint_matrix.len(),
                m,
                self.row_sense.len()
            )));
        }
        if let Some((i, row)) = self.constraint_matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Lp(format!("row {i} has {} columns, expected {n}", row.len())));
        }
        if self.var_lower_bounds.len() != n || self.var_upper_bounds.len() != n {
            return Err(Error::Lp("bound vectors must match the objective length".into()));
        }
        let finite = self.objective.iter().chain(self.rhs.iter()).all(|v| v.is_finite())
            && self.constraint_matrix.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Lp("non-finite coefficient".into()));
        }
        for j in 0..n {
            let lo = self.var_lower_bounds[j];
            if lo.is_nan() || lo == f64::INFINITY {
                return Err(Error::Lp(format!("bad lower bound {lo} on variable {j}")));
            }
            if let Some(hi) = self.var_upper_bounds[j] {
                if !hi.is_finite() || hi < lo {
                    return Err(Error::Lp(format!("bad upper bound {hi} on variable {j}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPSolution {
    pub status: LpStatus,
    /// Objective value in the caller's sense; meaningful only when optimal.
    pub value: f64,
    pub primal: Vec<f64>,
    /// Shadow prices `∂value/∂rhs_i` for the original rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LPSolution {
    fn without_solution(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        let value = match status {
            LpStatus::Unbounded => f64::INFINITY,
            _ => f64::NAN,
        };
        Self {
            status,
            value,
            primal: vec![f64::NAN; n],
            duals: vec![f64::NAN; m],
            iterations,
        }
    }
}

/// Solves `p` with the default pivot rule.
pub fn lp_solve(p: &DenseLP, tol: &Tolerances) -> Result<LPSolution> {
    lp_solve_with(p, tol, PivotRule::default())
}

// How an original variable maps onto nonnegative tableau columns.
#[derive(Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    // (rows + 1) x (cols + 1), row-major; last row is the objective, last column the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
    blocked: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[pr] = pc;
    }

    fn entering(&self, rule: PivotRule) -> Option<usize> {
        let obj = self.rows * (self.cols + 1);
        let row = &self.data[obj..obj + self.cols];
        match rule {
            PivotRule::Bland => (0..self.cols).find(|&c| !self.blocked[c] && row[c] < -COST_EPS),
            PivotRule::DantzigBlandFallback => {
                let mut best = None;
                let mut best_val = -COST_EPS;
                for (c, &r) in row.iter().enumerate() {
                    if r < best_val && !self.blocked[c] {
                        best_val = r;
                        best = Some(c);
                    }
                }
                best
            }
        }
    }

    fn leaving(&self, pc: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_EPS {
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        if ratio < bv - 1e-12 * bv.abs().max(1.0)
                            || (ratio <= bv + 1e-12 * bv.abs().max(1.0) && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
        }
        best.map(|(r, _)| r)
    }

    // Runs simplex iterations to optimality on the current objective row.
    fn optimize(&mut self, rule: PivotRule, iterations: &mut usize, limit: usize) -> Result<bool> {
        let mut current = rule;
        let mut degenerate_run = 0usize;
        loop {
            let Some(pc) = self.entering(current) else {
                return Ok(true);
            };
            let Some(pr) = self.leaving(pc) else {
                return Ok(false);
            };
            if self.rhs(pr).abs() <= PIVOT_EPS {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_SWITCH {
                    current = PivotRule::Bland;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
            *iterations += 1;
            if *iterations > limit {
                return Err(Error::Lp(format!("iteration limit {limit} reached")));
            }
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        // Objective row holds c_B B^-1 A_j - c_j for a maximization.
        let w = self.cols + 1;
        let obj = self.rows * w;
        for c in 0..w {
            self.data[obj + c] = if c < self.cols { -costs[c] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for c in 0..w {
                    self.data[obj + c] += cb * self.data[r * w + c];
                }
            }
        }
    }
}

/// Solves `p` by the two-phase dense tableau simplex method.
///
/// Malformed programs are errors; infeasibility and unboundedness are
/// reported through [`LPSolution::status`]. An optimum that fails the
/// feasibility re-check at `tol.lp_feas` is reported as an error.
pub fn lp_solve_with(p: &DenseLP, tol: &Tolerances, rule: PivotRule) -> Result<LPSolution> {
    p.validate()?;
    let n = p.num_vars();
    let m0 = p.num_rows();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        let lo = p.var_lower_bounds[j];
        if lo == f64::NEG_INFINITY {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        } else {
            maps.push(VarMap::Shifted { col: ncols, lower: lo });
            ncols += 1;
        }
    }
    let nstruct = ncols;

    // Rows over the structural columns, after shifting lower bounds.
    let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::with_capacity(m0 + n);
    for i in 0..m0 {
        let mut coeffs = vec![0.0; nstruct];
        let mut b = p.rhs[i];
        for (j, &a) in p.constraint_matrix[i].iter().enumerate() {
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    coeffs[col] = a;
                    b -= a * lower;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] = a;
                    coeffs[neg] = -a;
                }
            }
        }
        rows.push((coeffs, p.row_sense[i], b));
    }
    for j in 0..n {
        if let Some(hi) = p.var_upper_bounds[j] {
            let mut coeffs = vec![0.0; nstruct];
            let b = match maps[j] {
                VarMap::Shifted { col, lower } => {
                    coeffs[col] = 1.0;
                    hi - lower
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] = 1.0;
                    coeffs[neg] = -1.0;
                    hi
                }
            };
            rows.push((coeffs, RowSense::Le, b));
        }
    }

    let m = rows.len();
    let mut flipped = vec![false; m];
    for (i, (coeffs, sense, b)) in rows.iter_mut().enumerate() {
        if *b < 0.0 {
            flipped[i] = true;
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *b = -*b;
            *sense = match *sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
    }

    // Column layout: structural | surplus (one per >= row) | identity (one per row).
    let n_surplus = rows.iter().filter(|r| r.1 == RowSense::Ge).count();
    let id0 = nstruct + n_surplus;
    let cols = id0 + m;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut is_artificial = vec![false; cols];
    let mut surplus = nstruct;
    for (i, (coeffs, sense, b)) in rows.iter().enumerate() {
        let row = &mut data[i * w..(i + 1) * w];
        row[..nstruct].copy_from_slice(coeffs);
        if *sense == RowSense::Ge {
            row[surplus] = -1.0;
            surplus += 1;
        }
        row[id0 + i] = 1.0;
        row[cols] = *b;
        is_artificial[id0 + i] = *sense != RowSense::Le;
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis: (id0..id0 + m).collect(),
        blocked: vec![false; cols],
    };

    let limit = 50_000 + 200 * (m + cols);
    let mut iterations = 0usize;

    if is_artificial.iter().any(|&a| a) {
        let phase1: Vec<f64> = is_artificial.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
        t.set_objective(&phase1);
        t.optimize(rule, &mut iterations, limit)?;
        let infeas = -t.rhs(m);
        let scale = rows.iter().map(|r| r.2).fold(1.0, f64::max);
        if infeas > tol.lp_feas * scale {
            return Ok(LPSolution::without_solution(LpStatus::Infeasible, n, m0, iterations));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if is_artificial[t.basis[r]] {
                let pc = (0..id0).find(|&c| t.at(r, c).abs() > 1e-9);
                if let Some(pc) = pc {
                    t.pivot(r, pc);
                    iterations += 1;
                }
            }
        }
        for (c, &a) in is_artificial.iter().enumerate() {
            t.blocked[c] = a;
        }
    }

    let sign = match p.sense {
        ObjectiveSense::Maximize => 1.0,
        ObjectiveSense::Minimize => -1.0,
    };
    let mut costs = vec![0.0; cols];
    for j in 0..n {
        let c = sign * p.objective[j];
        match maps[j] {
            VarMap::Shifted { col, .. } => costs[col] = c,
            VarMap::Split { pos, neg } => {
                costs[pos] = c;
                costs[neg] = -c;
            }
        }
    }
    t.set_objective(&costs);
    if !t.optimize(rule, &mut iterations, limit)? {
        return Ok(LPSolution::without_solution(LpStatus::Unbounded, n, m0, iterations));
    }

    let mut xcol = vec![0.0; cols];
    for r in 0..m {
        xcol[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let primal: Vec<f64> = maps
        .iter()
        .map(|&map| match map {
            VarMap::Shifted { col, lower } => lower + xcol[col],
            VarMap::Split { pos, neg } => xcol[pos] - xcol[neg],
        })
        .collect();
    let value: f64 = p.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    let obj = m * w;
    let duals: Vec<f64> = (0..m0)
        .map(|i| {
            let y = t.data[obj + id0 + i];
            let y = if flipped[i] { -y } else { y };
            sign * y
        })
        .collect();

    for i in 0..m0 {
        let lhs: f64 = p.constraint_matrix[i].iter().zip(&primal).map(|(a, x)| a * x).sum();
        let slack = tol.lp_feas * (1.0 + p.rhs[i].abs());
        let ok = match p.row_sense[i] {
            RowSense::Le => lhs <= p.rhs[i] + slack,
            RowSense::Ge => lhs >= p.rhs[i] - slack,
            RowSense::Eq => (lhs - p.rhs[i]).abs() <= slack,
        };
        if !ok {
            return Err(Error::Lp(format!(
                "optimal basis violates row {i}: lhs {lhs} vs rhs {} ({:?})",
                p.rhs[i], p.row_sense[i]
            )));
        }
    }

    Ok(LPSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        duals,
        iterations,
    })
}
