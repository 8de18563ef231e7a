use serde::{Deserialize, Serialize};

use super::UNIFORM_THRESHOLD;
use crate::distributions::{UniformDist, Valuation};
use crate::error::Result;
use crate::numerics::{maximize_unimodal, Tolerances};

/// Revenue of the `7/16·(a+b)` threshold over OPT for `U[a, b]`.
pub fn uniform_mechanism_ratio(a: f64, b: f64) -> Result<f64> {
    let d = UniformDist::new(a, b)?;
    let p = UNIFORM_THRESHOLD * (a + b);
    Ok(d.revenue(p) / d.opt_price().revenue)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformWorst {
    pub ratio: f64,
    /// Local minimizers in `a` (with `b = 1`) attaining the minimum.
    pub argmin: Vec<f64>,
    pub grid_step: f64,
}

/// Minimizes the ratio over `a ∈ [0, 1]`, `b = 1`, on a `1e−4` grid refined
/// by golden-section search around each local minimum.
pub fn uniform_worst() -> UniformWorst {
    let step = 1e-4;
    let n = (1.0 / step) as usize;
    let r = |a: f64| uniform_mechanism_ratio(a.clamp(0.0, 1.0), 1.0).unwrap_or(f64::INFINITY);
    let vals: Vec<f64> = (0..=n).map(|i| r(i as f64 * step)).collect();
    let tol = Tolerances::default().with_opt_rel(1e-12);
    let mut minima = Vec::new();
    for i in 0..=n {
        let left = i == 0 || vals[i] <= vals[i - 1];
        let right = i == n || vals[i] <= vals[i + 1];
        if left && right {
            let lo = i.saturating_sub(1) as f64 * step;
            let hi = (i + 1).min(n) as f64 * step;
            let (a, neg) = maximize_unimodal(|a| -r(a), lo, hi, &tol);
            minima.push((a, -neg));
        }
    }
    let ratio = minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let mut argmin: Vec<f64> = minima.iter().filter(|m| m.1 <= ratio + 1e-9).map(|m| m.0).collect();
    argmin.dedup_by(|x, y| (*x - *y).abs() < 2.0 * step);
    UniformWorst { ratio, argmin, grid_step: step }
}
