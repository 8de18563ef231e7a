use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Slack used when comparing products of grid points with 1.
pub(crate) const GRID_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridProfile {
    #[default]
    Coarse,
    Paper,
}

/// The grids `𝔸`, `𝕃` and `𝔹`.
///
/// `𝔸 = {a_min + iΔa} ∩ [a_min, a_max]`, `𝕃 = {kΔλ} ∩ [0, lambda_max]` and
/// `𝔹 = {b_min + jΔb} ∩ [b_min, b_max]`. The dual program restricts the
/// support of its weights to `a ≤ dual_a_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub delta_a: f64,
    pub lambda_max: f64,
    pub delta_lambda: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub delta_b: f64,
    pub dual_a_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::coarse()
    }
}

fn count(lo: f64, hi: f64, step: f64) -> usize {
    ((hi - lo) / step + 1e-9).floor() as usize
}

impl GridSpec {
    pub fn coarse() -> Self {
        Self {
            a_min: 1.0,
            a_max: 20.0,
            delta_a: 0.1,
            lambda_max: 1.0,
            delta_lambda: 0.02,
            b_min: 1.0,
            b_max: 10.0,
            delta_b: 0.1,
            dual_a_max: 20.0,
        }
    }

    pub fn paper() -> Self {
        Self {
            delta_a: 0.01,
            delta_lambda: 0.001,
            delta_b: 0.001,
            ..Self::coarse()
        }
    }

    pub fn profile(p: GridProfile) -> Self {
        match p {
            GridProfile::Coarse => Self::coarse(),
            GridProfile::Paper => Self::paper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta_a", self.delta_a), ("delta_lambda", self.delta_lambda), ("delta_b", self.delta_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.a_min > 0.0 && self.a_max >= self.a_min) {
            return domain(format!("need 0 < a_min <= a_max, got [{}, {}]", self.a_min, self.a_max));
        }
        if !(self.b_min >= self.a_min && self.b_max >= self.b_min && self.b_max <= self.a_max) {
            return domain(format!(
                "need a_min <= b_min <= b_max <= a_max, got b in [{}, {}]",
                self.b_min, self.b_max
            ));
        }
        if !(self.lambda_max > 0.0 && self.lambda_max <= 1.0) {
            return domain(format!("lambda_max must lie in (0, 1], got {}", self.lambda_max));
        }
        if !(self.dual_a_max >= self.a_min) {
            return domain(format!("dual_a_max must be at least a_min, got {}", self.dual_a_max));
        }
        Ok(())
    }

    /// `n_𝔸`; the grid has `n_a() + 1` points.
    pub fn n_a(&self) -> usize {
        count(self.a_min, self.a_max, self.delta_a)
    }

    pub fn n_lambda(&self) -> usize {
        count(0.0, self.lambda_max, self.delta_lambda)
    }

    pub fn n_b(&self) -> usize {
        count(self.b_min, self.b_max, self.delta_b)
    }

    pub fn a(&self, i: usize) -> f64 {
        self.a_min + i as f64 * self.delta_a
    }

    pub fn lambda(&self, k: usize) -> f64 {
        k as f64 * self.delta_lambda
    }

    pub fn b(&self, j: usize) -> f64 {
        self.b_min + j as f64 * self.delta_b
    }

    /// `ā`, the last point of `𝔸`.
    pub fn a_bar(&self) -> f64 {
        self.a(self.n_a())
    }

    /// Index of the smallest grid point `≥ s`, clamped to `[0, n_𝔸]`.
    pub fn ceil_index(&self, s: f64) -> usize {
        if s <= self.a_min {
            return 0;
        }
        let n = self.n_a();
        let mut i = (((s - self.a_min) / self.delta_a).ceil() as usize).min(n);
        while i > 0 && self.a(i - 1) >= s {
            i -= 1;
        }
        while i < n && self.a(i) < s {
            i += 1;
        }
        i
    }

    /// Index of the smallest point of `𝔹` that is `≥ b`.
    pub fn b_ceil_index(&self, b: f64) -> usize {
        if b <= self.b_min {
            return 0;
        }
        let n = self.n_b();
        let mut j = (((b - self.b_min) / self.delta_b).ceil() as usize).min(n);
        while j > 0 && self.b(j - 1) >= b {
            j -= 1;
        }
        while j < n && self.b(j) < b {
            j += 1;
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_sizes() {
        let g = GridSpec::coarse();
        assert_eq!((g.n_a(), g.n_lambda(), g.n_b()), (190, 50, 90));
        assert!((g.a_bar() - 20.0).abs() < 1e-12);
        let p = GridSpec::paper();
        assert_eq!((p.n_a(), p.n_lambda(), p.n_b()), (1900, 1000, 9000));
    }

    #[test]
    fn ceil_index_brackets() {
        let g = GridSpec::coarse();
        assert_eq!(g.ceil_index(0.3), 0);
        assert_eq!(g.ceil_index(1.0), 0);
        assert_eq!(g.ceil_index(1.05), 1);
        assert_eq!(g.ceil_index(1.1), 1);
        assert_eq!(g.ceil_index(1.1000001), 2);
        assert_eq!(g.ceil_index(25.0), 190);
        assert_eq!(g.b_ceil_index(1.95), 10);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec { delta_a: 0.0, ..GridSpec::coarse() }.validate().is_err());
        assert!(GridSpec { b_max: 30.0, ..GridSpec::coarse() }.validate().is_err());
        assert!(GridSpec::paper().validate().is_ok());
    }
}
