use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{domain, Error, Result};

/// A step function on `𝔸` with a linear tail.
///
/// `h(s) = values[0]` for `s ≤ 𝔸[0]`, `values[i]` on `(𝔸[i−1], 𝔸[i]]`, and
/// `values[n] + tail_slope·(s − ā)` beyond `ā`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRule {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub tail_slope: f64,
}

impl PiecewiseRule {
    pub fn new(grid: GridSpec, values: Vec<f64>, tail_slope: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_a() + 1 {
            return domain(format!("rule needs {} values, got {}", grid.n_a() + 1, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) || !(tail_slope >= 0.0) {
            return domain("rule values must be finite with a nonnegative tail slope");
        }
        Ok(Self { grid, values, tail_slope })
    }

    /// Rule with the MHR tail slope `e`.
    pub fn with_mhr_tail(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, std::f64::consts::E)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::with_mhr_tail(grid, vec![c; grid.n_a() + 1])
    }

    pub fn is_nondecreasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let a_bar = self.grid.a_bar();
        let n = self.values.len() - 1;
        if s > a_bar {
            return self.values[n] + self.tail_slope * (s - a_bar);
        }
        self.values[self.grid.ceil_index(s)]
    }

    /// Writes `grid_point,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
        w.write_record(["grid_point", "value"]).map_err(err)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.a(i).to_string(), v.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
        Ok(())
    }

    // h = h₀ + Σ dᵢ·1[s > 𝔸[i−1]] + e·(s − ā)⁺, so E h = h₀ + Σ dᵢ·P[S > 𝔸[i−1]] + e·E(S − ā)⁺.
    fn expect_with<S: Fn(f64) -> f64>(&self, survival: S, excess_over_bar: f64) -> f64 {
        let mut total = self.values[0];
        for i in 1..self.values.len() {
            let d = self.values[i] - self.values[i - 1];
            if d != 0.0 {
                total += d * survival(self.grid.a(i - 1));
            }
        }
        total + self.tail_slope * excess_over_bar
    }
}

/// `E_{s∼F̌_{λ,a}}[h(s)]` for the MHR truncated exponential, in closed form.
pub fn expect_rule_check(rule: &PiecewiseRule, lambda: f64, a: f64) -> f64 {
    let surv = |x: f64| if x < a { (-lambda * x).exp() } else { 0.0 };
    let a_bar = rule.grid.a_bar();
    let excess = if a <= a_bar {
        0.0
    } else if lambda == 0.0 {
        a - a_bar
    } else {
        ((-lambda * a_bar).exp() - (-lambda * a).exp()) / lambda
    };
    rule.expect_with(surv, excess)
}

/// `E_{s∼F̂_{1,b}}[h(s)]` for the MHR shifted exponential, in closed form.
pub fn expect_rule_hat(rule: &PiecewiseRule, b: f64) -> f64 {
    let surv = |x: f64| (b - x).exp().min(1.0);
    let a_bar = rule.grid.a_bar();
    let excess = if b <= a_bar { (b - a_bar).exp() } else { b - a_bar + 1.0 };
    rule.expect_with(surv, excess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Alpha, CheckDist, Distribution, HatDist};
    use crate::numerics::integrate_to_infinity;

    fn staircase(g: GridSpec) -> PiecewiseRule {
        PiecewiseRule::with_mhr_tail(g, (0..=g.n_a()).map(|i| g.a(i)).collect()).unwrap()
    }

    #[test]
    fn point_mass_reads_the_step() {
        let g = GridSpec::coarse();
        let r = staircase(g);
        assert!((expect_rule_check(&r, 0.0, 1.55) - 1.6).abs() < 1e-12);
        assert!((expect_rule_check(&r, 0.0, 1.6) - 1.6).abs() < 1e-12);
        assert!((expect_rule_check(&r, 0.0, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_rule() {
        let g = GridSpec::coarse();
        let r = PiecewiseRule::constant(g, 2.5).unwrap();
        for (l, a) in [(0.3, 2.0), (1.0, 1.0), (0.0, 7.3)] {
            assert!((expect_rule_check(&r, l, a) - 2.5).abs() < 1e-12);
        }
        for b in [1.0, 4.0, 10.0] {
            let oracle = 2.5 + std::f64::consts::E * integrate_to_infinity(|s| (-(s - b)).exp(), 20.0, 1e-13);
            assert!((expect_rule_hat(&r, b) - oracle).abs() < 1e-9, "b={b}");
        }
    }

    #[test]
    fn staircase_hat_mean() {
        let g = GridSpec::coarse();
        let e = expect_rule_hat(&staircase(g), 1.0);
        assert!(e >= 2.0 - 1e-12 && e <= 2.0 + g.delta_a, "{e}");
    }

    #[test]
    fn tail_vanishes_for_long_grids() {
        let g = GridSpec { a_max: 60.0, b_max: 10.0, ..GridSpec::coarse() };
        let r = PiecewiseRule::constant(g, 1.0).unwrap();
        assert!((expect_rule_hat(&r, 2.0) - 1.0).abs() < 1e-20_f64.max((2.0f64 - 60.0).exp() * 3.0));
    }

    #[test]
    fn check_expectation_matches_direct_sum() {
        let g = GridSpec::coarse();
        let r = staircase(g);
        let (l, a) = (0.4, 2.35);
        let d = CheckDist::new(Alpha::MHR, l, a).unwrap();
        let mut direct = r.values[0] * (1.0 - (-l * g.a(0)).exp());
        let top = g.ceil_index(a);
        for i in 1..top {
            direct += r.values[i] * ((-l * g.a(i - 1)).exp() - (-l * g.a(i)).exp());
        }
        direct += r.values[top] * (-l * g.a(top - 1)).exp();
        assert!((expect_rule_check(&r, l, a) - direct).abs() < 1e-12);
        let _ = Distribution::from(d);
    }

    #[test]
    fn check_beyond_grid_uses_tail() {
        let g = GridSpec::coarse();
        let r = PiecewiseRule::constant(g, 1.0).unwrap();
        let e = expect_rule_check(&r, 0.0, 25.0);
        assert!((e - (1.0 + std::f64::consts::E * 5.0)).abs() < 1e-12);
        assert!((r.eval(25.0) - e).abs() < 1e-12);
        let h = HatDist::new(Alpha::MHR, 1.0, 25.0).unwrap();
        let e = expect_rule_hat(&r, h.b);
        assert!((e - (1.0 + std::f64::consts::E * 6.0)).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let g = GridSpec::coarse();
        let mut buf = Vec::new();
        staircase(g).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), g.n_a() + 2);
        assert!(s.starts_with("grid_point,value\n1,1\n"));
    }
}
