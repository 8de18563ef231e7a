use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expected_price, payment, ScoringRule};
use crate::distributions::{Distribution, Valuation};
use crate::error::{domain, Result};
use crate::numerics::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    /// Samples per independent RNG stream.
    pub batch: usize,
    pub tol: Tolerances,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n: 1_000_000, seed: 0, batch: 1 << 16, tol: Tolerances::default() }
    }
}

/// One batch entry: a rule, the reported distribution, sample size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub rule: ScoringRule,
    pub dist: Distribution,
    /// Valuation distribution, if different from the reported one.
    #[serde(default)]
    pub valuation: Option<Distribution>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    SimConfig::default().n
}

/// A Monte Carlo mean with its 3σ half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
}

impl Estimate {
    pub fn covers(&self, x: f64) -> bool {
        (self.mean - x).abs() <= self.ci
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub seed: u64,
    pub report: Option<f64>,
    /// Analytic expected payment at the best report.
    pub expected_price: f64,
    pub expected_price_mc: Estimate,
    /// `P[v ≥ price]`.
    pub acceptance_prob: f64,
    pub revenue: f64,
    pub revenue_mc: Estimate,
    pub opt: f64,
    pub ratio_vs_opt: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    sum: f64,
    comp: f64,
    sum_sq: f64,
    comp_sq: f64,
}

fn kahan(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        kahan(&mut self.sum, &mut self.comp, x);
        kahan(&mut self.sum_sq, &mut self.comp_sq, x * x);
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        kahan(&mut self.sum, &mut self.comp, o.sum);
        kahan(&mut self.sum, &mut self.comp, -o.comp);
        kahan(&mut self.sum_sq, &mut self.comp_sq, o.sum_sq);
        kahan(&mut self.sum_sq, &mut self.comp_sq, -o.comp_sq);
        self
    }

    fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        Estimate { mean, ci: 3.0 * (var / n).sqrt() }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates the mechanism for a buyer whose valuation follows the
/// reported distribution.
pub fn simulate_mechanism(rule: &ScoringRule, dist: &Distribution, cfg: &SimConfig) -> Result<SimReport> {
    simulate_mechanism_with(rule, dist, dist, cfg)
}

/// The buyer reports `dist` truthfully and accepts iff `v ≥ E[h(s, x*)]`.
///
/// Batches run on independent ChaCha streams `(seed, batch index)` and are
/// merged in batch order, so results do not depend on the thread count.
pub fn simulate_mechanism_with(
    rule: &ScoringRule,
    dist: &Distribution,
    valuation: &Distribution,
    cfg: &SimConfig,
) -> Result<SimReport> {
    if cfg.n < 2 || cfg.batch == 0 {
        return domain(format!("need at least two samples and a positive batch size, got n={} batch={}", cfg.n, cfg.batch));
    }
    let (price, report) = expected_price(rule, dist, &cfg.tol)?;
    let x = report.unwrap_or(f64::NAN);
    let acceptance_prob = valuation.survival_at_or_above(price);
    let revenue = price * acceptance_prob;
    let opt = valuation.opt_price().revenue;

    let batches = cfg.n.div_ceil(cfg.batch);
    let parts = (0..batches)
        .into_par_iter()
        .map(|k| {
            let len = cfg.batch.min(cfg.n - k * cfg.batch);
            let mut rng = stream_rng(cfg.seed, k as u64);
            let (mut pay, mut rev) = (Moments::default(), Moments::default());
            for _ in 0..len {
                let s = dist.sample_with(&mut rng);
                let v = valuation.sample_with(&mut rng);
                let h = payment(rule, s, x)?;
                pay.push(h);
                rev.push(if v >= price { h } else { 0.0 });
            }
            Ok((pay, rev))
        })
        .collect::<Result<Vec<_>>>()?;
    let (pay, rev) = parts
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));

    Ok(SimReport {
        n: cfg.n,
        seed: cfg.seed,
        report,
        expected_price: price,
        expected_price_mc: pay.estimate(),
        acceptance_prob,
        revenue,
        revenue_mc: rev.estimate(),
        opt,
        ratio_vs_opt: revenue / opt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Alpha, CheckDist, HatDist};

    #[test]
    fn point_mass_sells_at_its_value() {
        let d = Distribution::from(CheckDist::point_mass(3.0).unwrap());
        let r = simulate_mechanism(&ScoringRule::Mean { omega: 1.0 }, &d, &SimConfig { n: 1000, ..Default::default() }).unwrap();
        assert_eq!((r.expected_price, r.acceptance_prob, r.ratio_vs_opt), (3.0, 1.0, 1.0));
        assert_eq!(r.revenue, r.expected_price * r.acceptance_prob);
    }

    #[test]
    fn thread_count_independent() {
        let d = Distribution::from(HatDist::new(Alpha::MHR, 1.0, 1.0).unwrap());
        let cfg = SimConfig { n: 100_000, batch: 10_000, seed: 7, ..Default::default() };
        let rule = ScoringRule::CVaR { omega: 0.8, q: 0.5 };
        let a = simulate_mechanism(&rule, &d, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_mechanism(&rule, &d, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn analytic_price_within_ci() {
        let d = Distribution::from(HatDist::new(Alpha::new(0.5).unwrap(), 1.0, 1.0).unwrap());
        let r = simulate_mechanism(&ScoringRule::LNorm { omega: 0.9, eta: 1.5 }, &d, &SimConfig { n: 200_000, seed: 3, ..Default::default() }).unwrap();
        assert!(r.expected_price_mc.covers(r.expected_price), "{r:?}");
        assert!(r.revenue_mc.covers(r.revenue), "{r:?}");
    }
}
