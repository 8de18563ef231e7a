use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hpricing::distributions::Valuation;
use hpricing::hiddenlp::lb_check;
use hpricing::mechanisms::{simulate_mechanism, ScoringRule, SimConfig};
use hpricing::{Alpha, CheckDist, Distribution, HatDist, Tolerances};

fn distributions(c: &mut Criterion) {
    let tol = Tolerances::default();
    let check = CheckDist::new(Alpha::MHR, 0.43, 1.0).unwrap();
    let hat = HatDist::new(Alpha::new(0.5).unwrap(), 1.3, 0.4).unwrap();

    c.bench_function("check_survival", |b| b.iter(|| check.survival(black_box(0.7))));
    c.bench_function("hat_opt_price", |b| b.iter(|| black_box(&hat).opt_price()));
    c.bench_function("hat_lnorm", |b| b.iter(|| black_box(&hat).lnorm(1.37).unwrap()));
    c.bench_function("check_critical_interval", |b| {
        b.iter(|| black_box(&check).critical_interval(0.8, &tol).unwrap())
    });
    c.bench_function("lb_check", |b| b.iter(|| lb_check(black_box(0.4), black_box(2.0), 0.79, &tol).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let rule = ScoringRule::Mean { omega: 0.823 };
    let dist = Distribution::Check(CheckDist::new(Alpha::MHR, 0.43, 1.0).unwrap());
    let cfg = SimConfig { n: 100_000, ..SimConfig::default() };
    c.bench_function("simulate_mean_1e5", |b| b.iter(|| simulate_mechanism(&rule, &dist, &cfg).unwrap()));
}

criterion_group!(benches, distributions, simulation);
criterion_main!(benches);
