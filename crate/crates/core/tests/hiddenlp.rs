use std::sync::OnceLock;

use hpricing::hiddenlp::*;
use hpricing::mechanisms::{simulate_mechanism, ScoringRule, SimConfig};
use hpricing::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA_COARSE: f64 = 0.7648;
const V_COARSE: f64 = 2.3435158012;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn certificate() -> &'static CertReport {
    static CERT: OnceLock<CertReport> = OnceLock::new();
    CERT.get_or_init(|| verify_gamma(GAMMA_COARSE, &GridSpec::coarse(), &tol()).unwrap())
}

#[test]
fn coarse_certificate_is_frozen() {
    let c = certificate();
    assert!(c.certified, "{:?}", c.first_failure);
    assert!(c.c_of_gamma.c < 0.9 && c.case1_margin > 0.0);
    let above = verify_gamma(GAMMA_COARSE + 1e-4, &GridSpec::coarse(), &tol()).unwrap();
    assert!(!above.certified);
    assert!(above.first_failure.is_some());
}

#[test]
fn coarse_dual_value_is_frozen() {
    let w = dual_lp_bound(0.796, 1.95, &GridSpec::coarse(), &tol()).unwrap();
    assert!((w.value - V_COARSE).abs() < 1e-8, "{}", w.value);
    assert!(!w.upper_bound_violated);
    assert!((w.ub - 2.37556).abs() < 1e-5, "{}", w.ub);
}

#[test]
fn dual_value_grows_under_refinement() {
    let g = GridSpec::coarse();
    let mut prev = 0.0;
    for (da, dl) in [(0.2, 0.04), (0.1, 0.02), (0.05, 0.02), (0.05, 0.01)] {
        let w = dual_lp_bound(0.796, 1.95, &GridSpec { delta_a: da, delta_lambda: dl, ..g }, &tol()).unwrap();
        assert!(w.value >= prev - 1e-9, "Δa={da} Δλ={dl}: {} < {prev}", w.value);
        prev = w.value;
    }
}

#[test]
fn weak_duality_on_every_solved_pair() {
    let c = certificate();
    let g = GridSpec::coarse();
    for r in &c.results {
        let w = dual_lp_bound(c.gamma, r.b, &g, &tol()).unwrap();
        assert!(w.value <= r.min_expectation + 1e-6, "b={}: {} > {}", r.b, w.value, r.min_expectation);
    }
    let table = LbTable::new(g, 0.796, &tol()).unwrap();
    for j in [1, 10, 40] {
        let r = feasibility_lp(&table, j, &tol()).unwrap();
        let w = dual_lp_bound(0.796, r.b, &g, &tol()).unwrap();
        assert!(w.value <= r.min_expectation + 1e-6, "b={}", r.b);
    }
}

#[test]
fn certified_rules_are_monotone_and_respect_bounds() {
    let c = certificate();
    let g = GridSpec::coarse();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for r in &c.results {
        let rule = r.rule.as_ref().unwrap();
        assert!(rule.is_nondecreasing(1e-9));
        assert!(r.min_expectation <= r.ub);
        for _ in 0..20 {
            let i = rng.random_range(1..=g.n_a());
            let k = rng.random_range(1..=g.n_lambda());
            let (lp, a) = (g.lambda(k - 1), g.a(i));
            if lp * g.a(i - 1) > 1.0 {
                continue;
            }
            let bound = if lp * a <= 1.0 { lb_check(lp, a, c.gamma, &tol()).unwrap() } else { lb_check(lp, 1.0 / lp, c.gamma, &tol()).unwrap() };
            assert!(expect_rule_check(rule, g.lambda(k), a) >= bound - 1e-7);
        }
    }
}

#[test]
fn certified_mechanism_on_shifted_instances() {
    let c = certificate();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = SimConfig { n: 20_000, ..Default::default() };
    for _ in 0..50 {
        let lambda = rng.random_range(0.2..3.0);
        let nb = rng.random_range(1.0..12.0);
        let d = HatDist::new(Alpha::MHR, lambda, nb / lambda).unwrap();
        let rule = ScoringRule::for_certified_hat(c, &d).unwrap();
        let rep = simulate_mechanism(&rule, &Distribution::from(d), &cfg).unwrap();
        assert!(rep.ratio_vs_opt >= GAMMA_COARSE - 0.01, "{d:?}: {}", rep.ratio_vs_opt);
    }
}

#[test]
fn reports_serialize() {
    let c = certificate();
    let json = serde_json::to_value(c).unwrap();
    assert_eq!(json["results"].as_array().unwrap().len(), 90);
    assert!(json["results"][0].get("rule").is_none());
    let w = dual_lp_bound(0.796, 1.95, &GridSpec::coarse(), &tol()).unwrap();
    let back: DualWitness = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
    assert_eq!(back, w);
}
