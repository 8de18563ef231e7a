use super::search::{Piece, Point};
use super::{Family, ReductionConfig, Statistic};
use crate::distributions::{Alpha, CheckDist, HatDist, Valuation};
use crate::error::{domain, Result};

fn check_norm(eta: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(1.0);
    }
    if eta == 1.0 {
        return Ok(-(-lambda).exp_m1() / lambda);
    }
    let d = CheckDist { alpha: Alpha::MHR, lambda, a: 1.0 };
    Ok(d.lnorm(eta)?.to_f64())
}

fn hat_norm(eta: f64, lambda: f64) -> Result<f64> {
    if eta == 1.0 {
        return Ok(1.0 + 1.0 / lambda);
    }
    let d = HatDist { alpha: Alpha::MHR, lambda, b: 1.0 };
    Ok(d.lnorm(eta)?.to_f64())
}

fn eta_of(statistic: Statistic) -> Option<f64> {
    match statistic {
        Statistic::Mean => Some(1.0),
        Statistic::LNorm { eta } => Some(eta),
        _ => None,
    }
}

fn norm_point(eta: f64, lambda: f64, family: Family) -> Result<Point> {
    Ok(match family {
        Family::Check => Point { psi: check_norm(eta, lambda)?, opt: (-lambda).exp(), loc: 1.0 },
        Family::Hat => Point { psi: hat_norm(eta, lambda)?, opt: 1.0, loc: 1.0 },
    })
}

fn norm_ratio(omega: f64, lambda: f64, p: &Point, family: Family) -> f64 {
    let price = omega * p.psi;
    match family {
        Family::Check => price * (lambda - lambda * price).exp(),
        Family::Hat => price * (-lambda * (price - 1.0)).exp().min(1.0),
    }
}

// Normalized to CVaR_q = 1. Check members are parametrized by λ alone:
// λ ≤ −ln q forces a = 1, larger λ fixes e^{−λa} = q(1 − λ − ln q).
fn cvar_point(q: f64, lambda: f64, family: Family) -> Point {
    let l = q.ln();
    match family {
        Family::Check if lambda <= -l => Point { psi: 1.0, opt: (-lambda).exp(), loc: 1.0 },
        Family::Check => {
            let u = q * (1.0 - lambda - l);
            let a = -u.ln() / lambda;
            Point { psi: 1.0, opt: u * a, loc: a }
        }
        Family::Hat => {
            let b = 1.0 - (1.0 - l) / lambda;
            Point { psi: 1.0, opt: b, loc: b }
        }
    }
}

fn cvar_ratio(omega: f64, lambda: f64, p: &Point, family: Family) -> f64 {
    match family {
        Family::Check => omega * (-lambda * omega).exp() / p.opt,
        Family::Hat => {
            if p.loc <= 0.0 {
                return f64::INFINITY;
            }
            omega * (-lambda * (omega - p.loc)).exp().min(1.0) / p.loc
        }
    }
}

/// Closed-form ratio bound for α = 1 under the normalized families.
///
/// Mean and `L^η`: check `λ ∈ [0, 1]` with `a = 1`, hat `λ ≥ 1` with `b = 1`.
/// CVaR_q (normalized to `CVaR_q = 1`): check `λ ∈ [0, 1 − ln q)`, whose
/// part `λ ≤ −ln q` gives `ω·e^{λ(1−ω)}` with minimum `ω` at `λ = 0`; hat
/// `λ ≥ 1 − ln q`. VaR has no closed form here.
pub fn constraint_value(statistic: Statistic, omega: f64, lambda: f64, family: Family) -> Result<f64> {
    statistic.validate()?;
    if !(omega > 0.0) {
        return domain(format!("discount must be positive, got {omega}"));
    }
    if let Some(eta) = eta_of(statistic) {
        let ok = match family {
            Family::Check => (0.0..=1.0).contains(&lambda),
            Family::Hat => lambda >= 1.0 && lambda.is_finite(),
        };
        if !ok {
            return domain(format!("lambda {lambda} outside the {} domain", family.as_str()));
        }
        let p = norm_point(eta, lambda, family)?;
        return Ok(norm_ratio(omega, lambda, &p, family));
    }
    match statistic {
        Statistic::CVaR { q } => {
            let edge = 1.0 - q.ln();
            let ok = match family {
                Family::Check => lambda >= 0.0 && lambda < edge,
                Family::Hat => lambda >= edge && lambda.is_finite(),
            };
            if !ok {
                return domain(format!("lambda {lambda} outside the cvar {} domain", family.as_str()));
            }
            let p = cvar_point(q, lambda, family);
            Ok(cvar_ratio(omega, lambda, &p, family))
        }
        _ => domain(format!("no closed-form constraint for {}", statistic.label())),
    }
}

/// Search pieces built from [`constraint_value`]'s closed forms, if any.
pub(crate) fn constraint_pieces(statistic: Statistic, cfg: &ReductionConfig) -> Option<Vec<Piece>> {
    let t_hat = 1.0 - 1.0 / cfg.hat_lambda_max;
    if let Some(eta) = eta_of(statistic) {
        let check = Piece::new(
            Family::Check,
            0.0,
            1.0,
            Box::new(|t| t),
            Box::new(move |l| norm_point(eta, l, Family::Check)),
            Box::new(|w, l, p| norm_ratio(w, l, p, Family::Check)),
        );
        let hat = Piece::new(
            Family::Hat,
            0.0,
            t_hat,
            Box::new(|t| 1.0 / (1.0 - t)),
            Box::new(move |l| norm_point(eta, l, Family::Hat)),
            Box::new(|w, l, p| norm_ratio(w, l, p, Family::Hat)),
        );
        return Some(vec![check, hat]);
    }
    match statistic {
        Statistic::CVaR { q } => {
            let edge = 1.0 - q.ln();
            let check = Piece::new(
                Family::Check,
                0.0,
                1.0 - 1e-9,
                Box::new(move |t| t * edge),
                Box::new(move |l| Ok(cvar_point(q, l, Family::Check))),
                Box::new(|w, l, p| cvar_ratio(w, l, p, Family::Check)),
            );
            let hat = Piece::new(
                Family::Hat,
                0.0,
                t_hat,
                Box::new(move |t| edge / (1.0 - t)),
                Box::new(move |l| Ok(cvar_point(q, l, Family::Hat))),
                Box::new(|w, l, p| cvar_ratio(w, l, p, Family::Hat)),
            );
            Some(vec![check, hat])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::StatisticPolicy;

    #[test]
    fn mean_check_small_lambda_limit() {
        // δ₁ oracle: price ω earns ω against OPT 1.
        for w in [0.6, 0.823, 1.0] {
            let v = constraint_value(Statistic::Mean, w, 1e-8, Family::Check).unwrap();
            assert!((v - w).abs() < 1e-6);
            assert_eq!(constraint_value(Statistic::Mean, w, 0.0, Family::Check).unwrap(), w);
        }
    }

    #[test]
    fn mean_hat_example() {
        let v = constraint_value(Statistic::Mean, 1.0, 1.0, Family::Hat).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let d = HatDist::new(Alpha::MHR, 1.0, 1.0).unwrap();
        let r = StatisticPolicy::new(Statistic::Mean, 1.0).unwrap().ratio(&d).unwrap();
        assert!((v - r).abs() < 1e-15);
    }

    #[test]
    fn cvar_point_mass_branch_is_omega() {
        let v = constraint_value(Statistic::CVaR { q: 0.92 }, 0.787, 0.0, Family::Check).unwrap();
        assert_eq!(v, 0.787);
    }

    #[test]
    fn closed_forms_match_distributions() {
        let q: f64 = 0.92;
        let w = 0.79;
        let pol = StatisticPolicy::new(Statistic::CVaR { q }, w).unwrap();
        for lambda in [0.05, 0.5, 0.9, 1.05] {
            let v = constraint_value(pol.statistic, w, lambda, Family::Check).unwrap();
            let a = cvar_point(q, lambda, Family::Check).loc;
            let d = CheckDist::new(Alpha::MHR, lambda, a).unwrap();
            assert!((d.cvar_q(q).unwrap().to_f64() - 1.0).abs() < 1e-12);
            if d.is_member() {
                assert!((v - pol.ratio(&d).unwrap()).abs() < 1e-12, "lambda={lambda}");
            }
        }
        for lambda in [2.0, 5.0, 40.0] {
            let v = constraint_value(pol.statistic, w, lambda, Family::Hat).unwrap();
            let b = 1.0 - (1.0 - q.ln()) / lambda;
            let d = HatDist::new(Alpha::MHR, lambda, b).unwrap();
            if d.is_member() {
                assert!((v - pol.ratio(&d).unwrap()).abs() < 1e-12, "lambda={lambda}");
            }
        }
        for (eta, lambda) in [(1.37, 0.4), (2.0, 1.0)] {
            let pol = StatisticPolicy::new(Statistic::LNorm { eta }, 0.8).unwrap();
            let v = constraint_value(pol.statistic, 0.8, lambda, Family::Check).unwrap();
            let d = CheckDist::new(Alpha::MHR, lambda, 1.0).unwrap();
            assert!((v - pol.ratio(&d).unwrap()).abs() < 1e-12);
            let v = constraint_value(pol.statistic, 0.8, 3.0 * lambda, Family::Hat).unwrap();
            let d = HatDist::new(Alpha::MHR, 3.0 * lambda, 1.0).unwrap();
            assert!((v - pol.ratio(&d).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn domains_enforced() {
        assert!(constraint_value(Statistic::Mean, 0.8, 1.5, Family::Check).is_err());
        assert!(constraint_value(Statistic::Mean, 0.8, 0.5, Family::Hat).is_err());
        let q = 0.5f64;
        assert!(constraint_value(Statistic::CVaR { q }, 0.8, 1.0 - q.ln(), Family::Check).is_err());
        assert!(constraint_value(Statistic::CVaR { q }, 0.8, 1.0, Family::Hat).is_err());
        assert!(constraint_value(Statistic::VaR { q }, 0.8, 0.5, Family::Check).is_err());
    }
}
