use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraints::constraint_pieces;
use super::{Family, RatioCertificate, ReductionConfig, SearchMeta, Statistic, StatisticPolicy};
use crate::distributions::{Alpha, CheckDist, HatDist, Valuation};
use crate::error::{domain, Error, Result};
use crate::numerics::maximize_unimodal;

/// Cached per-λ quantities: the statistic, OPT and the witness location.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    pub psi: f64,
    pub opt: f64,
    pub loc: f64,
}

type LambdaMap = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type Eval = Box<dyn Fn(f64) -> Result<Point> + Send + Sync>;
type RatioFn = Box<dyn Fn(f64, f64, &Point) -> f64 + Send + Sync>;

/// One λ-parametrized family, scanned in a mapped coordinate `t`.
pub(crate) struct Piece {
    family: Family,
    t_lo: f64,
    t_hi: f64,
    lambda_of: LambdaMap,
    eval: Eval,
    ratio: RatioFn,
    grid: Vec<(f64, f64, Point)>,
}

impl Piece {
    pub(crate) fn new(family: Family, t_lo: f64, t_hi: f64, lambda_of: LambdaMap, eval: Eval, ratio: RatioFn) -> Self {
        Self { family, t_lo, t_hi, lambda_of, eval, ratio, grid: Vec::new() }
    }

    fn build_grid(&mut self, step: f64) -> Result<()> {
        let n = ((self.t_hi - self.t_lo) / step).ceil().max(1.0) as usize;
        self.grid = (0..=n)
            .map(|i| {
                let t = self.t_lo + (self.t_hi - self.t_lo) * i as f64 / n as f64;
                let l = (self.lambda_of)(t);
                Ok((t, l, (self.eval)(l)?))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    fn ratio_at_t(&self, omega: f64, t: f64) -> (f64, f64, f64) {
        let l = (self.lambda_of)(t);
        match (self.eval)(l) {
            Ok(p) => ((self.ratio)(omega, l, &p), l, p.loc),
            Err(_) => (f64::INFINITY, l, f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Witness {
    gamma: f64,
    family: Family,
    lambda: f64,
    loc: f64,
}

fn better(a: Option<Witness>, b: Witness) -> Option<Witness> {
    match a {
        Some(w) if w.gamma <= b.gamma => Some(w),
        _ => Some(b),
    }
}

/// The max-min problem `max_ω min_F Rev(ω·Ψ(F), F)/OPT(F)` for one statistic.
///
/// The statistic is evaluated once on each λ grid point; every candidate ω
/// reuses those values.
pub struct DiscountProblem {
    statistic: Statistic,
    alpha: Alpha,
    cfg: ReductionConfig,
    method: &'static str,
    pieces: Vec<Piece>,
}

/// Optimal discount, its ratio and the binding worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountOptimum {
    pub statistic: Statistic,
    pub alpha: f64,
    pub omega: f64,
    pub gamma: f64,
    pub certificate: RatioCertificate,
}

fn distribution_pieces(statistic: Statistic, alpha: Alpha, scale: f64, cfg: &ReductionConfig) -> Vec<Piece> {
    let al = alpha.value();
    let lmax = cfg.hat_lambda_max;
    let (check_hi, check_map): (f64, LambdaMap) = if al > 0.0 {
        let top = if alpha.is_mhr() { 1.0 } else { 1.0 / al };
        (1.0, Box::new(move |t| t * top / scale))
    } else {
        (lmax / (1.0 + lmax), Box::new(move |t| t / (1.0 - t) / scale))
    };
    let check = Piece::new(
        Family::Check,
        0.0,
        check_hi,
        check_map,
        Box::new(move |l| {
            let d = CheckDist { alpha, lambda: l, a: scale };
            let psi = statistic.evaluate(&d)?.finite().ok_or_else(|| Error::DivergentStatistic(statistic.label()))?;
            Ok(Point { psi, opt: d.opt_price().revenue, loc: scale })
        }),
        Box::new(move |w, l, p| CheckDist { alpha, lambda: l, a: scale }.revenue(w * p.psi) / p.opt),
    );
    let hat = Piece::new(
        Family::Hat,
        0.0,
        1.0 - 1.0 / lmax,
        Box::new(move |t| 1.0 / (1.0 - t) / scale),
        Box::new(move |l| {
            let d = HatDist { alpha, lambda: l, b: scale };
            let psi = statistic.evaluate(&d)?.finite().ok_or_else(|| Error::DivergentStatistic(statistic.label()))?;
            Ok(Point { psi, opt: d.opt_price().revenue, loc: scale })
        }),
        Box::new(move |w, l, p| HatDist { alpha, lambda: l, b: scale }.revenue(w * p.psi) / p.opt),
    );
    vec![check, hat]
}

impl DiscountProblem {
    /// Uses the closed-form constraints at α = 1 where available, the
    /// normalized distribution families otherwise.
    pub fn new(statistic: Statistic, alpha: Alpha, cfg: &ReductionConfig) -> Result<Self> {
        if alpha.is_mhr() {
            if let Some(pieces) = constraint_pieces(statistic, cfg) {
                return Self::assemble(statistic, alpha, cfg, "closed-form constraints", pieces);
            }
        }
        Self::normalized(statistic, alpha, cfg)
    }

    /// Searches `F̌_{λ,1}` (`αλ ≤ 1`) and `F̂_{λ,1}` (`λ ≥ 1`) directly.
    pub fn normalized(statistic: Statistic, alpha: Alpha, cfg: &ReductionConfig) -> Result<Self> {
        Self::check_finite(statistic, alpha)?;
        let pieces = distribution_pieces(statistic, alpha, 1.0, cfg);
        Self::assemble(statistic, alpha, cfg, "normalized families", pieces)
    }

    /// Searches both families over every configured scale `a`, `b`.
    pub fn two_param(statistic: Statistic, alpha: Alpha, cfg: &ReductionConfig) -> Result<Self> {
        Self::check_finite(statistic, alpha)?;
        let pieces = cfg
            .two_param_scales
            .iter()
            .flat_map(|&s| distribution_pieces(statistic, alpha, s, cfg))
            .collect();
        Self::assemble(statistic, alpha, cfg, "two-parameter families", pieces)
    }

    fn check_finite(statistic: Statistic, alpha: Alpha) -> Result<()> {
        statistic.validate()?;
        if statistic.diverges_on_hat(alpha) {
            return Err(Error::DivergentStatistic(format!(
                "{} on the shifted family at alpha = {}",
                statistic.label(),
                alpha.value()
            )));
        }
        Ok(())
    }

    fn assemble(
        statistic: Statistic,
        alpha: Alpha,
        cfg: &ReductionConfig,
        method: &'static str,
        mut pieces: Vec<Piece>,
    ) -> Result<Self> {
        cfg.validate()?;
        statistic.validate()?;
        for p in &mut pieces {
            p.build_grid(cfg.grid_step)?;
        }
        Ok(Self { statistic, alpha, cfg: cfg.clone(), method, pieces })
    }

    fn grid_points(&self) -> usize {
        self.pieces.iter().map(|p| p.grid.len()).sum()
    }

    fn inner(&self, omega: f64) -> (Witness, usize) {
        let mut best: Option<Witness> = None;
        let mut refinements = 0;
        for piece in &self.pieces {
            let vals: Vec<f64> = piece.grid.iter().map(|(_, l, p)| (piece.ratio)(omega, *l, p)).collect();
            let n = vals.len();
            let mut minima: Vec<usize> = (0..n)
                .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i + 1 == n || vals[i] <= vals[i + 1]))
                .collect();
            minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            minima.truncate(self.cfg.refine_best);
            for &i in &minima {
                let (_, l, p) = piece.grid[i];
                best = better(best, Witness { gamma: vals[i], family: piece.family, lambda: l, loc: p.loc });
                let lo = piece.grid[i.saturating_sub(1)].0;
                let hi = piece.grid[(i + 1).min(n - 1)].0;
                if hi > lo {
                    let (t, neg) = maximize_unimodal(|t| -piece.ratio_at_t(omega, t).0, lo, hi, &self.cfg.tol);
                    refinements += 1;
                    let (_, l, loc) = piece.ratio_at_t(omega, t);
                    best = better(best, Witness { gamma: -neg, family: piece.family, lambda: l, loc });
                }
            }
        }
        (best.expect("pieces are nonempty"), refinements)
    }

    fn certificate(&self, omega: f64, w: Witness, refinements: usize) -> RatioCertificate {
        RatioCertificate {
            gamma: w.gamma,
            omega,
            worst_family: w.family,
            worst_lambda: w.lambda,
            worst_loc: w.loc,
            search_meta: SearchMeta {
                method: self.method.to_string(),
                grid_points: self.grid_points(),
                refinements,
                grid_step: self.cfg.grid_step,
                hat_lambda_max: self.cfg.hat_lambda_max,
            },
        }
    }

    /// Worst-case ratio of the policy with discount `omega`.
    pub fn ratio_at(&self, omega: f64) -> RatioCertificate {
        let (w, r) = self.inner(omega);
        self.certificate(omega, w, r)
    }

    /// Coarse ω scan followed by golden-section refinement around the best.
    pub fn solve(&self) -> DiscountOptimum {
        let cfg = &self.cfg;
        let n = ((cfg.omega_max - cfg.omega_min) / cfg.omega_step).round().max(1.0) as usize;
        let omegas: Vec<f64> = (0..=n).map(|i| cfg.omega_min + (cfg.omega_max - cfg.omega_min) * i as f64 / n as f64).collect();
        let vals: Vec<f64> = omegas.iter().map(|&w| self.inner(w).0.gamma).collect();
        let i = (0..vals.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
        let lo = omegas[i.saturating_sub(1)];
        let hi = omegas[(i + 1).min(n)];
        let (w, g) = maximize_unimodal(|w| self.inner(w).0.gamma, lo, hi, &cfg.tol);
        let omega = if g >= vals[i] { w } else { omegas[i] };
        let cert = self.ratio_at(omega);
        DiscountOptimum { statistic: self.statistic, alpha: self.alpha.value(), omega, gamma: cert.gamma, certificate: cert }
    }
}

/// Worst-case ratio over both boundary families at several scales.
pub fn worst_ratio_two_param(policy: &StatisticPolicy, alpha: Alpha, cfg: &ReductionConfig) -> Result<RatioCertificate> {
    Ok(DiscountProblem::two_param(policy.statistic, alpha, cfg)?.ratio_at(policy.omega))
}

/// Worst-case ratio over the `a = 1` and `b = 1` slices.
pub fn worst_ratio_normalized(policy: &StatisticPolicy, alpha: Alpha, cfg: &ReductionConfig) -> Result<RatioCertificate> {
    Ok(DiscountProblem::normalized(policy.statistic, alpha, cfg)?.ratio_at(policy.omega))
}

/// The optimal discount `ω*` and ratio `Γ*` for pricing at `ω·Ψ(F)`.
pub fn optimize_discount(statistic: Statistic, alpha: Alpha, cfg: &ReductionConfig) -> Result<DiscountOptimum> {
    Ok(DiscountProblem::new(statistic, alpha, cfg)?.solve())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// `L^η` norms over η.
    LNorm,
    /// CVaR over the tail probability q.
    CVaR,
}

impl SweepKind {
    pub fn statistic(self, param: f64) -> Statistic {
        match self {
            SweepKind::LNorm => Statistic::LNorm { eta: param },
            SweepKind::CVaR => Statistic::CVaR { q: param },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub omega: f64,
    pub gamma: f64,
    pub worst_family: Family,
    pub worst_lambda: f64,
    pub worst_loc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: SweepKind,
    pub alpha: f64,
    pub rows: Vec<SweepRow>,
    /// Best grid parameter.
    pub argmax: f64,
    pub max_gamma: f64,
    /// Golden-section refinement of the argmax between its grid neighbours.
    pub refined_argmax: f64,
    pub refined_max_gamma: f64,
}

impl SweepTable {
    /// Writes `param,omega,gamma,worst_family,worst_lambda,worst_loc` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Domain(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Optimal `(ω*, Γ*)` across a grid of η or q values.
pub fn sweep_parameter(kind: SweepKind, alpha: Alpha, grid: &[f64], cfg: &ReductionConfig) -> Result<SweepTable> {
    if grid.is_empty() {
        return domain("sweep grid is empty");
    }
    let solve = |param: f64| -> Result<DiscountOptimum> { optimize_discount(kind.statistic(param), alpha, cfg) };
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&param| {
            let o = solve(param)?;
            Ok(SweepRow {
                param,
                omega: o.omega,
                gamma: o.gamma,
                worst_family: o.certificate.worst_family,
                worst_lambda: o.certificate.worst_lambda,
                worst_loc: o.certificate.worst_loc,
            })
        })
        .collect::<Result<_>>()?;
    let i = (0..rows.len()).fold(0, |b, i| if rows[i].gamma > rows[b].gamma { i } else { b });
    let (mut refined, mut refined_gamma) = (rows[i].param, rows[i].gamma);
    if rows.len() > 1 {
        let lo = rows[i.saturating_sub(1)].param;
        let hi = rows[(i + 1).min(rows.len() - 1)].param;
        let tol = cfg.tol.with_opt_rel(1e-3);
        let (p, g) = maximize_unimodal(|p| solve(p).map_or(f64::NEG_INFINITY, |o| o.gamma), lo, hi, &tol);
        if g > refined_gamma {
            refined = p;
            refined_gamma = g;
        }
    }
    Ok(SweepTable {
        kind,
        alpha: alpha.value(),
        argmax: rows[i].param,
        max_gamma: rows[i].gamma,
        rows,
        refined_argmax: refined,
        refined_max_gamma: refined_gamma,
    })
}
