use std::fs::File;
use std::io::BufWriter;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use hpricing::bounds::{concave_upper, figure3_curve, gamma_alpha_upper, uniform_upper, write_figure3_csv};
use hpricing::distributions::{OptPrice, Valuation};
use hpricing::hiddenlp::{dual_lp_bound, max_certified_gamma, verify_gamma, GridProfile, GridSpec};
use hpricing::mechanisms::{simulate_mechanism_with, uniform_mechanism_ratio, uniform_worst, Experiment, ScoringRule, SimConfig, SimReport};
use hpricing::reduction::{sweep_parameter, DiscountOptimum, DiscountProblem, SweepKind};
use hpricing::{Alpha, CheckDist, Distribution, ExtReal, HatDist, Statistic, UniformDist};

use crate::args::*;
use crate::config::{parse_by_extension, parse_json_arg, RunConfig};
use crate::output::Output;
use crate::Failure;

struct Ctx {
    cfg: RunConfig,
    out: Output,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = g.profile {
        cfg.profile = Some(p.into());
        cfg.grid = None;
    }
    if let Some(j) = g.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(Failure::Parse("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("building thread pool")?;
    }
    if cfg.profile == Some(GridProfile::Paper) && uses_grid(&cli.command) {
        let grid = cfg.grid();
        if !g.long {
            return Err(Failure::Parse("the paper profile runs for hours; pass --long to proceed".into()).into());
        }
        eprintln!("{}", runtime_warning(&grid));
    }
    let format = g.format.or(cfg.format).unwrap_or(Format::Json);
    let ctx = Ctx { cfg, out: Output { format, path: g.output } };
    match cli.command {
        Command::Dist(a) => dist(&ctx, a),
        Command::Optimize(a) => optimize(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
        Command::VerifyGamma(a) => verify(&ctx, a),
        Command::DualBound(a) => dual(&ctx, a),
        Command::Bounds(a) => bounds(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Uniform(a) => uniform(&ctx, a),
    }
}

fn uses_grid(c: &Command) -> bool {
    matches!(c, Command::VerifyGamma(_) | Command::DualBound(_))
}

fn runtime_warning(grid: &GridSpec) -> String {
    let cells = grid.n_a() as f64 * (grid.n_lambda() + 1) as f64;
    let coarse = GridSpec::coarse();
    let coarse_cells = coarse.n_a() as f64 * (coarse.n_lambda() + 1) as f64;
    // Dense simplex work grows roughly with the cube of the row count.
    let scale = (cells / coarse_cells).powi(3) * grid.n_b() as f64 / coarse.n_b() as f64;
    let hours = 3.0 * scale / 3600.0;
    format!(
        "warning: paper profile: {} programs over {} grid cells; estimated runtime {:.0} CPU-hours",
        grid.n_b(),
        cells as u64,
        hours
    )
}

fn alpha(v: f64) -> anyhow::Result<Alpha> {
    Ok(Alpha::new(v)?)
}

fn need(v: Option<f64>, name: &str) -> anyhow::Result<f64> {
    v.ok_or_else(|| Failure::Parse(format!("missing --{name}")).into())
}

fn build_dist(spec: &DistSpec) -> anyhow::Result<Distribution> {
    if let Some(j) = &spec.json {
        return parse_json_arg(j);
    }
    let kind = spec.kind.ok_or_else(|| Failure::Parse("give --kind or --json".into()))?;
    let al = alpha(spec.alpha)?;
    Ok(match kind {
        DistKind::Check => Distribution::Check(CheckDist::new(al, need(spec.lambda, "lambda")?, need(spec.a, "a")?)?),
        DistKind::Hat => Distribution::Hat(HatDist::new(al, need(spec.lambda, "lambda")?, need(spec.b, "b")?)?),
        DistKind::Uniform => Distribution::Uniform(UniformDist::new(need(spec.a, "a")?, need(spec.b, "b")?)?),
    })
}

#[derive(Debug, Default, Serialize)]
struct DistReport {
    dist: Option<Distribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survival: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cdf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lnorm: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cvar: Option<ExtReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    opt: Option<OptPrice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_ub: Option<ExtReal>,
}

impl DistReport {
    fn rows(&self) -> Vec<(&'static str, String)> {
        let mut rows = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                rows.push((k, v));
            }
        };
        push("v", self.v.map(|x| x.to_string()));
        push("survival", self.survival.map(|x| x.to_string()));
        push("cdf", self.cdf.map(|x| x.to_string()));
        push("mean", self.mean.map(|x| x.to_string()));
        push("eta", self.eta.map(|x| x.to_string()));
        push("lnorm", self.lnorm.map(|x| x.to_string()));
        push("q", self.q.map(|x| x.to_string()));
        push("var", self.var.map(|x| x.to_string()));
        push("cvar", self.cvar.map(|x| x.to_string()));
        push("opt_price", self.opt.map(|o| o.price.to_string()));
        push("opt_revenue", self.opt.map(|o| o.revenue.to_string()));
        push("gamma", self.gamma.map(|x| x.to_string()));
        push("critical_lb", self.critical_lb.map(|x| x.to_string()));
        push("critical_ub", self.critical_ub.map(|x| x.to_string()));
        rows
    }
}

fn dist(ctx: &Ctx, a: DistArgs) -> anyhow::Result<()> {
    let d = build_dist(&a.dist)?;
    let tol = &ctx.cfg.tolerances;
    let all = a.stat == DistStat::All;
    let mut r = DistReport::default();
    let point = |name| -> anyhow::Result<f64> { need(a.v, name) };
    if a.stat == DistStat::Survival || (all && a.v.is_some()) {
        r.v = Some(point("v")?);
        r.survival = Some(d.survival(point("v")?));
    }
    if a.stat == DistStat::Cdf || (all && a.v.is_some()) {
        r.v = Some(point("v")?);
        r.cdf = Some(d.cdf(point("v")?));
    }
    if all || a.stat == DistStat::Mean {
        r.mean = Some(d.mean());
    }
    if all || a.stat == DistStat::Lnorm {
        r.eta = Some(a.eta);
        r.lnorm = Some(d.lnorm(a.eta)?);
    }
    if all || matches!(a.stat, DistStat::Var | DistStat::Cvar) {
        r.q = Some(a.q);
    }
    if all || a.stat == DistStat::Var {
        r.var = Some(d.var_q(a.q)?);
    }
    if all || a.stat == DistStat::Cvar {
        r.cvar = Some(d.cvar_q(a.q)?);
    }
    if all || a.stat == DistStat::Opt {
        r.opt = Some(d.opt_price());
    }
    if all || a.stat == DistStat::CriticalInterval {
        let ci = d.critical_interval(a.gamma, tol)?;
        r.gamma = Some(ci.gamma);
        r.critical_lb = Some(ci.lb);
        r.critical_ub = Some(ci.ub);
    }
    r.dist = Some(d);
    ctx.out.emit(&r, |o| o.csv_rows(&["quantity", "value"], r.rows()))
}

fn statistic(stat: StatKind, eta: f64, q: f64) -> Statistic {
    match stat {
        StatKind::Mean => Statistic::Mean,
        StatKind::Lnorm => Statistic::LNorm { eta },
        StatKind::Cvar => Statistic::CVaR { q },
        StatKind::Var => Statistic::VaR { q },
    }
}

#[derive(Serialize)]
struct OptimumRow<'a> {
    statistic: String,
    alpha: f64,
    omega: f64,
    gamma: f64,
    worst_family: &'a str,
    worst_lambda: f64,
    worst_loc: f64,
}

fn optimize(ctx: &Ctx, a: OptimizeArgs) -> anyhow::Result<()> {
    let s = statistic(a.stat, a.eta, a.q);
    let al = alpha(a.alpha)?;
    let rc = &ctx.cfg.reduction;
    let problem = match a.method {
        Method::Auto => DiscountProblem::new(s, al, rc)?,
        Method::Normalized => DiscountProblem::normalized(s, al, rc)?,
        Method::TwoParam => DiscountProblem::two_param(s, al, rc)?,
    };
    let o: DiscountOptimum = problem.solve();
    ctx.out.emit(&o, |out| {
        let c = &o.certificate;
        let row = OptimumRow {
            statistic: o.statistic.label(),
            alpha: o.alpha,
            omega: o.omega,
            gamma: o.gamma,
            worst_family: c.worst_family.as_str(),
            worst_lambda: c.worst_lambda,
            worst_loc: c.worst_loc,
        };
        out.csv_rows(&["statistic", "alpha", "omega", "gamma", "worst_family", "worst_lambda", "worst_loc"], [row])
    })
}

fn grid_points(from: f64, to: f64, step: f64) -> anyhow::Result<Vec<f64>> {
    if !(step > 0.0 && to >= from && from.is_finite() && to.is_finite()) {
        return Err(Failure::Parse(format!("bad range {from}..{to} step {step}")).into());
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((from + step * i as f64) * 1e12).round() / 1e12).collect())
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> anyhow::Result<()> {
    let (kind, lo, hi, step) = match a.kind {
        SweepParam::Lnorm => (SweepKind::LNorm, 1.0, 2.0, 0.05),
        SweepParam::Cvar => (SweepKind::CVaR, 0.8, 1.0, 0.01),
    };
    let grid = grid_points(a.from.unwrap_or(lo), a.to.unwrap_or(hi), a.step.unwrap_or(step))?;
    let t = sweep_parameter(kind, alpha(a.alpha)?, &grid, &ctx.cfg.reduction)?;
    ctx.out.emit(&t, |o| o.with_writer(|w| Ok(t.write_csv(w)?)))
}

#[derive(Serialize)]
struct ResultRow {
    j: usize,
    b: f64,
    b_prev: f64,
    min_expectation: f64,
    ub: f64,
    gap: f64,
    feasible: bool,
}

fn verify(ctx: &Ctx, a: VerifyArgs) -> anyhow::Result<()> {
    let grid = ctx.cfg.grid();
    let tol = &ctx.cfg.tolerances;
    let rep = match (&a.search, a.gamma) {
        (Some(br), _) => max_certified_gamma(&grid, br[0], br[1], a.resolution, tol)?,
        (None, Some(g)) => verify_gamma(g, &grid, tol)?,
        (None, None) => return Err(Failure::Parse("give --gamma or --search LO HI".into()).into()),
    };
    if let Some(dir) = &a.rules_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for r in &rep.results {
            if let Some(rule) = &r.rule {
                let path = dir.join(format!("rule_{}.csv", r.j));
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                rule.write_csv(BufWriter::new(f))?;
            }
        }
    }
    ctx.out.emit(&rep, |o| {
        let rows = rep.results.iter().map(|r| ResultRow {
            j: r.j,
            b: r.b,
            b_prev: r.b_prev,
            min_expectation: r.min_expectation,
            ub: r.ub,
            gap: r.gap,
            feasible: r.feasible,
        });
        o.csv_rows(&["j", "b", "b_prev", "min_expectation", "ub", "gap", "feasible"], rows)
    })?;
    if !rep.certified {
        let why = match rep.first_failure {
            Some((j, gap)) => format!("program j={j} failed with gap {gap:e}"),
            None => format!("c(Γ)={} or case-1 margin {} out of range", rep.c_of_gamma.c, rep.case1_margin),
        };
        return Err(Failure::Infeasible(format!("Γ={} not certified: {why}", rep.gamma)).into());
    }
    Ok(())
}

fn dual(ctx: &Ctx, a: DualArgs) -> anyhow::Result<()> {
    let w = dual_lp_bound(a.gamma, a.b, &ctx.cfg.grid(), &ctx.cfg.tolerances)?;
    ctx.out.emit(&w, |o| o.csv_rows(&["a", "lambda", "weight"], w.k.iter().map(|p| (p.a, p.lambda, p.weight))))
}

fn bounds(ctx: &Ctx, a: BoundsArgs) -> anyhow::Result<()> {
    if let Some(step) = a.figure3 {
        let rows = figure3_curve(&grid_points(0.0, 1.0, step)?)?;
        return ctx.out.emit(&rows, |o| o.with_writer(|w| Ok(write_figure3_csv(&rows, w)?)));
    }
    let rep = if a.concave {
        concave_upper(alpha(a.alpha.unwrap_or(1.0))?, a.lambda, a.b, &ctx.cfg.tolerances)?
    } else if a.uniform {
        uniform_upper()
    } else if let Some(al) = a.alpha {
        gamma_alpha_upper(alpha(al)?)
    } else {
        return Err(Failure::Parse("give --alpha, --uniform, --concave or --figure3".into()).into());
    };
    ctx.out.emit(&rep, |o| {
        let kind = serde_json::to_value(&rep.witness)?["kind"].as_str().unwrap_or_default().to_string();
        o.csv_rows(&["kind", "bound"], [(kind, rep.bound)])
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    experiments: Vec<Experiment>,
}

#[derive(Serialize)]
struct SimRow {
    index: usize,
    n: usize,
    seed: u64,
    report: Option<f64>,
    expected_price: f64,
    expected_price_mc: f64,
    expected_price_ci: f64,
    acceptance_prob: f64,
    revenue: f64,
    revenue_mc: f64,
    revenue_ci: f64,
    opt: f64,
    ratio_vs_opt: f64,
}

fn sim_rows(reports: &[SimReport]) -> impl Iterator<Item = SimRow> + '_ {
    reports.iter().enumerate().map(|(index, r)| SimRow {
        index,
        n: r.n,
        seed: r.seed,
        report: r.report,
        expected_price: r.expected_price,
        expected_price_mc: r.expected_price_mc.mean,
        expected_price_ci: r.expected_price_mc.ci,
        acceptance_prob: r.acceptance_prob,
        revenue: r.revenue,
        revenue_mc: r.revenue_mc.mean,
        revenue_ci: r.revenue_mc.ci,
        opt: r.opt,
        ratio_vs_opt: r.ratio_vs_opt,
    })
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> anyhow::Result<()> {
    let base = ctx.cfg.simulation;
    let experiments = match &a.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_by_extension::<Manifest>(path, &text)?.experiments
        }
        None => {
            let rule: ScoringRule = parse_json_arg(a.rule.as_deref().unwrap_or_default())?;
            vec![Experiment {
                rule,
                dist: build_dist(&a.dist)?,
                valuation: None,
                n: a.n.unwrap_or(base.n),
                seed: a.seed.unwrap_or(base.seed),
            }]
        }
    };
    let reports = experiments
        .iter()
        .map(|e| {
            let cfg = SimConfig { n: e.n, seed: e.seed, ..base };
            simulate_mechanism_with(&e.rule, &e.dist, e.valuation.as_ref().unwrap_or(&e.dist), &cfg)
        })
        .collect::<hpricing::Result<Vec<_>>>()?;
    let header = [
        "index",
        "n",
        "seed",
        "report",
        "expected_price",
        "expected_price_mc",
        "expected_price_ci",
        "acceptance_prob",
        "revenue",
        "revenue_mc",
        "revenue_ci",
        "opt",
        "ratio_vs_opt",
    ];
    if a.manifest.is_some() {
        ctx.out.emit(&reports, |o| o.csv_rows(&header, sim_rows(&reports)))
    } else {
        ctx.out.emit(&reports[0], |o| o.csv_rows(&header, sim_rows(&reports)))
    }
}

#[derive(Serialize)]
struct UniformPoint {
    a: f64,
    b: f64,
    ratio: f64,
}

fn uniform(ctx: &Ctx, a: UniformArgs) -> anyhow::Result<()> {
    if a.scan {
        let w = uniform_worst();
        return ctx.out.emit(&w, |o| {
            o.with_writer(|out| {
                writeln!(out, "argmin_a,b,ratio")?;
                for x in &w.argmin {
                    writeln!(out, "{x},1,{}", w.ratio)?;
                }
                Ok(())
            })
        });
    }
    let p = UniformPoint { a: a.a, b: a.b, ratio: uniform_mechanism_ratio(a.a, a.b)? };
    ctx.out.emit(&p, |o| o.csv_rows(&["a", "b", "ratio"], [&p]))
}
