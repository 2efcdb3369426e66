use std::path::Path;

use serde::Serialize;

use fabci::data::GroupSummary;
use fabci::fab_t::{AcceptanceKernel, ChiNodes};
use fabci::hierarchy::{fit_heteroscedastic, fit_homoscedastic_mle, levene_test, HeteroHyperParams, SingletonPolicy};
use fabci::multigroup::{HeteroKernel, HomoEstimator, MultigroupResult, P1Policy};
use fabci::sim::{risk_curve_t, risk_curve_z, risk_curve_z_mc, RiskPoint};
use fabci::{
    eb_all, fab_heteroscedastic, fab_homoscedastic, fab_t_interval, fab_z_interval, umau_all, umau_t_interval,
    umau_z_interval, BayesW, GroupedData, HeteroOptions, HomoHierParams, HomoOptions, Interval, NormalInvGammaPrior,
    Procedure, QuadratureConfig, SimConfig, Truth,
};

use crate::error::CliError;
use crate::input::{read_dataset, read_truth};
use crate::output::{csv_bytes, emit, json_bytes, num, opt_num, write_atomic};
use crate::{EstimateArgs, EstimatorArg, IntervalArgs, MethodArg, Model, RiskArgs, RiskKind, SimulateArgs};

fn need<T: Copy>(v: Option<T>, flag: &str, method: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{method} requires --{flag}")))
}

// estimate

#[derive(Serialize)]
struct LeveneReport {
    f: f64,
    p_value: f64,
    df1: usize,
    df2: usize,
}

#[derive(Serialize)]
struct EstimateReport {
    model: &'static str,
    groups: usize,
    observations: usize,
    mu: f64,
    tau2: f64,
    /// Common variance (homo) or prior mean of σ² (hetero, null when a <= 1).
    sigma2: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    levene: Option<LeveneReport>,
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let data = read_dataset(&args.input)?;
    let summaries = data.summaries();
    let mut report = match args.model {
        Model::Homo => {
            let (e, _) = fit_homoscedastic_mle(&summaries)?;
            EstimateReport {
                model: "homo",
                groups: data.len(),
                observations: data.total_obs(),
                mu: e.mu,
                tau2: e.tau2,
                sigma2: Some(e.sigma2),
                a: None,
                b: None,
                levene: None,
            }
        }
        Model::Hetero => {
            let h = fit_heteroscedastic(&summaries, SingletonPolicy::default())?;
            EstimateReport {
                model: "hetero",
                groups: data.len(),
                observations: data.total_obs(),
                mu: h.mu,
                tau2: h.tau2,
                sigma2: h.sigma2_prior_mean(),
                a: Some(h.a),
                b: Some(h.b),
                levene: None,
            }
        }
    };
    match levene_test(&data) {
        Ok(l) => {
            report.levene = Some(LeveneReport {
                f: l.f,
                p_value: l.p_value,
                df1: l.df1,
                df2: l.df2,
            })
        }
        Err(e) => eprintln!("warning: Levene test not available: {e}"),
    }
    emit(args.out.as_deref(), &json_bytes(&report)?)
}

// interval

const INTERVAL_COLUMNS: [&str; 9] = ["group", "n", "ybar", "s2", "lower", "upper", "width", "method", "df"];

#[derive(Serialize)]
struct IntervalRow {
    group: String,
    n: usize,
    ybar: f64,
    s2: Option<f64>,
    lower: f64,
    upper: f64,
    width: f64,
    method: String,
    df: Option<f64>,
}

impl IntervalRow {
    fn new(group: &str, s: &GroupSummary, iv: &Interval<f64>, df: Option<f64>) -> Self {
        Self {
            group: group.to_string(),
            n: s.n,
            ybar: s.ybar,
            s2: s.s2,
            lower: iv.lower,
            upper: iv.upper,
            width: iv.width(),
            method: iv.method.as_str().to_string(),
            df,
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.group.clone(),
            self.n.to_string(),
            num(self.ybar),
            opt_num(self.s2),
            num(self.lower),
            num(self.upper),
            num(self.width),
            self.method.clone(),
            opt_num(self.df),
        ]
    }
}

#[derive(Serialize)]
struct Skip {
    group: String,
    reason: String,
}

#[derive(Serialize)]
struct IntervalReport {
    method: &'static str,
    alpha: f64,
    intervals: Vec<IntervalRow>,
    skipped: Vec<Skip>,
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::FabZ => "fab-z",
        MethodArg::FabT => "fab-t",
        MethodArg::FabHomo => "fab-homo",
        MethodArg::FabHetero => "fab-hetero",
        MethodArg::Umau => "umau",
        MethodArg::Eb => "eb",
    }
}

fn from_multigroup(r: MultigroupResult) -> (Vec<IntervalRow>, Vec<Skip>) {
    let rows = r
        .intervals
        .iter()
        .map(|g| {
            let df = (g.df.is_finite() && g.df > 0.0).then_some(g.df);
            IntervalRow::new(&g.id, &g.summary, &g.interval, df)
        })
        .collect();
    let skips = r
        .skipped
        .into_iter()
        .map(|s| Skip {
            group: s.id,
            reason: s.reason,
        })
        .collect();
    (rows, skips)
}

struct PerGroup<'a> {
    args: &'a IntervalArgs,
}

impl PerGroup<'_> {
    fn fab_z(&self, s: &GroupSummary) -> Result<(Interval<f64>, Option<f64>), CliError> {
        let m = "fab-z";
        let a = self.args;
        let psi = HomoHierParams::new(
            need(a.mu, "mu", m)?,
            need(a.tau2, "tau2", m)?,
            need(a.sigma2, "sigma2", m)? / s.n as f64,
        )?;
        Ok((fab_z_interval(s.ybar, &psi, a.alpha)?, None))
    }

    fn fab_t(&self, s: &GroupSummary) -> Result<(Interval<f64>, Option<f64>), CliError> {
        let m = "fab-t";
        let a = self.args;
        let prior = NormalInvGammaPrior::new(
            need(a.mu, "mu", m)?,
            need(a.tau2, "tau2", m)?,
            need(a.a, "a", m)?,
            need(a.b, "b", m)?,
            s.n,
        )?;
        let quad = QuadratureConfig::with_nodes(a.quad_nodes);
        let w = if a.exact_kernel {
            BayesW::new(prior, a.alpha, &quad)?
        } else {
            let kernel = AcceptanceKernel::NormalMixture(ChiNodes::new(prior.nu(), a.quad_nodes)?);
            BayesW::with_kernel(prior, a.alpha, &quad, kernel)?
        };
        let nu = (s.n - 1) as f64;
        Ok((fab_t_interval(s.ybar, s.variance()?, s.n, &w, nu, a.alpha)?, Some(nu)))
    }

    fn umau(&self, s: &GroupSummary) -> Result<(Interval<f64>, Option<f64>), CliError> {
        let a = self.args;
        match (s.s2, a.sigma2) {
            (_, Some(sigma2)) => Ok((umau_z_interval(s.ybar, sigma2 / s.n as f64, a.alpha)?, None)),
            (Some(s2), None) => {
                let nu = (s.n - 1) as f64;
                Ok((umau_t_interval(s.ybar, s2, s.n, nu, a.alpha)?, Some(nu)))
            }
            (None, None) => Err(CliError::Usage("umau needs --s2 with --n >= 2, or a known --sigma2".into())),
        }
    }

    fn run(&self, s: &GroupSummary) -> Result<(Interval<f64>, Option<f64>), CliError> {
        match self.args.method {
            MethodArg::FabZ => self.fab_z(s),
            MethodArg::FabT => self.fab_t(s),
            MethodArg::Umau => self.umau(s),
            _ => unreachable!("multigroup methods are dispatched separately"),
        }
    }
}

fn literal_summary(a: &IntervalArgs) -> Result<GroupSummary, CliError> {
    let ybar = a
        .ybar
        .ok_or_else(|| CliError::Usage("give a data file or a summary with --ybar".into()))?;
    let n = a.n.unwrap_or(1);
    Ok(match a.s2 {
        Some(s2) => GroupSummary::from_stats(n, ybar, s2)?,
        None if n == 1 => GroupSummary::single(ybar)?,
        None => {
            if a.method == MethodArg::FabT {
                return Err(CliError::Usage("fab-t requires --s2".into()));
            }
            // mean only, for methods with a known variance
            GroupSummary { n, ybar, s2: None, x2: 0.0 }
        }
    })
}

pub fn interval(a: &IntervalArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must be in (0, 1), got {}", a.alpha)));
    }
    let (rows, skipped) = match (&a.input, a.method) {
        (None, MethodArg::FabHomo | MethodArg::FabHetero | MethodArg::Eb) => {
            return Err(CliError::Usage(format!("{} needs a data file", method_name(a.method))));
        }
        (None, _) => {
            let s = literal_summary(a)?;
            let (iv, df) = PerGroup { args: a }.run(&s)?;
            (vec![IntervalRow::new("1", &s, &iv, df)], Vec::new())
        }
        (Some(path), MethodArg::FabHomo) => {
            let opts = HomoOptions {
                alpha: a.alpha,
                p1: a.p1.map_or(P1Policy::Auto, P1Policy::Fixed),
                estimator: match a.estimator {
                    EstimatorArg::Moments => HomoEstimator::Moments,
                    EstimatorArg::Mle => HomoEstimator::Mle,
                },
            };
            from_multigroup(fab_homoscedastic(&read_dataset(path)?, &opts)?)
        }
        (Some(path), MethodArg::FabHetero) => {
            let opts = HeteroOptions {
                alpha: a.alpha,
                quad: QuadratureConfig::with_nodes(a.quad_nodes),
                kernel: HeteroKernel::Mixture {
                    chi_nodes: a.quad_nodes,
                },
                ..HeteroOptions::default()
            };
            from_multigroup(fab_heteroscedastic(&read_dataset(path)?, &opts)?)
        }
        (Some(path), MethodArg::Eb) => from_multigroup(eb_all(&read_dataset(path)?, a.alpha)?),
        (Some(path), MethodArg::Umau) if a.sigma2.is_none() => from_multigroup(umau_all(&read_dataset(path)?, a.alpha)?),
        (Some(path), _) => per_group_file(&read_dataset(path)?, a)?,
    };
    for s in &skipped {
        eprintln!("skipped {}: {}", s.group, s.reason);
    }
    if rows.is_empty() {
        return Err(CliError::Inadequate("no group produced an interval".into()));
    }
    let cells: Vec<Vec<String>> = rows.iter().map(IntervalRow::cells).collect();
    emit(a.out.as_deref(), &csv_bytes(&INTERVAL_COLUMNS, &cells)?)?;
    if let Some(p) = &a.json {
        let report = IntervalReport {
            method: method_name(a.method),
            alpha: a.alpha,
            intervals: rows,
            skipped,
        };
        write_atomic(p, &json_bytes(&report)?)?;
    }
    Ok(())
}

fn per_group_file(data: &GroupedData, a: &IntervalArgs) -> Result<(Vec<IntervalRow>, Vec<Skip>), CliError> {
    let runner = PerGroup { args: a };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (id, s) in data.ids().zip(data.summaries()) {
        if a.method == MethodArg::FabT && s.n < 2 {
            skipped.push(Skip {
                group: id.to_string(),
                reason: "group has a single observation".into(),
            });
            continue;
        }
        match runner.run(&s) {
            Ok((iv, df)) => rows.push(IntervalRow::new(id, &s, &iv, df)),
            Err(CliError::Numerical(reason)) | Err(CliError::Inadequate(reason)) => skipped.push(Skip {
                group: id.to_string(),
                reason,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((rows, skipped))
}

// simulate

#[derive(Serialize)]
struct ProcedureSummary {
    procedure: &'static str,
    groups: usize,
    mean_coverage: f64,
    min_coverage: f64,
    max_coverage: f64,
    mean_width: f64,
    flatness_chi2: f64,
    flatness_df: usize,
    flatness_p: f64,
    fallbacks: usize,
    failures: usize,
}

#[derive(Serialize)]
struct SimSummary {
    reps: usize,
    seed: u64,
    alpha: f64,
    groups: usize,
    procedures: Vec<ProcedureSummary>,
}

fn parse_procedures(s: &str) -> Result<Vec<Procedure>, CliError> {
    let v = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(Procedure::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage("--procedures is empty".into()));
    }
    Ok(v)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let truth = match a.truth.as_str() {
        "radon-like" => Truth::Fixed(fabci::fixtures::radon_like()),
        "hierarchical" => Truth::Hierarchical {
            n: vec![a.n; a.groups],
            params: HeteroHyperParams {
                mu: a.mu,
                tau2: a.tau2,
                a: a.a,
                b: a.b,
            },
        },
        path => Truth::Fixed(read_truth(Path::new(path))?),
    };
    let mut cfg = SimConfig::new(truth, a.reps, a.seed, parse_procedures(&a.procedures)?);
    cfg.alpha = a.alpha;
    cfg.homo.p1 = a.p1.map_or(P1Policy::Auto, P1Policy::Fixed);
    cfg.hetero.quad = QuadratureConfig::with_nodes(a.quad_nodes);
    cfg.hetero.kernel = HeteroKernel::Mixture {
        chi_nodes: a.quad_nodes,
    };
    let r = fabci::simulate_study(&cfg)?;
    eprintln!("simulated {} replications in {:.1}s", r.reps, r.elapsed_secs);

    let mut cov_rows = Vec::new();
    let mut width_rows = Vec::new();
    let mut procs = Vec::new();
    for p in &r.procedures {
        for g in &p.groups {
            cov_rows.push(vec![
                p.procedure.as_str().to_string(),
                g.id.clone(),
                g.n.to_string(),
                num(g.theta),
                num(g.sigma2),
                g.count.to_string(),
                g.covered.to_string(),
                num(g.coverage),
                num(g.se),
                g.fallbacks.to_string(),
                g.failures.to_string(),
            ]);
            width_rows.push(vec![
                p.procedure.as_str().to_string(),
                g.id.clone(),
                g.n.to_string(),
                g.count.to_string(),
                num(g.mean_width),
            ]);
        }
        let (lo, hi) = p
            .active()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), g| (l.min(g.coverage), h.max(g.coverage)));
        procs.push(ProcedureSummary {
            procedure: p.procedure.as_str(),
            groups: p.active().count(),
            mean_coverage: p.mean_coverage,
            min_coverage: lo,
            max_coverage: hi,
            mean_width: p.mean_width,
            flatness_chi2: p.flatness_chi2,
            flatness_df: p.flatness_df,
            flatness_p: p.flatness_p,
            fallbacks: p.groups.iter().map(|g| g.fallbacks).sum(),
            failures: p.groups.iter().map(|g| g.failures).sum(),
        });
    }
    let summary = json_bytes(&SimSummary {
        reps: r.reps,
        seed: r.seed,
        alpha: r.alpha,
        groups: r.truth.len(),
        procedures: procs,
    })?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let cov_header = [
                "procedure", "group", "n", "theta", "sigma2", "count", "covered", "coverage", "se", "fallbacks", "failures",
            ];
            write_atomic(&dir.join("coverage.csv"), &csv_bytes(&cov_header, &cov_rows)?)?;
            let width_header = ["procedure", "group", "n", "count", "mean_width"];
            write_atomic(&dir.join("widths.csv"), &csv_bytes(&width_header, &width_rows)?)?;
            write_atomic(&dir.join("summary.json"), &summary)
        }
        None => emit(None, &summary),
    }
}

// risk-curve

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--grid expects lo:hi:count, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo || (count > 1 && hi == lo) {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { hi } else { lo + i as f64 * step }).collect())
}

fn parse_list(spec: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{flag}: invalid number '{t}'")))
        })
        .collect()
}

pub fn risk_curve(a: &RiskArgs) -> Result<(), CliError> {
    let tau2s = parse_list(&a.tau2, "tau2")?;
    let mut rows = Vec::new();
    let header: Vec<&str> = match a.kind {
        RiskKind::Z => vec![
            "tau2",
            "theta",
            "expected_width_fab",
            "expected_width_umau",
            "expected_width_fab_mc",
            "mc_se",
        ],
        RiskKind::T => vec!["tau2", "theta", "expected_width_fab", "expected_width_umau", "mc_se"],
    };
    for &tau2 in &tau2s {
        match a.kind {
            RiskKind::Z => {
                let sigma2 = a.sigma2.unwrap_or(1.0);
                let psi = HomoHierParams::new(a.mu, tau2, sigma2)?;
                let thetas = match &a.grid {
                    Some(g) => parse_grid(g)?,
                    None => default_grid(a.mu, sigma2.sqrt()),
                };
                let q = risk_curve_z(&psi, a.alpha, &thetas)?;
                let mc = risk_curve_z_mc(&psi, a.alpha, &thetas, a.reps.unwrap_or(10_000), a.seed)?;
                for (p, m) in q.iter().zip(&mc) {
                    rows.push(vec![num(tau2), num(p.theta), num(p.fab), num(p.umau), num(m.fab), num(m.fab_se)]);
                }
            }
            RiskKind::T => {
                let prior = NormalInvGammaPrior::new(a.mu, tau2, a.a, a.b, a.n)?;
                let sd = (a.sigma2.unwrap_or(prior.sigma2_scale()) / a.n as f64).sqrt();
                let thetas = match &a.grid {
                    Some(g) => parse_grid(g)?,
                    None => default_grid(a.mu, sd),
                };
                let quad = QuadratureConfig::with_nodes(a.quad_nodes);
                let pts: Vec<RiskPoint> =
                    risk_curve_t(&prior, a.alpha, &thetas, a.reps.unwrap_or(2000), a.seed, &quad, a.sigma2)?;
                for p in pts {
                    rows.push(vec![num(tau2), num(p.theta), num(p.fab), num(p.umau), num(p.fab_se)]);
                }
            }
        }
    }
    emit(a.out.as_deref(), &csv_bytes(&header, &rows)?)
}

fn default_grid(mu: f64, sd: f64) -> Vec<f64> {
    (0..121).map(|i| mu + sd * (-6.0 + 0.1 * i as f64)).collect()
}
