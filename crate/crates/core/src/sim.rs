//! Monte Carlo studies of coverage and expected width, and risk curves.
//!
//! Replications run in parallel, each on its own random stream; results are
//! gathered in replication order and reduced serially, so a study gives
//! bit-identical output whatever the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GroupSummary;
use crate::distributions::{std_normal_quantile, t_quantile};
use crate::error::{FabError, Result};
use crate::fab_t::{
    build_w_table_with, fab_t_interval, AcceptanceKernel, BayesW, ChiNodes, NormalInvGammaPrior, QuadratureConfig,
};
use crate::fab_z::{fab_z_interval, fab_z_risk, HomoHierParams};
use crate::fixtures::FixedTruth;
use crate::hierarchy::HeteroHyperParams;
use crate::interval::{check_alpha, ThetaGrid};
use crate::multigroup::{
    eb_outcomes, fab_heteroscedastic_outcomes, fab_homoscedastic_outcomes, umau_outcomes, HeteroOptions, HomoOptions,
    Outcome,
};
use crate::rng::RngStream;
use crate::special::inc_gamma_pair;
use crate::wfn::WFunction;

/// Multigroup procedures a study can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Procedure {
    Umau,
    Eb,
    FabHomo,
    FabHetero,
}

impl Procedure {
    pub fn as_str(self) -> &'static str {
        match self {
            Procedure::Umau => "umau",
            Procedure::Eb => "eb",
            Procedure::FabHomo => "fab-homo",
            Procedure::FabHetero => "fab-hetero",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "umau" => Ok(Procedure::Umau),
            "eb" => Ok(Procedure::Eb),
            "fab-homo" => Ok(Procedure::FabHomo),
            "fab-hetero" => Ok(Procedure::FabHetero),
            other => Err(FabError::Config(format!("unknown procedure '{other}'"))),
        }
    }
}

/// Where the true group means and variances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Truth {
    Fixed(FixedTruth),
    /// θ_j and σ²_j drawn once from the hierarchical model (stream `u64::MAX`
    /// of the study seed) and then held fixed.
    Hierarchical { n: Vec<usize>, params: HeteroHyperParams },
}

impl Truth {
    pub fn resolve(&self, seed: u64) -> Result<FixedTruth> {
        match self {
            Truth::Fixed(t) => Ok(t.clone()),
            Truth::Hierarchical { n, params } => {
                params.validate()?;
                let mut rng = RngStream::new(seed, u64::MAX);
                let mut theta = Vec::with_capacity(n.len());
                let mut sigma2 = Vec::with_capacity(n.len());
                for _ in n {
                    theta.push(rng.normal_with(params.mu, params.tau2.sqrt()));
                    // gamma(a, b) precision as chi-square(2a) / (2b)
                    sigma2.push(2.0 * params.b / rng.chi_square(2.0 * params.a));
                }
                let ids = (0..n.len()).map(|j| format!("g{:0w$}", j + 1, w = digits(n.len()))).collect();
                FixedTruth::new(ids, n.clone(), theta, sigma2)
            }
        }
    }
}

fn digits(n: usize) -> usize {
    n.to_string().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub truth: Truth,
    pub reps: usize,
    pub seed: u64,
    pub procedures: Vec<Procedure>,
    pub alpha: f64,
    pub hetero: HeteroOptions,
    pub homo: HomoOptions,
    /// Run replications on the rayon pool (results do not depend on it).
    pub parallel: bool,
}

impl SimConfig {
    pub fn new(truth: Truth, reps: usize, seed: u64, procedures: Vec<Procedure>) -> Self {
        Self {
            truth,
            reps,
            seed,
            procedures,
            alpha: 0.05,
            hetero: HeteroOptions::default(),
            homo: HomoOptions::default(),
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(FabError::Config("reps must be at least 1".into()));
        }
        if self.procedures.is_empty() {
            return Err(FabError::Config("at least one procedure is required".into()));
        }
        check_alpha(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub id: String,
    pub n: usize,
    pub theta: f64,
    pub sigma2: f64,
    /// Replications that produced an interval for this group.
    pub count: usize,
    pub covered: usize,
    pub coverage: f64,
    /// `√(c(1-c)/count)`.
    pub se: f64,
    pub mean_width: f64,
    /// Intervals that degraded to a simpler procedure.
    pub fallbacks: usize,
    /// Replications where the procedure failed for this group.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureStats {
    pub procedure: Procedure,
    pub groups: Vec<GroupStats>,
    /// Average over groups with at least one interval.
    pub mean_coverage: f64,
    pub mean_width: f64,
    /// Chi-square homogeneity test of coverage across groups.
    pub flatness_chi2: f64,
    pub flatness_df: usize,
    pub flatness_p: f64,
}

impl ProcedureStats {
    pub fn group(&self, id: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.id == id)
    }

    /// Groups that produced intervals.
    pub fn active(&self) -> impl Iterator<Item = &GroupStats> {
        self.groups.iter().filter(|g| g.count > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub truth: FixedTruth,
    pub procedures: Vec<ProcedureStats>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_secs: f64,
}

impl SimResult {
    pub fn procedure(&self, p: Procedure) -> Option<&ProcedureStats> {
        self.procedures.iter().find(|s| s.procedure == p)
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Skip,
    Fail,
    Done { covered: bool, width: f64, fallback: bool },
}

fn cells_from(outcomes: &[Outcome], truth: &FixedTruth) -> Vec<Cell> {
    outcomes
        .iter()
        .zip(&truth.theta)
        .map(|(o, &th)| match o {
            Outcome::Interval { interval, .. } => Cell::Done {
                covered: interval.contains(th),
                width: interval.width(),
                fallback: interval.fallback.is_some(),
            },
            Outcome::Skipped(reason) if reason.contains("single observation") || reason.contains("zero sample variance") => {
                Cell::Skip
            }
            Outcome::Skipped(_) => Cell::Fail,
        })
        .collect()
}

fn run_replication(cfg: &SimConfig, truth: &FixedTruth, rep: usize) -> Vec<Vec<Cell>> {
    let mut rng = RngStream::new(cfg.seed, rep as u64);
    let data = truth.sample(&mut rng);
    let summaries: Vec<GroupSummary> = data.summaries();
    let p = truth.len();
    cfg.procedures
        .iter()
        .map(|proc_| {
            let outcomes = match proc_ {
                Procedure::Umau => Ok(umau_outcomes(&summaries, cfg.alpha)),
                Procedure::Eb => eb_outcomes(&summaries, cfg.alpha),
                Procedure::FabHomo => {
                    let opts = HomoOptions {
                        alpha: cfg.alpha,
                        ..cfg.homo
                    };
                    fab_homoscedastic_outcomes(&summaries, &opts)
                }
                Procedure::FabHetero => {
                    let opts = HeteroOptions {
                        alpha: cfg.alpha,
                        ..cfg.hetero
                    };
                    Ok(fab_heteroscedastic_outcomes(&summaries, &opts, false))
                }
            };
            match outcomes {
                Ok(o) => cells_from(&o, truth),
                Err(_) => vec![Cell::Fail; p],
            }
        })
        .collect()
}

fn flatness(groups: &[GroupStats]) -> (f64, usize, f64) {
    let active: Vec<&GroupStats> = groups.iter().filter(|g| g.count > 0).collect();
    if active.len() < 2 {
        return (0.0, 0, 1.0);
    }
    let total: usize = active.iter().map(|g| g.count).sum();
    let cov: usize = active.iter().map(|g| g.covered).sum();
    let pbar = cov as f64 / total as f64;
    if pbar <= 0.0 || pbar >= 1.0 {
        return (0.0, active.len() - 1, 1.0);
    }
    let stat: f64 = active
        .iter()
        .map(|g| {
            let e = g.count as f64 * pbar;
            (g.covered as f64 - e).powi(2) / (e * (1.0 - pbar))
        })
        .sum();
    let df = active.len() - 1;
    let p = inc_gamma_pair(0.5 * df as f64, 0.5 * stat).map(|(_, q)| q).unwrap_or(f64::NAN);
    (stat, df, p)
}

/// Runs the study. Per-replication failures are counted, never fatal.
pub fn simulate_study(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let start = Instant::now();
    let truth = cfg.truth.resolve(cfg.seed)?;
    let reps: Vec<Vec<Vec<Cell>>> = if cfg.parallel {
        (0..cfg.reps)
            .into_par_iter()
            .map(|r| run_replication(cfg, &truth, r))
            .collect()
    } else {
        (0..cfg.reps).map(|r| run_replication(cfg, &truth, r)).collect()
    };
    let p = truth.len();
    let mut procedures = Vec::with_capacity(cfg.procedures.len());
    for (k, &procedure) in cfg.procedures.iter().enumerate() {
        let mut groups = Vec::with_capacity(p);
        for j in 0..p {
            let (mut count, mut covered, mut fallbacks, mut failures) = (0usize, 0usize, 0usize, 0usize);
            let mut width_sum = 0.0;
            for rep in &reps {
                match rep[k][j] {
                    Cell::Skip => {}
                    Cell::Fail => failures += 1,
                    Cell::Done { covered: c, width, fallback } => {
                        count += 1;
                        covered += c as usize;
                        width_sum += width;
                        fallbacks += fallback as usize;
                    }
                }
            }
            let coverage = if count > 0 { covered as f64 / count as f64 } else { f64::NAN };
            groups.push(GroupStats {
                id: truth.ids[j].clone(),
                n: truth.n[j],
                theta: truth.theta[j],
                sigma2: truth.sigma2[j],
                count,
                covered,
                coverage,
                se: if count > 0 { (coverage * (1.0 - coverage) / count as f64).sqrt() } else { f64::NAN },
                mean_width: if count > 0 { width_sum / count as f64 } else { f64::NAN },
                fallbacks,
                failures,
            });
        }
        let active: Vec<&GroupStats> = groups.iter().filter(|g| g.count > 0).collect();
        let m = active.len().max(1) as f64;
        let mean_coverage = active.iter().map(|g| g.coverage).sum::<f64>() / m;
        let mean_width = active.iter().map(|g| g.mean_width).sum::<f64>() / m;
        let (flatness_chi2, flatness_df, flatness_p) = flatness(&groups);
        procedures.push(ProcedureStats {
            procedure,
            groups,
            mean_coverage,
            mean_width,
            flatness_chi2,
            flatness_df,
            flatness_p,
        });
    }
    Ok(SimResult {
        reps: cfg.reps,
        seed: cfg.seed,
        alpha: cfg.alpha,
        truth,
        procedures,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Expected widths at one θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub theta: f64,
    pub fab: f64,
    pub umau: f64,
    /// Monte Carlo standard error of `fab` (zero for quadrature).
    pub fab_se: f64,
}

/// FAB z risk by Gauss–Legendre quadrature over `y ~ N(θ, σ²_eff)`.
pub fn risk_curve_z(psi: &HomoHierParams<f64>, alpha: f64, thetas: &[f64]) -> Result<Vec<RiskPoint>> {
    let umau = -2.0 * std_normal_quantile(0.5 * alpha)? * psi.sigma2_eff.sqrt();
    thetas
        .iter()
        .map(|&theta| {
            Ok(RiskPoint {
                theta,
                fab: fab_z_risk(theta, psi, alpha, 200)?,
                umau,
                fab_se: 0.0,
            })
        })
        .collect()
}

/// FAB z risk by Monte Carlo, as an independent check on [`risk_curve_z`].
pub fn risk_curve_z_mc(
    psi: &HomoHierParams<f64>,
    alpha: f64,
    thetas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<RiskPoint>> {
    let sd = psi.sigma2_eff.sqrt();
    let umau = -2.0 * std_normal_quantile(0.5 * alpha)? * sd;
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut rng = RngStream::new(seed, i as u64);
            let widths = (0..draws)
                .map(|_| fab_z_interval(rng.normal_with(theta, sd), psi, alpha).map(|iv| iv.width()))
                .collect::<Result<Vec<f64>>>()?;
            let (m, se) = mean_se(&widths);
            Ok(RiskPoint {
                theta,
                fab: m,
                umau,
                fab_se: se,
            })
        })
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

/// Monte Carlo FAB t risk for a given w-function. With `sigma2 = None`, σ² is
/// drawn from the prior in each replication (the marginal risk); otherwise it
/// is held at the given value.
pub fn risk_curve_t_with<W: WFunction<f64> + ?Sized>(
    w_fn: &W,
    prior: &NormalInvGammaPrior<f64>,
    alpha: f64,
    thetas: &[f64],
    reps: usize,
    seed: u64,
    sigma2: Option<f64>,
) -> Result<Vec<RiskPoint>> {
    prior.validate()?;
    check_alpha(alpha)?;
    if reps < 2 {
        return Err(FabError::Config("risk curve needs at least 2 replications".into()));
    }
    let n = prior.n;
    let nu = prior.nu();
    let t = -t_quantile(0.5 * alpha, nu)?;
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut fab = Vec::with_capacity(reps);
            let mut umau = Vec::with_capacity(reps);
            for _ in 0..reps {
                let s2_true = match sigma2 {
                    Some(v) => v,
                    None => 2.0 * prior.b / rng.chi_square(2.0 * prior.a),
                };
                let ybar = rng.normal_with(theta, (s2_true / n as f64).sqrt());
                let s2 = s2_true * rng.chi_square(nu) / nu;
                fab.push(fab_t_interval(ybar, s2, n, w_fn, nu, alpha)?.width());
                umau.push(2.0 * t * (s2 / n as f64).sqrt());
            }
            let (m, se) = mean_se(&fab);
            Ok(RiskPoint {
                theta,
                fab: m,
                umau: mean_se(&umau).0,
                fab_se: se,
            })
        })
        .collect()
}

/// FAB t risk with the Bayes-optimal w tabulated on 401 knots; `sigma2` as
/// in [`risk_curve_t_with`].
pub fn risk_curve_t(
    prior: &NormalInvGammaPrior<f64>,
    alpha: f64,
    thetas: &[f64],
    reps: usize,
    seed: u64,
    quad: &QuadratureConfig,
    sigma2: Option<f64>,
) -> Result<Vec<RiskPoint>> {
    let bw = BayesW::with_kernel(
        *prior,
        alpha,
        quad,
        AcceptanceKernel::NormalMixture(ChiNodes::new(prior.nu(), quad.n_nodes)?),
    )?;
    let half = prior.table_half_range();
    let lo = thetas.iter().cloned().fold(prior.mu - half, f64::min);
    let hi = thetas.iter().cloned().fold(prior.mu + half, f64::max);
    let table = build_w_table_with(&bw, &ThetaGrid::new(lo, hi, 401)?)?;
    risk_curve_t_with(&table, prior, alpha, thetas, reps, seed, sigma2)
}
