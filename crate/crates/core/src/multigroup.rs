//! Per-group intervals for multigroup data.
//!
//! The FAB procedures keep each group's own data out of the hyperparameters
//! used for its w-function, so every group's interval has exact coverage
//! whatever the other groups look like.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{GroupSummary, GroupedData};
use crate::error::{FabError, Result};
use crate::fab_t::{fab_t_interval, umau_t_interval, AcceptanceKernel, BayesW, ChiNodes, NormalInvGammaPrior, QuadratureConfig};
use crate::fab_z::PrattW;
use crate::hierarchy::{
    eb_posterior_interval, fit_heteroscedastic, fit_homoscedastic_mle, fit_moments,
    fit_plugin_mu_tau, HeteroHyperParams, HomoEstimate, SingletonPolicy,
};
use crate::interval::{Interval, Method};

/// Partition of the groups for one target: the target, the groups whose
/// variances are pooled with it, and the groups ψ̂ is estimated from.
/// Indices refer to groups in identifier order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub target: usize,
    pub pool: Vec<usize>,
    pub estimation: Vec<usize>,
}

impl SplitPlan {
    /// The pool is the `p1 - 1` groups following the target cyclically; the
    /// estimation set is everything else (`p - p1` groups).
    pub fn new(target: usize, p: usize, p1: usize) -> Result<Self> {
        if p1 < 2 {
            return Err(FabError::Config(format!("p1 must be at least 2, got {p1}")));
        }
        if p < p1 + 2 {
            return Err(FabError::InsufficientData(format!(
                "group splitting needs p >= p1 + 2 (p = {p}, p1 = {p1})"
            )));
        }
        if target >= p {
            return Err(FabError::Config(format!("target {target} out of range for {p} groups")));
        }
        let pool: Vec<usize> = (1..p1).map(|k| (target + k) % p).collect();
        let estimation: Vec<usize> = (p1..p).map(|k| (target + k) % p).collect();
        Ok(Self {
            target,
            pool,
            estimation,
        })
    }
}

/// How many groups share their variance with each target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum P1Policy {
    /// Smallest p₁ with `p₁(n̄ - 1) >= 50`, capped at `⌈p/2⌉` (and at `p - 2`).
    #[default]
    Auto,
    Fixed(usize),
}

impl P1Policy {
    pub fn resolve(&self, summaries: &[GroupSummary]) -> Result<usize> {
        let p = summaries.len();
        match *self {
            P1Policy::Fixed(p1) => Ok(p1),
            P1Policy::Auto => {
                if p < 4 {
                    return Err(FabError::InsufficientData(format!(
                        "group splitting needs at least 4 groups, got {p}"
                    )));
                }
                let nbar = summaries.iter().map(|s| s.n as f64).sum::<f64>() / p as f64;
                let per = (nbar - 1.0).max(1e-12);
                let wanted = (50.0 / per).ceil().max(2.0) as usize;
                Ok(wanted.min(p.div_ceil(2)).min(p - 2).max(2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HomoEstimator {
    #[default]
    Moments,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoOptions {
    pub alpha: f64,
    pub p1: P1Policy,
    pub estimator: HomoEstimator,
}

impl Default for HomoOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            p1: P1Policy::Auto,
            estimator: HomoEstimator::Moments,
        }
    }
}

/// Kernel and node counts for the per-group Bayes-optimal w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HeteroKernel {
    /// Normal mixture over `chi_nodes` chi-square nodes, first-order solve.
    Mixture { chi_nodes: usize },
    /// Noncentral t with the reference Brent search.
    NoncentralT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroOptions {
    pub alpha: f64,
    pub quad: QuadratureConfig,
    pub kernel: HeteroKernel,
    pub singletons: SingletonPolicy,
}

impl Default for HeteroOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            quad: QuadratureConfig::with_nodes(21),
            kernel: HeteroKernel::Mixture { chi_nodes: 21 },
            singletons: SingletonPolicy::PriorMean,
        }
    }
}

/// The hyperparameters behind one group's interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HyperUsed {
    None,
    Homo { estimate: HomoEstimate, p1: usize },
    Hetero(HeteroHyperParams),
    Plugin { mu: f64, tau2: f64 },
}

/// Result for one group, by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Interval {
        interval: Interval<f64>,
        df: f64,
        hyper: HyperUsed,
    },
    Skipped(String),
}

impl Outcome {
    pub fn interval(&self) -> Option<&Interval<f64>> {
        match self {
            Outcome::Interval { interval, .. } => Some(interval),
            Outcome::Skipped(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupInterval {
    pub id: String,
    pub summary: GroupSummary,
    pub interval: Interval<f64>,
    pub df: f64,
    pub hyper: HyperUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGroup {
    pub id: String,
    pub reason: String,
}

/// Every input group appears once, either in `intervals` or in `skipped`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MultigroupResult {
    pub intervals: Vec<GroupInterval>,
    pub skipped: Vec<SkippedGroup>,
}

impl MultigroupResult {
    fn assemble(data: &GroupedData, summaries: &[GroupSummary], outcomes: Vec<Outcome>) -> Self {
        let mut out = Self::default();
        for ((id, s), o) in data.ids().zip(summaries).zip(outcomes) {
            match o {
                Outcome::Interval { interval, df, hyper } => out.intervals.push(GroupInterval {
                    id: id.to_string(),
                    summary: *s,
                    interval,
                    df,
                    hyper,
                }),
                Outcome::Skipped(reason) => out.skipped.push(SkippedGroup {
                    id: id.to_string(),
                    reason,
                }),
            }
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&GroupInterval> {
        self.intervals.iter().find(|g| g.id == id)
    }

    pub fn mean_width(&self) -> f64 {
        self.intervals.iter().map(|g| g.interval.width()).sum::<f64>() / self.intervals.len() as f64
    }
}

/// Pooled variance of the target with a pool of equal-size groups:
/// `Σ x² / (p₁(n-1))` with `df = p₁(n-1)`.
pub fn pooled_variance(target: &GroupSummary, pool: &[GroupSummary]) -> Result<(f64, usize)> {
    if let Some(bad) = pool.iter().find(|s| s.n != target.n) {
        return Err(FabError::Config(format!(
            "pooled variance expects a common group size ({} vs {}); use pooled_variance_unequal",
            target.n, bad.n
        )));
    }
    pooled_variance_unequal(target, pool)
}

/// Pooled variance allowing unequal sizes: `df = Σ (n_k - 1)` over target and pool.
pub fn pooled_variance_unequal(target: &GroupSummary, pool: &[GroupSummary]) -> Result<(f64, usize)> {
    let mut x2 = 0.0;
    let mut df = 0usize;
    for s in std::iter::once(target).chain(pool) {
        if s.n < 2 {
            return Err(FabError::InsufficientData("pooled groups need n >= 2".into()));
        }
        x2 += s.x2;
        df += s.n - 1;
    }
    if !(x2 > 0.0) {
        return Err(FabError::InsufficientData("pooled sum of squares is zero".into()));
    }
    Ok((x2 / df as f64, df))
}

/// What a homoscedastic FAB interval for one target is built from. None of
/// it depends on the target's sample mean.
#[derive(Debug, Clone, Copy)]
pub struct HomoTarget {
    pub w: PrattW<f64>,
    pub s2_pooled: f64,
    pub df: usize,
    pub estimate: HomoEstimate,
    pub p1: usize,
}

fn homo_eligible(summaries: &[GroupSummary], opts: &HomoOptions) -> Result<(Vec<usize>, usize)> {
    let eligible: Vec<usize> = (0..summaries.len()).filter(|&k| summaries[k].n >= 2).collect();
    let elig_summaries: Vec<GroupSummary> = eligible.iter().map(|&k| summaries[k]).collect();
    let p1 = opts.p1.resolve(&elig_summaries)?;
    if eligible.len() < p1 + 2 {
        return Err(FabError::InsufficientData(format!(
            "group splitting needs p >= p1 + 2 groups with n >= 2 (have {}, p1 = {p1})",
            eligible.len()
        )));
    }
    Ok((eligible, p1))
}

fn homo_target_in(
    j: usize,
    eligible: &[usize],
    summaries: &[GroupSummary],
    p1: usize,
    opts: &HomoOptions,
) -> Result<HomoTarget> {
    let pos = eligible
        .iter()
        .position(|&k| k == j)
        .ok_or_else(|| FabError::InsufficientData("target group has a single observation".into()))?;
    let plan = SplitPlan::new(pos, eligible.len(), p1)?;
    let target = &summaries[j];
    let pool: Vec<GroupSummary> = plan.pool.iter().map(|&k| summaries[eligible[k]]).collect();
    let est: Vec<GroupSummary> = plan.estimation.iter().map(|&k| summaries[eligible[k]]).collect();
    let (s2_pooled, df) = pooled_variance_unequal(target, &pool)?;
    let estimate = match opts.estimator {
        HomoEstimator::Moments => fit_moments(&est)?,
        HomoEstimator::Mle => fit_homoscedastic_mle(&est)?.0,
    };
    let w = PrattW::new(estimate.psi(target.n)?, opts.alpha)?;
    Ok(HomoTarget {
        w,
        s2_pooled,
        df,
        estimate,
        p1,
    })
}

/// Split, pooled variance and w-function for target `j`.
pub fn homo_target(j: usize, summaries: &[GroupSummary], opts: &HomoOptions) -> Result<HomoTarget> {
    let (eligible, p1) = homo_eligible(summaries, opts)?;
    homo_target_in(j, &eligible, summaries, p1, opts)
}

fn homo_group(
    j: usize,
    eligible: &[usize],
    summaries: &[GroupSummary],
    p1: usize,
    opts: &HomoOptions,
) -> Result<(Interval<f64>, f64, HyperUsed)> {
    let t = homo_target_in(j, eligible, summaries, p1, opts)?;
    let target = &summaries[j];
    let mut iv = fab_t_interval(target.ybar, t.s2_pooled, target.n, &t.w, t.df as f64, opts.alpha)?;
    iv.method = Method::FabHomoscedastic;
    Ok((
        iv,
        t.df as f64,
        HyperUsed::Homo {
            estimate: t.estimate,
            p1: t.p1,
        },
    ))
}

/// Homoscedastic FAB intervals by position. Groups with `n < 2` are skipped.
pub fn fab_homoscedastic_outcomes(summaries: &[GroupSummary], opts: &HomoOptions) -> Result<Vec<Outcome>> {
    let (eligible, p1) = homo_eligible(summaries, opts)?;
    summaries
        .iter()
        .enumerate()
        .map(|(j, s)| {
            if s.n < 2 {
                return Ok(Outcome::Skipped("group has a single observation".into()));
            }
            match homo_group(j, &eligible, summaries, p1, opts) {
                Ok((interval, df, hyper)) => Ok(Outcome::Interval { interval, df, hyper }),
                Err(e) if matches!(e, FabError::Config(_)) => Err(e),
                Err(e) => Ok(Outcome::Skipped(format!("{e}"))),
            }
        })
        .collect()
}

/// Homoscedastic FAB t-intervals with group splitting and pooled variances.
pub fn fab_homoscedastic(data: &GroupedData, opts: &HomoOptions) -> Result<MultigroupResult> {
    let summaries = data.summaries();
    let outcomes = fab_homoscedastic_outcomes(&summaries, opts)?;
    Ok(MultigroupResult::assemble(data, &summaries, outcomes))
}

/// Evaluator for the per-group Bayes-optimal w under the chosen kernel.
pub fn hetero_w_function(prior: NormalInvGammaPrior<f64>, opts: &HeteroOptions) -> Result<BayesW<f64>> {
    match opts.kernel {
        HeteroKernel::Mixture { chi_nodes } => BayesW::with_kernel(
            prior,
            opts.alpha,
            &opts.quad,
            AcceptanceKernel::NormalMixture(ChiNodes::new(prior.nu(), chi_nodes)?),
        ),
        HeteroKernel::NoncentralT => BayesW::new(prior, opts.alpha, &opts.quad),
    }
}

/// One group's heteroscedastic FAB interval given leave-one-out hyperparameters.
pub fn hetero_group_interval(s: &GroupSummary, hyper: &HeteroHyperParams, opts: &HeteroOptions) -> Result<Interval<f64>> {
    let s2 = s.variance()?;
    let prior = NormalInvGammaPrior::new(hyper.mu, hyper.tau2, hyper.a, hyper.b, s.n)?;
    let w = hetero_w_function(prior, opts)?;
    let mut iv = fab_t_interval(s.ybar, s2, s.n, &w, (s.n - 1) as f64, opts.alpha)?;
    iv.method = Method::FabHeteroscedastic;
    Ok(iv)
}

/// Leave-one-out hyperparameters and the w-function for target `j`. Only the
/// other groups' data enter.
pub fn hetero_target(j: usize, summaries: &[GroupSummary], opts: &HeteroOptions) -> Result<(BayesW<f64>, HeteroHyperParams)> {
    let others: Vec<GroupSummary> = summaries
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, s)| *s)
        .collect();
    let h = fit_heteroscedastic(&others, opts.singletons)?;
    h.validate()?;
    let prior = NormalInvGammaPrior::new(h.mu, h.tau2, h.a, h.b, summaries[j].n)?;
    Ok((hetero_w_function(prior, opts)?, h))
}

fn hetero_outcome(j: usize, summaries: &[GroupSummary], opts: &HeteroOptions) -> Outcome {
    let s = &summaries[j];
    if s.n < 2 {
        return Outcome::Skipped("group has a single observation".into());
    }
    if s.x2 <= 0.0 {
        return Outcome::Skipped("zero sample variance".into());
    }
    let df = (s.n - 1) as f64;
    let attempt = hetero_target(j, summaries, opts).and_then(|(w, h)| {
        let mut iv = fab_t_interval(s.ybar, s.x2 / df, s.n, &w, df, opts.alpha)?;
        iv.method = Method::FabHeteroscedastic;
        Ok((iv, h))
    });
    match attempt {
        Ok((interval, h)) => Outcome::Interval {
            interval,
            df,
            hyper: HyperUsed::Hetero(h),
        },
        Err(e) => match umau_t_interval(s.ybar, s.x2 / df, s.n, df, opts.alpha) {
            Ok(mut interval) => {
                interval.fallback = Some(format!("leave-one-out FAB failed ({e}); UMAU interval returned"));
                Outcome::Interval {
                    interval,
                    df,
                    hyper: HyperUsed::None,
                }
            }
            Err(e2) => Outcome::Skipped(format!("{e2}")),
        },
    }
}

/// Heteroscedastic FAB intervals by position. Each leave-one-out fit starts
/// from a point computed without group j, so group j's data cannot leak in
/// even at the level of optimizer tolerance.
pub fn fab_heteroscedastic_outcomes(summaries: &[GroupSummary], opts: &HeteroOptions, parallel: bool) -> Vec<Outcome> {
    if parallel {
        (0..summaries.len())
            .into_par_iter()
            .map(|j| hetero_outcome(j, summaries, opts))
            .collect()
    } else {
        (0..summaries.len()).map(|j| hetero_outcome(j, summaries, opts)).collect()
    }
}

/// Heteroscedastic FAB t-intervals with leave-one-out hyperparameters.
/// Per-group estimation failures fall back to UMAU with the reason recorded.
pub fn fab_heteroscedastic(data: &GroupedData, opts: &HeteroOptions) -> Result<MultigroupResult> {
    if data.is_empty() {
        return Err(FabError::InsufficientData("no groups".into()));
    }
    let summaries = data.summaries();
    if summaries.iter().all(|s| s.n < 2) {
        return Err(FabError::InsufficientData("every group has a single observation".into()));
    }
    let outcomes = fab_heteroscedastic_outcomes(&summaries, opts, true);
    Ok(MultigroupResult::assemble(data, &summaries, outcomes))
}

/// Per-group UMAU t-intervals by position.
pub fn umau_outcomes(summaries: &[GroupSummary], alpha: f64) -> Vec<Outcome> {
    summaries
        .iter()
        .map(|s| {
            if s.n < 2 {
                return Outcome::Skipped("group has a single observation".into());
            }
            let df = (s.n - 1) as f64;
            match umau_t_interval(s.ybar, s.x2 / df, s.n, df, alpha) {
                Ok(interval) => Outcome::Interval {
                    interval,
                    df,
                    hyper: HyperUsed::None,
                },
                Err(e) => Outcome::Skipped(format!("{e}")),
            }
        })
        .collect()
}

pub fn umau_all(data: &GroupedData, alpha: f64) -> Result<MultigroupResult> {
    crate::interval::check_alpha(alpha)?;
    let summaries = data.summaries();
    Ok(MultigroupResult::assemble(data, &summaries, umau_outcomes(&summaries, alpha)))
}

/// Per-group EB posterior intervals by position, with `(μ̂, τ̂²)` from the
/// plug-in fit using each group's own `s²_j`.
pub fn eb_outcomes(summaries: &[GroupSummary], alpha: f64) -> Result<Vec<Outcome>> {
    let used: Vec<GroupSummary> = summaries.iter().filter(|s| s.n >= 2 && s.x2 > 0.0).copied().collect();
    if used.len() < 2 {
        return Err(FabError::InsufficientData(
            "EB intervals need at least 2 groups with positive variance".into(),
        ));
    }
    let vars: Vec<f64> = used.iter().map(|s| s.x2 / (s.n - 1) as f64).collect();
    let fit = fit_plugin_mu_tau(&used, &vars)?;
    Ok(summaries
        .iter()
        .map(|s| {
            if s.n < 2 {
                return Outcome::Skipped("group has a single observation".into());
            }
            match eb_posterior_interval(s, fit.mu, fit.tau2, alpha) {
                Ok(interval) => Outcome::Interval {
                    interval,
                    df: (s.n - 1) as f64,
                    hyper: HyperUsed::Plugin {
                        mu: fit.mu,
                        tau2: fit.tau2,
                    },
                },
                Err(e) => Outcome::Skipped(format!("{e}")),
            }
        })
        .collect())
}

pub fn eb_all(data: &GroupedData, alpha: f64) -> Result<MultigroupResult> {
    crate::interval::check_alpha(alpha)?;
    let summaries = data.summaries();
    let outcomes = eb_outcomes(&summaries, alpha)?;
    Ok(MultigroupResult::assemble(data, &summaries, outcomes))
}
