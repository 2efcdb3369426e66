//! Hyperparameter estimation for hierarchical normal models, the
//! empirical-Bayes posterior interval, and the Brown–Forsythe Levene test.
//!
//! Homoscedastic model: `ȳ_j ~ N(μ, τ² + σ²/n_j)`, `x²_j ~ σ² χ²_{n_j-1}`.
//! Heteroscedastic model: as above with group-specific σ²_j and
//! `1/σ²_j ~ gamma(a, b)` (shape, rate).

use serde::{Deserialize, Serialize};

use crate::data::{GroupSummary, GroupedData};
use crate::distributions::{f_sf, t_quantile};
use crate::error::{FabError, Result};
use crate::fab_z::HomoHierParams;
use crate::interval::{check_alpha, Diagnostics, Interval, Method};
use crate::optimize::{bfgs, BfgsOptions};
use crate::roots::{brent_minimize, brent_root, RootOptions};
use crate::special::{digamma, ln_gamma};

/// Estimated τ² never drops below this multiple of the within-group variance scale.
pub const TAU2_FLOOR_EST: f64 = 1e-10;

/// Cap on the fitted gamma shape. Without heteroscedasticity the likelihood
/// keeps rising as `a → ∞` at fixed `b/a`; at the cap the prior on σ² has a
/// coefficient of variation of 0.3%.
pub const GAMMA_SHAPE_MAX: f64 = 1e5;

/// Homoscedastic estimates `(μ, τ², σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoEstimate {
    pub mu: f64,
    pub tau2: f64,
    pub sigma2: f64,
}

impl HomoEstimate {
    /// ψ for a group mean of `n` observations.
    pub fn psi(&self, n: usize) -> Result<HomoHierParams<f64>> {
        HomoHierParams::new(self.mu, self.tau2, self.sigma2 / n as f64)
    }
}

/// Iteration record of a likelihood fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTrace {
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each accepted step; nondecreasing.
    pub loglik: Vec<f64>,
    pub grad_norm: f64,
}

/// Hyperparameters `(μ, τ², a, b)` of the heteroscedastic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroHyperParams {
    pub mu: f64,
    pub tau2: f64,
    pub a: f64,
    pub b: f64,
}

impl HeteroHyperParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(FabError::domain("mu", self.mu));
        }
        if !(self.tau2 > 0.0) || !self.tau2.is_finite() {
            return Err(FabError::domain("tau2", self.tau2));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(FabError::domain("a", self.a));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(FabError::domain("b", self.b));
        }
        Ok(())
    }

    /// Prior mean of σ², or `None` when `a <= 1`.
    pub fn sigma2_prior_mean(&self) -> Option<f64> {
        (self.a > 1.0).then(|| self.b / (self.a - 1.0))
    }
}

/// `(a, b)` from the marginal likelihood of the `x²_j`, plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub a: f64,
    pub b: f64,
    pub trace: FitTrace,
}

/// `(μ, τ²)` maximizing the plug-in marginal likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluginFit {
    pub mu: f64,
    pub tau2: f64,
    pub loglik: f64,
}

/// What to do with `n_j = 1` groups, which carry a mean but no variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SingletonPolicy {
    /// Use the prior mean `b/(a-1)` as σ²_j when `a > 1`, otherwise drop the group.
    #[default]
    PriorMean,
    Exclude,
}

fn with_variance(summaries: &[GroupSummary]) -> Vec<&GroupSummary> {
    summaries.iter().filter(|s| s.n >= 2).collect()
}

fn mean(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    xs.sum::<f64>() / n
}

/// Moment estimates: `σ̂²` the mean of the `s²_j`, `μ̂` the mean of the `ȳ_j`,
/// `τ̂² = max(var(ȳ) - σ̂² mean(1/n_j), floor)`.
pub fn fit_moments(summaries: &[GroupSummary]) -> Result<HomoEstimate> {
    let with_var = with_variance(summaries);
    if with_var.len() < 2 {
        return Err(FabError::InsufficientData(
            "moment fit needs at least 2 groups with n >= 2".into(),
        ));
    }
    let sigma2 = mean(with_var.iter().map(|s| s.x2 / (s.n - 1) as f64));
    let p = summaries.len() as f64;
    let mu = mean(summaries.iter().map(|s| s.ybar));
    let var_ybar = summaries.iter().map(|s| (s.ybar - mu).powi(2)).sum::<f64>() / (p - 1.0);
    let inv_n = mean(summaries.iter().map(|s| 1.0 / s.n as f64));
    let floor = tau2_floor(sigma2, summaries);
    let tau2 = (var_ybar - sigma2 * inv_n).max(floor);
    Ok(HomoEstimate { mu, tau2, sigma2 })
}

fn tau2_floor(sigma2: f64, summaries: &[GroupSummary]) -> f64 {
    let scale = if sigma2 > 0.0 {
        sigma2
    } else {
        summaries.iter().map(|s| s.ybar * s.ybar).fold(1.0, f64::max)
    };
    TAU2_FLOOR_EST * scale
}

/// Maximum marginal likelihood for the one-way random-effects model, with μ
/// profiled out and BFGS over `(ln(τ² - floor), ln σ²)`.
///
/// If every observation is identical the likelihood has no interior maximum;
/// then `μ̂` is that value, `σ̂²` is `1e-10 · max(μ̂², 1)` and `τ̂²` its floor.
pub fn fit_homoscedastic_mle(summaries: &[GroupSummary]) -> Result<(HomoEstimate, FitTrace)> {
    let p = summaries.len();
    if p < 2 {
        return Err(FabError::InsufficientData("MLE needs at least 2 groups".into()));
    }
    let within_df: usize = summaries.iter().map(|s| s.n - 1).sum();
    if within_df == 0 {
        return Err(FabError::InsufficientData(
            "MLE needs more observations than groups".into(),
        ));
    }
    let x2_total: f64 = summaries.iter().map(|s| s.x2).sum();
    let start = fit_moments_loose(summaries, x2_total / within_df as f64);
    if x2_total == 0.0 && summaries.iter().all(|s| s.ybar == summaries[0].ybar) {
        let mu = summaries[0].ybar;
        let sigma2 = 1e-10 * mu.abs().max(1.0).powi(2);
        return Ok((
            HomoEstimate {
                mu,
                tau2: TAU2_FLOOR_EST * sigma2,
                sigma2,
            },
            FitTrace {
                converged: true,
                ..FitTrace::default()
            },
        ));
    }
    let sigma2_start = if start.sigma2 > 0.0 {
        start.sigma2
    } else {
        // all within-group spread is zero: start from the between-group scale
        start.tau2.max(1e-300)
    };
    let floor = tau2_floor(sigma2_start, summaries);
    let ns: Vec<f64> = summaries.iter().map(|s| s.n as f64).collect();
    let ys: Vec<f64> = summaries.iter().map(|s| s.ybar).collect();
    let wdf = within_df as f64;

    // negative log-likelihood (up to constants) and gradient in (u, v)
    let nll = |x: &[f64]| -> (f64, Vec<f64>) {
        let (eu, sigma2) = (x[0].exp(), x[1].exp());
        let tau2 = floor + eu;
        let (mut sw, mut swy) = (0.0, 0.0);
        for (&n, &y) in ns.iter().zip(&ys) {
            let v = tau2 + sigma2 / n;
            sw += 1.0 / v;
            swy += y / v;
        }
        let mu = swy / sw;
        let (mut f, mut g_tau, mut g_sig) = (0.0, 0.0, 0.0);
        for (&n, &y) in ns.iter().zip(&ys) {
            let v = tau2 + sigma2 / n;
            let r2 = (y - mu) * (y - mu);
            f += 0.5 * v.ln() + r2 / (2.0 * v);
            let d = 1.0 / (2.0 * v) - r2 / (2.0 * v * v);
            g_tau += d;
            g_sig += d / n;
        }
        f += 0.5 * wdf * sigma2.ln() + x2_total / (2.0 * sigma2);
        g_sig += 0.5 * wdf / sigma2 - x2_total / (2.0 * sigma2 * sigma2);
        (f, vec![g_tau * eu, g_sig * sigma2])
    };
    let u0 = (start.tau2 - floor).max(floor).max(1e-3 * sigma2_start).ln();
    let res = bfgs(nll, &[u0, sigma2_start.ln()], &BfgsOptions::default());
    let tau2 = floor + res.x[0].exp();
    let sigma2 = res.x[1].exp();
    let (mut sw, mut swy) = (0.0, 0.0);
    for (&n, &y) in ns.iter().zip(&ys) {
        let v = tau2 + sigma2 / n;
        sw += 1.0 / v;
        swy += y / v;
    }
    let grad_norm = res.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let trace = FitTrace {
        iterations: res.iterations,
        converged: res.converged,
        loglik: res.trace.iter().map(|f| -f).collect(),
        grad_norm,
    };
    if !res.converged && grad_norm > 1e-4 {
        return Err(FabError::Convergence {
            what: "homoscedastic MLE",
            iterations: res.iterations,
            residual: grad_norm,
        });
    }
    Ok((
        HomoEstimate {
            mu: swy / sw,
            tau2,
            sigma2,
        },
        trace,
    ))
}

/// Moment-style start values that tolerate singleton groups.
fn fit_moments_loose(summaries: &[GroupSummary], sigma2: f64) -> HomoEstimate {
    let p = summaries.len() as f64;
    let mu = mean(summaries.iter().map(|s| s.ybar));
    let var_ybar = summaries.iter().map(|s| (s.ybar - mu).powi(2)).sum::<f64>() / (p - 1.0);
    let inv_n = mean(summaries.iter().map(|s| 1.0 / s.n as f64));
    let tau2 = (var_ybar - sigma2 * inv_n).max(0.1 * var_ybar);
    HomoEstimate { mu, tau2, sigma2 }
}

/// Marginal log-likelihood of the `x²_j` under `1/σ²_j ~ gamma(a, b)`,
/// dropping terms free of `(a, b)`.
pub fn gamma_marginal_loglik(summaries: &[GroupSummary], a: f64, b: f64) -> f64 {
    with_variance(summaries)
        .iter()
        .map(|s| {
            let m = 0.5 * (s.n - 1) as f64;
            ln_gamma(a + m) - ln_gamma(a) + a * b.ln() - (a + m) * (b + 0.5 * s.x2).ln()
        })
        .sum()
}

/// Marginal maximum likelihood for `(a, b)`, by BFGS in `(ln a, ln b)` on the
/// per-group average log-likelihood.
pub fn fit_gamma_precision_mml(summaries: &[GroupSummary]) -> Result<GammaFit> {
    fit_gamma_precision_mml_from(summaries, None)
}

/// As [`fit_gamma_precision_mml`], optionally starting from a known `(a, b)`.
pub fn fit_gamma_precision_mml_from(summaries: &[GroupSummary], start: Option<(f64, f64)>) -> Result<GammaFit> {
    let groups = with_variance(summaries);
    if groups.len() < 2 {
        return Err(FabError::InsufficientData(
            "gamma fit needs at least 2 groups with n >= 2".into(),
        ));
    }
    if groups.iter().all(|s| s.x2 == 0.0) {
        return Err(FabError::InsufficientData(
            "all within-group sums of squares are zero".into(),
        ));
    }
    let ms: Vec<f64> = groups.iter().map(|s| 0.5 * (s.n - 1) as f64).collect();
    let hx: Vec<f64> = groups.iter().map(|s| 0.5 * s.x2).collect();
    let k = groups.len() as f64;
    let (a0, b0) = start.unwrap_or_else(|| {
        let mean_s2 = mean(groups.iter().map(|s| s.x2 / (s.n - 1) as f64));
        (2.0, mean_s2)
    });
    let nll = |x: &[f64]| -> (f64, Vec<f64>) {
        let (a, b) = (x[0].exp(), x[1].exp());
        let (lb, dga) = (b.ln(), digamma(a));
        let lga = ln_gamma(a);
        let (mut f, mut ga, mut gb) = (0.0, 0.0, 0.0);
        for (&m, &h) in ms.iter().zip(&hx) {
            let lbh = (b + h).ln();
            f += ln_gamma(a + m) - lga + a * lb - (a + m) * lbh;
            ga += digamma(a + m) - dga + lb - lbh;
            gb += a / b - (a + m) / (b + h);
        }
        (-f / k, vec![-ga * a / k, -gb * b / k])
    };
    let opts = BfgsOptions {
        max_iter: 1000,
        grad_tol: 1e-9,
        f_rel_tol: 0.0,
    };
    let res = bfgs(nll, &[a0.ln(), b0.ln()], &opts);
    let grad_norm = res.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let trace = FitTrace {
        iterations: res.iterations,
        converged: res.converged,
        loglik: res.trace.iter().map(|f| -f * k).collect(),
        grad_norm,
    };
    let (a, b) = (res.x[0].exp(), res.x[1].exp());
    if a.is_finite() && b.is_finite() && a > GAMMA_SHAPE_MAX {
        let a = GAMMA_SHAPE_MAX;
        // profile b at the capped shape so the result does not depend on
        // where the optimizer stopped along the ridge
        let score = |lb: f64| -> Result<f64> {
            let b = lb.exp();
            Ok(ms.iter().zip(&hx).map(|(&m, &h)| a - (a + m) * b / (b + h)).sum::<f64>())
        };
        let hmax = hx.iter().cloned().fold(0.0, f64::max);
        let hmin = hx.iter().cloned().filter(|&h| h > 0.0).fold(hmax, f64::min);
        let (lo, hi) = ((a * hmin).ln() - 30.0, (a * hmax).ln() + 30.0);
        let (flo, fhi) = (score(lo)?, score(hi)?);
        let b = if flo > 0.0 && fhi < 0.0 {
            let opts = RootOptions {
                xtol: 1e-13,
                ftol: 0.0,
                max_iter: 200,
            };
            brent_root(score, lo, hi, flo, fhi, opts)?.x.exp()
        } else {
            b * (a / res.x[0].exp())
        };
        return Ok(GammaFit { a, b, trace });
    }
    if !(a.is_finite() && b.is_finite()) || (!res.converged && grad_norm > 1e-5) {
        return Err(FabError::Optimization {
            what: "gamma marginal likelihood",
            reason: format!("stopped after {} iterations", res.iterations),
            best: vec![a, b],
            value: -res.f * k,
        });
    }
    Ok(GammaFit { a, b, trace })
}

/// Posterior-mean-type variances `σ̂²_j = (b + x²_j/2) / (a + (n_j - 1)/2)`.
pub fn eb_variances(summaries: &[GroupSummary], a: f64, b: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0) {
        return Err(FabError::domain("gamma hyperparameters (a, b)", a.min(b)));
    }
    Ok(summaries
        .iter()
        .map(|s| (b + 0.5 * s.x2) / (a + 0.5 * (s.n - 1) as f64))
        .collect())
}

/// Profile log-likelihood of `τ²` with `μ` at its precision-weighted mean.
fn plugin_profile(ys: &[f64], vs: &[f64], tau2: f64) -> (f64, f64) {
    let (mut sw, mut swy) = (0.0, 0.0);
    for (&y, &v) in ys.iter().zip(vs) {
        let w = 1.0 / (v + tau2);
        sw += w;
        swy += w * y;
    }
    let mu = swy / sw;
    let mut ll = 0.0;
    for (&y, &v) in ys.iter().zip(vs) {
        let t = v + tau2;
        ll -= 0.5 * t.ln() + (y - mu) * (y - mu) / (2.0 * t);
    }
    (ll, mu)
}

/// Plug-in marginal likelihood estimates of `(μ, τ²)` given `σ̂²_j`: each
/// `ȳ_j ~ N(μ, σ̂²_j/n_j + τ²)`. One-dimensional search over `ln τ²` (coarse
/// grid, then Brent around the best grid point).
pub fn fit_plugin_mu_tau(summaries: &[GroupSummary], sigma2: &[f64]) -> Result<PluginFit> {
    if summaries.len() != sigma2.len() {
        return Err(FabError::Config("one variance per group required".into()));
    }
    if summaries.len() < 2 {
        return Err(FabError::InsufficientData("plug-in fit needs at least 2 groups".into()));
    }
    if let Some(&bad) = sigma2.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(FabError::domain("group variance", bad));
    }
    let ys: Vec<f64> = summaries.iter().map(|s| s.ybar).collect();
    let vs: Vec<f64> = summaries.iter().zip(sigma2).map(|(s, v)| v / s.n as f64).collect();
    let scale = mean(vs.iter().copied());
    let floor = TAU2_FLOOR_EST * mean(sigma2.iter().copied());
    let p = ys.len() as f64;
    let ym = mean(ys.iter().copied());
    let spread = ys.iter().map(|y| (y - ym).powi(2)).sum::<f64>() / (p - 1.0);
    let lo = floor.ln();
    let hi = (10.0 * (spread + scale)).ln().max(lo + 1.0);
    let nll = |t: f64| -plugin_profile(&ys, &vs, t.exp().max(floor)).0;

    let n_grid = 60;
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut best = (lo, nll(lo));
    for i in 1..n_grid {
        let t = lo + step * i as f64;
        let f = nll(t);
        if f < best.1 {
            best = (t, f);
        }
    }
    let (a, b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let m = brent_minimize(|t| Ok(nll(t)), a, b, 1e-10, 200)?;
    let t_best = if m.fx < best.1 { m.x } else { best.0 };
    let tau2 = t_best.exp().max(floor);
    let (ll, mu) = plugin_profile(&ys, &vs, tau2);
    if !ll.is_finite() {
        return Err(FabError::Optimization {
            what: "plug-in marginal likelihood",
            reason: "non-finite objective".into(),
            best: vec![mu, tau2],
            value: ll,
        });
    }
    Ok(PluginFit { mu, tau2, loglik: ll })
}

/// Full heteroscedastic fit: gamma marginal likelihood for `(a, b)`, EB
/// variances, then plug-in `(μ, τ²)`.
pub fn fit_heteroscedastic(summaries: &[GroupSummary], singletons: SingletonPolicy) -> Result<HeteroHyperParams> {
    fit_heteroscedastic_from(summaries, singletons, None)
}

/// As [`fit_heteroscedastic`], with an optional `(a, b)` starting point.
pub fn fit_heteroscedastic_from(
    summaries: &[GroupSummary],
    singletons: SingletonPolicy,
    start: Option<(f64, f64)>,
) -> Result<HeteroHyperParams> {
    let g = fit_gamma_precision_mml_from(summaries, start)?;
    let proxy = match singletons {
        SingletonPolicy::PriorMean if g.a > 1.0 => Some(g.b / (g.a - 1.0)),
        _ => None,
    };
    let mut used = Vec::with_capacity(summaries.len());
    let mut vars = Vec::with_capacity(summaries.len());
    let eb = eb_variances(summaries, g.a, g.b)?;
    for (s, v) in summaries.iter().zip(eb) {
        if s.n >= 2 {
            used.push(*s);
            vars.push(v);
        } else if let Some(v1) = proxy {
            used.push(*s);
            vars.push(v1);
        }
    }
    let pf = fit_plugin_mu_tau(&used, &vars)?;
    Ok(HeteroHyperParams {
        mu: pf.mu,
        tau2: pf.tau2,
        a: g.a,
        b: g.b,
    })
}

/// Empirical-Bayes posterior interval
/// `θ̂_j ± t_{1-α/2, n_j-1} (1/τ² + n_j/s²_j)^{-1/2}` with
/// `θ̂_j = (μ/τ² + n_j ȳ_j/s²_j) / (1/τ² + n_j/s²_j)`.
pub fn eb_posterior_interval(summary: &GroupSummary, mu: f64, tau2: f64, alpha: f64) -> Result<Interval<f64>> {
    check_alpha(alpha)?;
    if summary.n < 2 {
        return Err(FabError::InsufficientData("EB interval needs n >= 2".into()));
    }
    let s2 = summary.variance()?;
    if !(s2 > 0.0) {
        return Err(FabError::domain("s2", s2));
    }
    if !(tau2 > 0.0) || tau2.is_nan() {
        return Err(FabError::domain("tau2", tau2));
    }
    if !mu.is_finite() {
        return Err(FabError::domain("mu", mu));
    }
    let n = summary.n as f64;
    let prec = 1.0 / tau2 + n / s2;
    let center = (mu / tau2 + summary.ybar * n / s2) / prec;
    let half = -t_quantile(0.5 * alpha, n - 1.0)? / prec.sqrt();
    Ok(Interval {
        lower: center - half,
        upper: center + half,
        alpha,
        method: Method::EmpiricalBayes,
        diagnostics: Diagnostics::closed_form(),
        fallback: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeveneResult {
    pub f: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Brown–Forsythe form of Levene's test: one-way ANOVA on `|y_ij - median_j|`.
/// Groups with fewer than 2 observations are left out.
pub fn levene_test(data: &GroupedData) -> Result<LeveneResult> {
    let mut devs: Vec<Vec<f64>> = Vec::new();
    for (_, values) in data.iter() {
        if values.len() < 2 {
            continue;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let med = median(&sorted);
        devs.push(values.iter().map(|v| (v - med).abs()).collect());
    }
    let k = devs.len();
    let n_total: usize = devs.iter().map(Vec::len).sum();
    if k < 2 {
        return Err(FabError::InsufficientData(
            "Levene test needs at least 2 groups with n >= 2".into(),
        ));
    }
    let grand = devs.iter().flatten().sum::<f64>() / n_total as f64;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for z in &devs {
        let m = z.iter().sum::<f64>() / z.len() as f64;
        ssb += z.len() as f64 * (m - grand).powi(2);
        ssw += z.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let (df1, df2) = (k - 1, n_total - k);
    if ssw == 0.0 {
        return Err(FabError::InsufficientData(
            "Levene test undefined: no spread within groups".into(),
        ));
    }
    let f = (ssb / df1 as f64) / (ssw / df2 as f64);
    let p_value = f_sf(f, df1 as f64, df2 as f64)?;
    Ok(LeveneResult { f, p_value, df1, df2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fab_t::umau_t_interval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Normal};

    fn synth_homo(p: usize, n: usize, mu: f64, tau2: f64, sigma2: f64, seed: u64) -> Vec<GroupSummary> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let th = Normal::new(mu, tau2.sqrt()).unwrap();
        let e = Normal::new(0.0, sigma2.sqrt()).unwrap();
        (0..p)
            .map(|_| {
                let t = th.sample(&mut rng);
                let v: Vec<f64> = (0..n).map(|_| t + e.sample(&mut rng)).collect();
                GroupSummary::from_values(&v).unwrap()
            })
            .collect()
    }

    #[test]
    fn levene_hand_example() {
        let d = GroupedData::from_groups([("a", vec![1.0, 2.0, 3.0]), ("b", vec![4.0, 6.0, 8.0])]).unwrap();
        let r = levene_test(&d).unwrap();
        assert!((r.f - 0.8).abs() < 1e-14);
        assert_eq!((r.df1, r.df2), (1, 4));
        // F(1,4) survival at 0.8: 1 - I_{1/6}(1/2, 2)... checked against the t relation
        let t = 0.8f64.sqrt();
        let p2 = 2.0 * crate::distributions::t_cdf(-t, 4.0).unwrap();
        assert!((r.p_value - p2).abs() < 1e-12);
    }

    #[test]
    fn levene_ignores_singletons_and_orders() {
        let d1 = GroupedData::from_groups([("a", vec![1.0, 2.0, 3.0]), ("b", vec![4.0, 6.0, 8.0]), ("c", vec![9.0])]).unwrap();
        let d2 = GroupedData::from_groups([("z", vec![4.0, 8.0, 6.0]), ("y", vec![3.0, 1.0, 2.0])]).unwrap();
        assert_eq!(levene_test(&d1).unwrap(), levene_test(&d2).unwrap());
    }

    #[test]
    fn moments_basic_cases() {
        let s = vec![
            GroupSummary::from_stats(5, 1.0, 2.0).unwrap(),
            GroupSummary::from_stats(5, 1.0, 2.0).unwrap(),
            GroupSummary::from_stats(5, 1.0, 2.0).unwrap(),
        ];
        let m = fit_moments(&s).unwrap();
        assert_eq!(m.mu, 1.0);
        assert_eq!(m.sigma2, 2.0);
        assert_eq!(m.tau2, TAU2_FLOOR_EST * 2.0);
        let big = synth_homo(5000, 10, 1.0, 0.5, 2.0, 7);
        let m = fit_moments(&big).unwrap();
        assert!((m.mu - 1.0).abs() < 0.05 && (m.tau2 / 0.5 - 1.0).abs() < 0.05 && (m.sigma2 / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn mle_recovers_truth_and_ascends() {
        let s = synth_homo(2000, 10, -0.5, 0.3, 1.5, 11);
        let (e, tr) = fit_homoscedastic_mle(&s).unwrap();
        // asymptotic SEs: σ² ≈ σ²√(2/(p(n-1))), τ² ≈ √(2/p)(τ²+σ²/n), μ ≈ √((τ²+σ²/n)/p)
        let v = 0.3 + 0.15;
        assert!((e.sigma2 - 1.5).abs() < 3.0 * 1.5 * (2.0 / 18000.0f64).sqrt());
        assert!((e.tau2 - 0.3).abs() < 3.0 * (2.0 / 2000.0f64).sqrt() * v);
        assert!((e.mu + 0.5).abs() < 3.0 * (v / 2000.0).sqrt());
        assert!(tr.converged);
        assert!(tr.loglik.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mle_matches_closed_form_for_balanced_data() {
        // balanced design: σ̂² = pooled within, τ̂² = (p-1)/p · MSB/n-type formula
        let s = synth_homo(40, 6, 2.0, 0.8, 1.0, 5);
        let (e, _) = fit_homoscedastic_mle(&s).unwrap();
        let p = s.len() as f64;
        let n = 6.0;
        let within: f64 = s.iter().map(|g| g.x2).sum::<f64>() / (p * (n - 1.0));
        let ym = s.iter().map(|g| g.ybar).sum::<f64>() / p;
        let sb = s.iter().map(|g| (g.ybar - ym).powi(2)).sum::<f64>() / p;
        let tau2 = sb - within / n;
        assert!(tau2 > 0.0);
        assert!((e.sigma2 - within).abs() < 1e-6 * within);
        assert!((e.tau2 - tau2).abs() < 1e-6 * tau2);
        assert!((e.mu - ym).abs() < 1e-9);
    }

    #[test]
    fn mle_degenerate_and_floor() {
        let s = vec![GroupSummary::from_values(&[3.0, 3.0]).unwrap(), GroupSummary::from_values(&[3.0, 3.0, 3.0]).unwrap()];
        let (e, _) = fit_homoscedastic_mle(&s).unwrap();
        assert_eq!(e.mu, 3.0);
        assert!(e.tau2 <= TAU2_FLOOR_EST * e.sigma2 * 1.0001);
        // under-dispersed means push τ² to its floor
        let s = vec![
            GroupSummary::from_stats(4, 0.0, 5.0).unwrap(),
            GroupSummary::from_stats(4, 0.01, 4.0).unwrap(),
            GroupSummary::from_stats(4, -0.01, 6.0).unwrap(),
        ];
        let (e, _) = fit_homoscedastic_mle(&s).unwrap();
        assert!(e.tau2 < 1e-6 * e.sigma2);
        assert!(fit_homoscedastic_mle(&[GroupSummary::single(1.0).unwrap(), GroupSummary::single(2.0).unwrap()]).is_err());
    }

    #[test]
    fn gamma_mml_recovers_and_is_local_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gam = Gamma::new(2.0, 1.0 / 5.0).unwrap();
        let s: Vec<GroupSummary> = (0..5000)
            .map(|_| {
                let sigma2: f64 = 1.0 / gam.sample(&mut rng);
                let e = Normal::new(0.0, f64::sqrt(sigma2)).unwrap();
                let v: Vec<f64> = (0..10).map(|_| e.sample(&mut rng)).collect();
                GroupSummary::from_values(&v).unwrap()
            })
            .collect();
        let g = fit_gamma_precision_mml(&s).unwrap();
        assert!((g.a / 2.0 - 1.0).abs() < 0.05, "a={}", g.a);
        assert!((g.b / 5.0 - 1.0).abs() < 0.05, "b={}", g.b);
        assert!(g.trace.grad_norm <= 1e-6);
        let base = gamma_marginal_loglik(&s, g.a, g.b);
        for (da, db) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
            assert!(gamma_marginal_loglik(&s, g.a * da, g.b * db) < base);
        }
        // gradient of the objective matches finite differences at a generic point
        let (a, b) = (1.7, 3.1);
        let h = 1e-6;
        let fd_a = (gamma_marginal_loglik(&s, a + h, b) - gamma_marginal_loglik(&s, a - h, b)) / (2.0 * h);
        let an: f64 = s
            .iter()
            .map(|g| {
                let m = 0.5 * (g.n - 1) as f64;
                digamma(a + m) - digamma(a) + b.ln() - (b + 0.5 * g.x2).ln()
            })
            .sum();
        assert!((fd_a - an).abs() < 1e-4 * an.abs().max(1.0));
    }

    #[test]
    fn gamma_mml_concentrates_for_shared_variance() {
        let s = synth_homo(3000, 8, 0.0, 1.0, 2.0, 9);
        let g = fit_gamma_precision_mml(&s).unwrap();
        assert!(g.a > 100.0, "a={}", g.a);
        assert!((g.b / g.a / 2.0 - 1.0).abs() < 0.05);
        let zeros = vec![GroupSummary::from_stats(3, 0.0, 0.0).unwrap(), GroupSummary::from_stats(3, 1.0, 0.0).unwrap()];
        assert!(fit_gamma_precision_mml(&zeros).is_err());
    }

    #[test]
    fn eb_variance_formula() {
        let s = GroupSummary::from_stats(10, 0.0, 1.0).unwrap();
        let v = eb_variances(&[s], 1.0, 10.0).unwrap();
        assert!((v[0] - (10.0 + 4.5) / (1.0 + 4.5)).abs() < 1e-15);
        let z = GroupSummary::from_stats(10, 0.0, 0.0).unwrap();
        assert_eq!(eb_variances(&[z], 1.0, 10.0).unwrap()[0], 10.0 / 5.5);
    }

    #[test]
    fn plugin_fit_cases() {
        let s = synth_homo(2000, 10, 1.0, 0.5, 2.0, 21);
        let v = vec![2.0; s.len()];
        let f = fit_plugin_mu_tau(&s, &v).unwrap();
        let mean_y = s.iter().map(|g| g.ybar).sum::<f64>() / s.len() as f64;
        assert!((f.mu - mean_y).abs() < 1e-12);
        let var = 0.5 + 0.2;
        assert!((f.tau2 - 0.5).abs() < 3.0 * (2.0 / 2000.0f64).sqrt() * var);
        // profile optimum: nearby τ² values are no better
        for t in [f.tau2 * 0.99, f.tau2 * 1.01] {
            let (ll, _) = plugin_profile(&s.iter().map(|g| g.ybar).collect::<Vec<_>>(), &vec![0.2; s.len()], t);
            assert!(ll <= f.loglik + 1e-9);
        }
        let tight = vec![
            GroupSummary::from_stats(4, 0.0, 5.0).unwrap(),
            GroupSummary::from_stats(4, 0.01, 5.0).unwrap(),
            GroupSummary::from_stats(4, -0.01, 5.0).unwrap(),
        ];
        let f = fit_plugin_mu_tau(&tight, &[5.0, 5.0, 5.0]).unwrap();
        assert!(f.tau2 <= 1e-8);
    }

    #[test]
    fn eb_interval_properties() {
        let s = GroupSummary::from_stats(8, 2.0, 3.0).unwrap();
        let u = umau_t_interval(2.0, 3.0, 8, 7.0, 0.05).unwrap();
        for tau2 in [1e-4, 0.1, 1.0, 10.0] {
            let e = eb_posterior_interval(&s, 0.5, tau2, 0.05).unwrap();
            assert!(e.width() < u.width());
            let ratio = (tau2 / (tau2 + 3.0 / 8.0)).sqrt();
            assert!((e.width() / u.width() - ratio).abs() < 1e-12);
        }
        let wide = eb_posterior_interval(&s, 0.5, 1e12, 0.05).unwrap();
        assert!((wide.midpoint() - 2.0).abs() < 1e-9 && (wide.width() - u.width()).abs() < 1e-9);
        let narrow = eb_posterior_interval(&s, 0.5, 1e-12, 0.05).unwrap();
        assert!((narrow.midpoint() - 0.5).abs() < 1e-9 && narrow.width() < 1e-5);
    }

    #[test]
    fn location_scale_equivariance() {
        let d = GroupedData::from_groups([
            ("a", vec![1.0, 2.5, 0.3, 1.1]),
            ("b", vec![4.0, 3.2, 5.1]),
            ("c", vec![2.2, 2.9, 1.7, 2.0, 3.3]),
            ("d", vec![0.1, -0.4, 0.9]),
        ])
        .unwrap();
        let (e, _) = fit_homoscedastic_mle(&d.summaries()).unwrap();
        let shifted = d.map_values(|v| 3.0 * v + 7.0).unwrap();
        let (e2, _) = fit_homoscedastic_mle(&shifted.summaries()).unwrap();
        assert!((e2.mu - (3.0 * e.mu + 7.0)).abs() < 1e-7);
        assert!((e2.sigma2 / (9.0 * e.sigma2) - 1.0).abs() < 1e-6);
        assert!((e2.tau2 / (9.0 * e.tau2) - 1.0).abs() < 1e-5);
        let h1 = fit_heteroscedastic(&d.summaries(), SingletonPolicy::PriorMean).unwrap();
        let h2 = fit_heteroscedastic(&shifted.summaries(), SingletonPolicy::PriorMean).unwrap();
        assert!((h2.mu - (3.0 * h1.mu + 7.0)).abs() < 1e-5);
        // these groups show no heteroscedasticity, so a runs off to a plateau; b/a is identified
        assert!(((h2.b / h2.a) / (9.0 * h1.b / h1.a) - 1.0).abs() < 1e-4);
        assert!((h2.tau2 / (9.0 * h1.tau2) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn relabeling_invariance() {
        let d1 = GroupedData::from_groups([("a", vec![1.0, 2.5, 0.3]), ("b", vec![4.0, 3.2]), ("c", vec![2.2, 2.9, 1.7])]).unwrap();
        let d2 = GroupedData::from_groups([("z", vec![2.2, 2.9, 1.7]), ("x", vec![1.0, 2.5, 0.3]), ("y", vec![4.0, 3.2])]).unwrap();
        let a = fit_moments(&d1.summaries()).unwrap();
        let b = fit_moments(&d2.summaries()).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-14 && (a.tau2 - b.tau2).abs() < 1e-14);
    }
}
