//! FAB t-intervals for a normal mean with unknown variance.
//!
//! For data `ȳ, s²` from `n` observations and a continuous nondecreasing
//! w-function, the region
//! `{θ : ȳ + (s/√n) t_{α(1-w(θ))} < θ < ȳ + (s/√n) t_{1-αw(θ)}}`
//! has exact `1 - α` coverage. The Bayes-optimal w under
//! `θ ~ N(μ, τ²)`, `1/σ² ~ gamma(a, b)` minimizes, for each θ, the prior
//! predictive probability that the data fall in the acceptance region of θ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    chi_square_quantile_pair, inv_gamma_sigma2_quantile_pair, noncentral_t_cdf_with,
    std_normal_cdf, t_quantile, t_quantile_ext, DistAccuracy,
};
use crate::error::{FabError, Result};
use crate::interval::{check_alpha, invert_on_grid, Diagnostics, Interval, Method, Pivot, ThetaGrid};
use crate::isotonic::isotonic_nondecreasing;
use crate::quadrature::{gauss_legendre_unit, tanh_sinh_unit, UnitNode};
use crate::roots::{brent_minimize, brent_root, RootOptions};
use crate::special::ln_beta;
use crate::scalar::{c, Real};
use crate::wfn::{WFunction, Weight};

/// Lower end of the search range for the optimal w (the upper end is `1 - W_MIN`).
pub const W_MIN: f64 = 1e-6;

/// `θ ~ N(μ, τ²)` independent of `1/σ² ~ gamma(a, b)`, for a group of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalInvGammaPrior<T> {
    pub mu: T,
    pub tau2: T,
    pub a: T,
    pub b: T,
    pub n: usize,
}

impl<T: Real> NormalInvGammaPrior<T> {
    pub fn new(mu: T, tau2: T, a: T, b: T, n: usize) -> Result<Self> {
        let p = Self { mu, tau2, a, b, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(FabError::domain("mu", self.mu.as_f64()));
        }
        if !(self.tau2 > T::zero()) || self.tau2.is_nan() {
            return Err(FabError::domain("tau2", self.tau2.as_f64()));
        }
        if !(self.a > T::zero()) || !self.a.is_finite() {
            return Err(FabError::domain("gamma shape a", self.a.as_f64()));
        }
        if !(self.b > T::zero()) || !self.b.is_finite() {
            return Err(FabError::domain("gamma rate b", self.b.as_f64()));
        }
        if self.n < 2 {
            return Err(FabError::domain("group size n (need n >= 2)", self.n as f64));
        }
        Ok(())
    }

    /// Degrees of freedom of the within-group variance, `n - 1`.
    pub fn nu(&self) -> T {
        T::from_usize_lossy(self.n - 1)
    }

    /// Scale proxy for σ²: the prior mean `b/(a-1)` when it exists, else `b`.
    pub fn sigma2_scale(&self) -> T {
        if self.a > T::one() {
            self.b / (self.a - T::one())
        } else {
            self.b
        }
    }

    /// Half-width of the θ range a w-table should span around μ.
    pub fn table_half_range(&self) -> T {
        c::<T>(8.0) * (self.tau2 + self.sigma2_scale() / T::from_usize_lossy(self.n)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadRule {
    /// Double-exponential rule on the quantile scale (default).
    TanhSinh,
    GaussLegendre,
}

/// Discretization of the σ² integral: `n_nodes` points on `(0, 1)` pushed
/// through the inverse-gamma quantile function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub n_nodes: usize,
    pub rule: QuadRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_nodes: 41,
            rule: QuadRule::TanhSinh,
        }
    }
}

impl QuadratureConfig {
    pub fn with_nodes(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 5 {
            return Err(FabError::Config(format!(
                "quadrature needs at least 5 nodes, got {}",
                self.n_nodes
            )));
        }
        Ok(())
    }

    fn unit_nodes<T: Real>(&self) -> Vec<UnitNode<T>> {
        match self.rule {
            QuadRule::TanhSinh => tanh_sinh_unit(self.n_nodes),
            QuadRule::GaussLegendre => gauss_legendre_unit(self.n_nodes),
        }
    }
}

/// Quadrature over the chi-square law of `ν s²/σ²`, stored as `√(V/ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiNodes<T> {
    pub nu: T,
    root_v_over_nu: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> ChiNodes<T> {
    pub fn new(nu: T, n_nodes: usize) -> Result<Self> {
        if n_nodes < 5 {
            return Err(FabError::Config("chi quadrature needs at least 5 nodes".into()));
        }
        let mut root_v_over_nu = Vec::with_capacity(n_nodes);
        let mut weights = Vec::with_capacity(n_nodes);
        for node in tanh_sinh_unit::<T>(n_nodes) {
            let v = chi_square_quantile_pair(node.u, node.u_c, nu)?;
            if v.is_finite() && v > T::zero() {
                root_v_over_nu.push((v / nu).sqrt());
                weights.push(node.weight);
            }
        }
        let total: T = weights.iter().fold(T::zero(), |s, &w| s + w);
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            nu,
            root_v_over_nu,
            weights,
        })
    }
}

/// How the conditional acceptance probability given σ² is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum AcceptanceKernel<T> {
    /// Noncentral t CDF (series), the reference method.
    NoncentralT(DistAccuracy),
    /// `E_V Φ(c t √(V/ν) - λ)` by quadrature over `V ~ χ²_ν`; much cheaper,
    /// used inside Monte Carlo studies.
    NormalMixture(ChiNodes<T>),
}

/// Split points where the first-order condition is always evaluated; their
/// t quantiles are cached.
const CHECKPOINTS: [f64; 5] = [W_MIN, 0.1, 0.5, 0.9, 1.0 - W_MIN];

#[derive(Debug, Clone)]
struct Checkpoint<T> {
    w: Weight<T>,
    t_lo: T,
    t_hi: T,
}

/// Precomputed pieces of the prior predictive density of the t pivot under
/// the normal-mixture kernel.
#[derive(Debug, Clone)]
struct MixtureCache<T> {
    /// `c_k √(V_j/ν)`, σ²-node major
    scale: Vec<T>,
    /// log of (σ² weight × chi weight × scale)
    ln_w: Vec<T>,
    n_chi: usize,
    ln_t_norm: T,
    checkpoints: Vec<Checkpoint<T>>,
}

/// Evaluator for the prior predictive acceptance probability and its
/// minimizer over w, with the σ² nodes precomputed for one prior.
#[derive(Debug, Clone)]
pub struct BayesW<T> {
    prior: NormalInvGammaPrior<T>,
    alpha: T,
    nu: T,
    /// σ²/n at each node and the matching quadrature weight
    s_eff: Vec<T>,
    weights: Vec<T>,
    /// `1/√(σ²/n + τ²)` at each node
    inv_sd: Vec<T>,
    kernel: AcceptanceKernel<T>,
    mix: Option<MixtureCache<T>>,
    w_tol: T,
}

impl<T: Real> BayesW<T> {
    /// Reference evaluator (noncentral t kernel).
    pub fn new(prior: NormalInvGammaPrior<T>, alpha: T, quad: &QuadratureConfig) -> Result<Self> {
        Self::with_kernel(prior, alpha, quad, AcceptanceKernel::NoncentralT(DistAccuracy::default()))
    }

    pub fn with_kernel(
        prior: NormalInvGammaPrior<T>,
        alpha: T,
        quad: &QuadratureConfig,
        kernel: AcceptanceKernel<T>,
    ) -> Result<Self> {
        prior.validate()?;
        check_alpha(alpha)?;
        quad.validate()?;
        let nu = prior.nu();
        if let AcceptanceKernel::NormalMixture(ch) = &kernel {
            if ch.nu != nu {
                return Err(FabError::Config(format!(
                    "chi nodes built for {} df, prior needs {}",
                    ch.nu, nu
                )));
            }
        }
        let n = T::from_usize_lossy(prior.n);
        let mut s_eff = Vec::with_capacity(quad.n_nodes);
        let mut weights = Vec::with_capacity(quad.n_nodes);
        for node in quad.unit_nodes::<T>() {
            let sigma2 = inv_gamma_sigma2_quantile_pair(node.u, node.u_c, prior.a, prior.b)?;
            if sigma2.is_finite() && sigma2 > T::zero() && node.weight > T::zero() {
                s_eff.push(sigma2 / n);
                weights.push(node.weight);
            }
        }
        let total: T = weights.iter().fold(T::zero(), |s, &w| s + w);
        for w in &mut weights {
            *w /= total;
        }
        let inv_sd: Vec<T> = s_eff.iter().map(|&s| (s + prior.tau2).sqrt().recip()).collect();
        let mix = match &kernel {
            AcceptanceKernel::NormalMixture(ch) => {
                let n_chi = ch.root_v_over_nu.len();
                let mut scale = Vec::with_capacity(s_eff.len() * n_chi);
                let mut ln_w = Vec::with_capacity(s_eff.len() * n_chi);
                for ((&s, &wk), &isd) in s_eff.iter().zip(&weights).zip(&inv_sd) {
                    let ck = s.sqrt() * isd;
                    for (&r, &u) in ch.root_v_over_nu.iter().zip(&ch.weights) {
                        scale.push(ck * r);
                        ln_w.push((wk * u * ck * r).ln());
                    }
                }
                let half = c::<T>(0.5);
                let ln_t_norm = -half * nu.ln() - ln_beta(nu * half, half);
                let checkpoints = CHECKPOINTS
                    .iter()
                    .map(|&w| {
                        let w = if w > 0.5 {
                            Weight::from_complement(c(1.0 - w))
                        } else {
                            Weight::new(c(w))
                        };
                        Ok(Checkpoint {
                            w,
                            t_lo: t_quantile_ext(alpha * w.w, nu)?,
                            t_hi: -t_quantile_ext(alpha * w.w_c, nu)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(MixtureCache {
                    scale,
                    ln_w,
                    n_chi,
                    ln_t_norm,
                    checkpoints,
                })
            }
            AcceptanceKernel::NoncentralT(_) => None,
        };
        Ok(Self {
            prior,
            alpha,
            nu,
            s_eff,
            weights,
            inv_sd,
            kernel,
            mix,
            w_tol: c(1e-6),
        })
    }

    /// Tolerance on w for the minimization (default `1e-6`).
    pub fn with_w_tol(mut self, tol: T) -> Self {
        self.w_tol = tol;
        self
    }

    pub fn prior(&self) -> &NormalInvGammaPrior<T> {
        &self.prior
    }

    /// Prior predictive probability that `(Ȳ - θ)/(S/√n)` lands in
    /// `(t_{αw}, t_{1-α(1-w)})`, the acceptance region of θ.
    pub fn accept_prob(&self, w: Weight<T>, theta: T) -> Result<T> {
        let t_lo = t_quantile_ext(self.alpha * w.w, self.nu)?;
        let t_hi = -t_quantile_ext(self.alpha * w.w_c, self.nu)?;
        let d = self.prior.mu - theta;
        let mut total = T::zero();
        for (&s, &wt) in self.s_eff.iter().zip(&self.weights) {
            let v = s + self.prior.tau2;
            let cc = (s / v).sqrt();
            let lambda = d / v.sqrt();
            let p = match &self.kernel {
                AcceptanceKernel::NoncentralT(acc) => {
                    let hi = if t_hi.is_infinite() {
                        T::one()
                    } else {
                        noncentral_t_cdf_with(cc * t_hi, self.nu, lambda, acc)?
                    };
                    let lo = if t_lo.is_infinite() {
                        T::zero()
                    } else {
                        noncentral_t_cdf_with(cc * t_lo, self.nu, lambda, acc)?
                    };
                    hi - lo
                }
                AcceptanceKernel::NormalMixture(ch) => {
                    let mut acc = T::zero();
                    for (&r, &u) in ch.root_v_over_nu.iter().zip(&ch.weights) {
                        let a_hi = cc * t_hi * r - lambda;
                        let a_lo = cc * t_lo * r - lambda;
                        // difference of upper tails keeps precision when both are near 1
                        acc += u * (std_normal_cdf(-a_lo) - std_normal_cdf(-a_hi));
                    }
                    acc
                }
            };
            total += wt * p;
        }
        Ok(total.max(T::zero()).min(T::one()))
    }

    /// The minimizing w at θ, searched over `[W_MIN, 1 - W_MIN]`.
    ///
    /// Brent's method over the whole range, then the result is compared with
    /// the endpoints and the starts 0.1, 0.5, 0.9; a better start triggers a
    /// local re-search around it. The returned value is never worse than any
    /// of those points.
    pub fn optimize(&self, theta: T) -> Result<(Weight<T>, T)> {
        let lo = c::<T>(W_MIN);
        let hi = T::one() - lo;
        let f = |w: T| self.accept_prob(Weight::new(w), theta);
        let m = brent_minimize(f, lo, hi, self.w_tol, 200)?;
        let mut best = (m.x, m.fx);
        let starts = [lo, c(0.1), c(0.5), c(0.9), hi];
        let mut values = [T::zero(); 5];
        for (v, &s) in values.iter_mut().zip(&starts) {
            *v = f(s)?;
        }
        let slack = c::<T>(1e-12);
        for (&s, &v) in starts.iter().zip(&values) {
            if v < best.1 - slack {
                let width = c::<T>(0.2);
                let r = brent_minimize(f, (s - width).max(lo), (s + width).min(hi), self.w_tol, 200)?;
                let cand = if r.fx < v { (r.x, r.fx) } else { (s, v) };
                if cand.1 < best.1 {
                    best = cand;
                }
            }
        }
        if !best.1.is_finite() {
            return Err(FabError::Optimization {
                what: "Bayes w",
                reason: "objective not finite".into(),
                best: vec![best.0.as_f64()],
                value: best.1.as_f64(),
            });
        }
        Ok((Weight::new(best.0), best.1))
    }

    /// `ln g(t) - ln f_ν(t)`: log ratio of the prior predictive density of
    /// the pivot to its sampling density.
    fn ln_density_ratio(&self, m: &MixtureCache<T>, t: T, lambdas: &[T]) -> T {
        let half = c::<T>(0.5);
        let mut mx = T::neg_infinity();
        let mut sum = T::zero();
        for (k, &lam) in lambdas.iter().enumerate() {
            let base = k * m.n_chi;
            for i in base..base + m.n_chi {
                let z = m.scale[i] * t - lam;
                let e = m.ln_w[i] - half * z * z;
                if e > mx {
                    sum = sum * (mx - e).exp() + T::one();
                    mx = e;
                } else {
                    sum += (e - mx).exp();
                }
            }
        }
        let ln_g = mx + sum.ln();
        let ln_f = m.ln_t_norm - (self.nu + T::one()) * half * (t * t / self.nu).ln_1p();
        ln_g - ln_f
    }

    /// Minimizer over w from the first-order condition: the derivative of the
    /// acceptance probability is `α (g/f)(t_hi) - α (g/f)(t_lo)`, so interior
    /// minima are where it changes sign from negative to positive. Needs the
    /// mixture kernel.
    fn solve_first_order(&self, theta: T) -> Result<Weight<T>> {
        let m = match &self.mix {
            Some(m) => m,
            None => return Ok(self.optimize(theta)?.0),
        };
        let d = self.prior.mu - theta;
        let lambdas: Vec<T> = self.inv_sd.iter().map(|&v| d * v).collect();
        let foc_at = |t_lo: T, t_hi: T| {
            self.ln_density_ratio(m, t_hi, &lambdas) - self.ln_density_ratio(m, t_lo, &lambdas)
        };
        let foc = |w: T| -> Result<T> {
            let t_lo = t_quantile_ext(self.alpha * w, self.nu)?;
            let t_hi = -t_quantile_ext(self.alpha * (T::one() - w), self.nu)?;
            Ok(foc_at(t_lo, t_hi))
        };
        let ds: Vec<T> = m.checkpoints.iter().map(|p| foc_at(p.t_lo, p.t_hi)).collect();
        let last = ds.len() - 1;
        let mut candidates: Vec<Weight<T>> = Vec::new();
        if ds[0] >= T::zero() {
            candidates.push(m.checkpoints[0].w);
        }
        let opts = RootOptions {
            xtol: self.w_tol * c(0.1),
            ftol: T::zero(),
            max_iter: 100,
        };
        for i in 0..last {
            let (fa, fb) = (ds[i], ds[i + 1]);
            if fa < T::zero() && fb > T::zero() {
                let r = brent_root(foc, m.checkpoints[i].w.w, m.checkpoints[i + 1].w.w, fa, fb, opts)?;
                candidates.push(Weight::new(r.x));
            } else if fb == T::zero() && i + 1 < last {
                candidates.push(m.checkpoints[i + 1].w);
            }
        }
        if ds[last] <= T::zero() {
            candidates.push(m.checkpoints[last].w);
        }
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        let mut best = (Weight::half(), T::infinity());
        for w in candidates {
            let v = self.accept_prob(w, theta)?;
            if v < best.1 {
                best = (w, v);
            }
        }
        Ok(best.0)
    }
}

impl<T: Real> WFunction<T> for BayesW<T> {
    /// Brent search for the noncentral-t kernel; first-order root for the
    /// mixture kernel.
    fn weight(&self, theta: T) -> Result<Weight<T>> {
        if self.mix.is_some() {
            self.solve_first_order(theta)
        } else {
            Ok(self.optimize(theta)?.0)
        }
    }

    fn center(&self) -> Option<T> {
        Some(self.prior.mu)
    }
}

/// Prior predictive acceptance probability of θ's acceptance region under split `w`.
pub fn marginal_accept_prob<T: Real>(
    w: T,
    theta: T,
    prior: &NormalInvGammaPrior<T>,
    alpha: T,
    quad: &QuadratureConfig,
) -> Result<T> {
    if !(w > T::zero() && w < T::one()) {
        return Err(FabError::domain("w", w.as_f64()));
    }
    BayesW::new(*prior, alpha, quad)?.accept_prob(Weight::new(w), theta)
}

/// The Bayes-optimal w at θ.
pub fn w_bayes_t<T: Real>(
    theta: T,
    prior: &NormalInvGammaPrior<T>,
    alpha: T,
    quad: &QuadratureConfig,
) -> Result<T> {
    Ok(BayesW::new(*prior, alpha, quad)?.optimize(theta)?.0.w)
}

/// A w-function tabulated on sorted knots, linearly interpolated and held
/// constant beyond the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WFunctionTable<T> {
    theta_knots: Vec<T>,
    w_values: Vec<T>,
}

impl<T: Real> WFunctionTable<T> {
    /// Builds a table, projecting the values onto nondecreasing sequences.
    pub fn from_values(theta_knots: Vec<T>, w_values: Vec<T>) -> Result<Self> {
        if theta_knots.len() != w_values.len() || theta_knots.len() < 2 {
            return Err(FabError::Config("w table needs matching knots and values (>= 2)".into()));
        }
        if theta_knots.windows(2).any(|k| !(k[0] < k[1])) {
            return Err(FabError::Config("w table knots must be strictly increasing".into()));
        }
        if w_values.iter().any(|w| !(*w >= T::zero() && *w <= T::one())) {
            return Err(FabError::Config("w table values must lie in [0, 1]".into()));
        }
        let w_values = isotonic_nondecreasing(&w_values);
        Ok(Self {
            theta_knots,
            w_values,
        })
    }

    pub fn knots(&self) -> &[T] {
        &self.theta_knots
    }

    pub fn values(&self) -> &[T] {
        &self.w_values
    }

    pub fn interpolate(&self, theta: T) -> T {
        let k = &self.theta_knots;
        let v = &self.w_values;
        if theta <= k[0] {
            return v[0];
        }
        if theta >= k[k.len() - 1] {
            return v[v.len() - 1];
        }
        let i = k.partition_point(|&x| x <= theta) - 1;
        let t = (theta - k[i]) / (k[i + 1] - k[i]);
        v[i] + t * (v[i + 1] - v[i])
    }
}

impl<T: Real> WFunction<T> for WFunctionTable<T> {
    fn weight(&self, theta: T) -> Result<Weight<T>> {
        if theta.is_nan() {
            return Err(FabError::domain("theta", f64::NAN));
        }
        Ok(Weight::new(self.interpolate(theta)))
    }

    fn center(&self) -> Option<T> {
        let half = c::<T>(0.5);
        let k = &self.theta_knots;
        let v = &self.w_values;
        let i = v.partition_point(|&w| w < half);
        if i == 0 || i == v.len() {
            return None;
        }
        let t = (half - v[i - 1]) / (v[i] - v[i - 1]);
        Some(k[i - 1] + t * (k[i] - k[i - 1]))
    }
}

/// Tabulates the Bayes-optimal w on a θ grid (knots solved in parallel).
pub fn build_w_table<T: Real>(
    prior: &NormalInvGammaPrior<T>,
    alpha: T,
    quad: &QuadratureConfig,
    grid: &ThetaGrid<T>,
) -> Result<WFunctionTable<T>> {
    let bw = BayesW::new(*prior, alpha, quad)?;
    build_w_table_with(&bw, grid)
}

/// As [`build_w_table`] with a preconfigured evaluator.
pub fn build_w_table_with<T: Real>(bw: &BayesW<T>, grid: &ThetaGrid<T>) -> Result<WFunctionTable<T>> {
    let knots = grid.points();
    let values = knots
        .par_iter()
        .map(|&th| bw.weight(th).map(|w| w.w))
        .collect::<Result<Vec<T>>>()?;
    WFunctionTable::from_values(knots, values)
}

fn check_summary<T: Real>(ybar: T, s2: T, n: usize, nu: T) -> Result<T> {
    if !ybar.is_finite() {
        return Err(FabError::domain("ybar", ybar.as_f64()));
    }
    if !(s2 > T::zero()) || !s2.is_finite() {
        return Err(FabError::domain("s2", s2.as_f64()));
    }
    if n == 0 {
        return Err(FabError::domain("n", 0.0));
    }
    if !(nu > T::zero()) {
        return Err(FabError::domain("degrees of freedom", nu.as_f64()));
    }
    Ok((s2 / T::from_usize_lossy(n)).sqrt())
}

/// Equal-tailed t-interval `ȳ ± t_{1-α/2, ν} s/√n`.
pub fn umau_t_interval<T: Real>(ybar: T, s2: T, n: usize, nu: T, alpha: T) -> Result<Interval<T>> {
    check_alpha(alpha)?;
    let se = check_summary(ybar, s2, n, nu)?;
    let half = -t_quantile(alpha * c(0.5), nu)? * se;
    Ok(Interval {
        lower: ybar - half,
        upper: ybar + half,
        alpha,
        method: Method::UmauT,
        diagnostics: Diagnostics::closed_form(),
        fallback: None,
    })
}

/// FAB t-interval for any continuous nondecreasing w-function.
///
/// `nu` is the degrees of freedom behind `s2` (`n - 1` for a single group,
/// more when variances are pooled).
pub fn fab_t_interval<T: Real, W: WFunction<T> + ?Sized>(
    ybar: T,
    s2: T,
    n: usize,
    w_fn: &W,
    nu: T,
    alpha: T,
) -> Result<Interval<T>> {
    check_alpha(alpha)?;
    let se = check_summary(ybar, s2, n, nu)?;
    Pivot {
        center: ybar,
        scale: se,
        alpha,
        wfn: w_fn,
        quantile: |p: T| t_quantile_ext(p, nu),
    }
    .solve(Method::FabT)
}

/// True when θ is inside the FAB t-region (one w evaluation, no root finding).
pub fn fab_t_covers<T: Real, W: WFunction<T> + ?Sized>(
    ybar: T,
    s2: T,
    n: usize,
    w_fn: &W,
    nu: T,
    alpha: T,
    theta: T,
) -> Result<bool> {
    check_alpha(alpha)?;
    let se = check_summary(ybar, s2, n, nu)?;
    Pivot {
        center: ybar,
        scale: se,
        alpha,
        wfn: w_fn,
        quantile: |p: T| t_quantile_ext(p, nu),
    }
    .covers(theta)
}

/// Grid points θ whose t acceptance region contains `(ȳ, s²)`.
pub fn invert_region_oracle_t<T: Real, W: WFunction<T> + ?Sized>(
    ybar: T,
    s2: T,
    n: usize,
    w_fn: &W,
    nu: T,
    alpha: T,
    theta_grid: &ThetaGrid<T>,
) -> Result<Vec<T>> {
    check_alpha(alpha)?;
    let se = check_summary(ybar, s2, n, nu)?;
    let pivot = Pivot {
        center: ybar,
        scale: se,
        alpha,
        wfn: w_fn,
        quantile: |p: T| t_quantile_ext(p, nu),
    };
    invert_on_grid(&pivot, theta_grid)
}

/// Width bound for w_ψ-type w-functions: `|ȳ - μ| + (s/√n)(|t_{α/2}| + |t_{1-α/2}|)`.
pub fn plugin_width_bound<T: Real>(ybar: T, s2: T, n: usize, mu: T, nu: T, alpha: T) -> Result<T> {
    let se = check_summary(ybar, s2, n, nu)?;
    let t = t_quantile(alpha * c(0.5), nu)?.abs();
    Ok((ybar - mu).abs() + se * (t + t))
}
