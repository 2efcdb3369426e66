//! FAB z-intervals for a normal mean with known sampling variance.
//!
//! Under the model `y ~ N(θ, σ²)` with heterogeneity `θ ~ N(μ, τ²)`, the
//! Bayes-optimal tail split has the closed form
//! `w(θ) = g⁻¹(2σ(θ - μ)/τ²)` with `g(w) = Φ⁻¹(αw) - Φ⁻¹(α(1-w))`.

use serde::{Deserialize, Serialize};

use crate::distributions::{normal_quantile_ext, std_normal_cdf, std_normal_quantile};
use crate::error::{FabError, Result};
use crate::interval::{check_alpha, invert_on_grid, Diagnostics, Interval, Method, Pivot, ThetaGrid};
use crate::quadrature::gauss_legendre;
use crate::roots::{brent_root, RootOptions};
use crate::scalar::{c, Real};
use crate::wfn::{WFunction, Weight};

/// τ² at or below this multiple of the sampling variance is treated as zero.
pub const TAU2_FLOOR_REL: f64 = 1e-12;

/// Heterogeneity parameters ψ = (μ, τ², σ²_eff).
///
/// `sigma2_eff` is the sampling variance of the point estimate: σ² for a
/// single observation, σ²/n for a group mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoHierParams<T> {
    pub mu: T,
    pub tau2: T,
    pub sigma2_eff: T,
}

impl<T: Real> HomoHierParams<T> {
    pub fn new(mu: T, tau2: T, sigma2_eff: T) -> Result<Self> {
        let p = Self { mu, tau2, sigma2_eff };
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
        if !(self.sigma2_eff > T::zero()) || !self.sigma2_eff.is_finite() {
            return Err(FabError::domain("sigma2_eff", self.sigma2_eff.as_f64()));
        }
        Ok(())
    }

    fn degenerate(&self) -> bool {
        self.tau2 <= self.sigma2_eff * c(TAU2_FLOOR_REL)
    }
}

/// `g(w) = Φ⁻¹(αw) - Φ⁻¹(α(1-w))`.
pub fn g<T: Real>(w: T, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if !(w > T::zero() && w < T::one()) {
        return Err(FabError::domain("w", w.as_f64()));
    }
    Ok(std_normal_quantile(alpha * w)? - std_normal_quantile(alpha * (T::one() - w))?)
}

/// Inverse of [`g`], returned with its complement.
///
/// For `v ≤ 0` the equation is solved in `x = Φ⁻¹(αw)`, where it reads
/// `x - Φ⁻¹(α - Φ(x)) = v` and stays well conditioned even when `w`
/// underflows; `v > 0` follows from `g(1-w) = -g(w)`.
pub fn g_inverse_weight<T: Real>(v: T, alpha: T) -> Result<Weight<T>> {
    check_alpha(alpha)?;
    if v.is_nan() {
        return Err(FabError::domain("g argument", f64::NAN));
    }
    if v == T::zero() {
        return Ok(Weight::half());
    }
    if v > T::zero() {
        return Ok(g_inverse_weight(-v, alpha)?.flip());
    }
    if v.is_infinite() {
        return Ok(Weight { w: T::zero(), w_c: T::one() });
    }
    let z_a = std_normal_quantile(alpha)?;
    let z_half = std_normal_quantile(alpha * c(0.5))?;
    let k = |x: T| -> Result<T> {
        let rest = alpha - std_normal_cdf(x);
        Ok(x - normal_quantile_ext(rest)? - v)
    };
    let lo = v + z_half;
    let hi = (v + z_a).min(z_half);
    let f_lo = k(lo)?;
    let f_hi = k(hi)?;
    let root = if f_lo >= T::zero() {
        lo
    } else if f_hi <= T::zero() {
        hi
    } else {
        let opts = RootOptions {
            xtol: T::tol_floor(lo) * c(0.25),
            ftol: T::zero(),
            max_iter: 200,
        };
        brent_root(k, lo, hi, f_lo, f_hi, opts)?.x
    };
    let w = std_normal_cdf(root) / alpha;
    Ok(Weight::new(w.min(c(0.5))))
}

/// Inverse of [`g`].
pub fn g_inverse<T: Real>(v: T, alpha: T) -> Result<T> {
    Ok(g_inverse_weight(v, alpha)?.w)
}

/// The closed-form optimal w-function `w_ψ(θ) = g⁻¹(2σ(θ - μ)/τ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrattW<T> {
    pub psi: HomoHierParams<T>,
    pub alpha: T,
}

impl<T: Real> PrattW<T> {
    pub fn new(psi: HomoHierParams<T>, alpha: T) -> Result<Self> {
        psi.validate()?;
        check_alpha(alpha)?;
        Ok(Self { psi, alpha })
    }
}

impl<T: Real> WFunction<T> for PrattW<T> {
    fn weight(&self, theta: T) -> Result<Weight<T>> {
        let sigma = self.psi.sigma2_eff.sqrt();
        let v = c::<T>(2.0) * sigma * (theta - self.psi.mu) / self.psi.tau2;
        g_inverse_weight(v, self.alpha)
    }

    fn center(&self) -> Option<T> {
        Some(self.psi.mu)
    }
}

/// `w_ψ(θ)`; σ in the formula is `√sigma2_eff`.
pub fn w_psi<T: Real>(theta: T, psi: &HomoHierParams<T>, alpha: T) -> Result<T> {
    PrattW::new(*psi, alpha)?.w(theta)
}

/// Equal-tailed interval `y ± σ z_{1-α/2}`.
pub fn umau_z_interval<T: Real>(y: T, sigma2: T, alpha: T) -> Result<Interval<T>> {
    check_alpha(alpha)?;
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(FabError::domain("sigma2", sigma2.as_f64()));
    }
    if !y.is_finite() {
        return Err(FabError::domain("y", y.as_f64()));
    }
    let half = sigma2.sqrt() * -std_normal_quantile(alpha * c(0.5))?;
    Ok(Interval {
        lower: y - half,
        upper: y + half,
        alpha,
        method: Method::UmauZ,
        diagnostics: Diagnostics::closed_form(),
        fallback: None,
    })
}

/// Inverts `{A_w(θ)}` for an arbitrary nondecreasing w at known σ.
pub fn fab_z_interval_with<T: Real, W: WFunction<T> + ?Sized>(
    y: T,
    sigma: T,
    w_fn: &W,
    alpha: T,
) -> Result<Interval<T>> {
    check_alpha(alpha)?;
    if !y.is_finite() {
        return Err(FabError::domain("y", y.as_f64()));
    }
    if !(sigma > T::zero()) {
        return Err(FabError::domain("sigma", sigma.as_f64()));
    }
    Pivot {
        center: y,
        scale: sigma,
        alpha,
        wfn: w_fn,
        quantile: normal_quantile_ext::<T>,
    }
    .solve(Method::FabZ)
}

/// The FAB z-interval for `y ~ N(θ, σ²_eff)` tuned to `θ ~ N(μ, τ²)`.
///
/// A τ² indistinguishable from zero falls back to the UMAU interval, with
/// the reason recorded in [`Interval::fallback`].
pub fn fab_z_interval<T: Real>(y: T, psi: &HomoHierParams<T>, alpha: T) -> Result<Interval<T>> {
    check_alpha(alpha)?;
    if psi.tau2 >= T::zero() && psi.sigma2_eff > T::zero() && psi.degenerate() {
        let mut iv = umau_z_interval(y, psi.sigma2_eff, alpha)?;
        iv.fallback = Some(format!("tau2 = {} below floor; UMAU interval returned", psi.tau2));
        return Ok(iv);
    }
    let wfn = PrattW::new(*psi, alpha)?;
    fab_z_interval_with(y, psi.sigma2_eff.sqrt(), &wfn, alpha)
}

/// True when θ lies in the FAB z-region for data `y` (one w evaluation).
pub fn fab_z_covers<T: Real, W: WFunction<T> + ?Sized>(
    y: T,
    sigma: T,
    w_fn: &W,
    alpha: T,
    theta: T,
) -> Result<bool> {
    Pivot {
        center: y,
        scale: sigma,
        alpha,
        wfn: w_fn,
        quantile: normal_quantile_ext::<T>,
    }
    .covers(theta)
}

/// Grid points θ with `y ∈ A_w(θ)`, by direct test of each acceptance region.
pub fn invert_region_oracle<T: Real, W: WFunction<T> + ?Sized>(
    y: T,
    w_fn: &W,
    sigma: T,
    alpha: T,
    theta_grid: &ThetaGrid<T>,
) -> Result<Vec<T>> {
    check_alpha(alpha)?;
    let pivot = Pivot {
        center: y,
        scale: sigma,
        alpha,
        wfn: w_fn,
        quantile: normal_quantile_ext::<T>,
    };
    invert_on_grid(&pivot, theta_grid)
}

/// Expected width of the FAB z-interval at θ, `E_θ |C(Y)|` with `Y ~ N(θ, σ²_eff)`,
/// by Gauss–Legendre quadrature over `θ ± 12σ_eff`.
pub fn fab_z_risk<T: Real>(theta: T, psi: &HomoHierParams<T>, alpha: T, nodes: usize) -> Result<T> {
    let (x, wts) = gauss_legendre::<T>(nodes);
    let sigma = psi.sigma2_eff.sqrt();
    let half = c::<T>(12.0) * sigma;
    let mut total = T::zero();
    for (xi, wi) in x.into_iter().zip(wts) {
        let y = theta + half * xi;
        let dens = crate::distributions::std_normal_pdf((y - theta) / sigma) / sigma;
        let width = fab_z_interval(y, psi, alpha)?.width();
        total += wi * half * dens * width;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pratt() -> HomoHierParams<f64> {
        HomoHierParams::new(0.0, 0.25, 1.0).unwrap()
    }

    /// Bisection on the monotone g, the oracle for g⁻¹.
    fn bisect_g(v: f64, alpha: f64) -> f64 {
        let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid, alpha).unwrap() < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn g_basics() {
        assert!(g(0.5f64, 0.05).unwrap().abs() < 1e-15);
        let direct = std_normal_quantile(0.045f64).unwrap() - std_normal_quantile(0.005f64).unwrap();
        assert!((g(0.9f64, 0.05).unwrap() - direct).abs() < 1e-14);
        assert!(g(0.0f64, 0.05).is_err());
        assert!(g(0.5f64, 1.5).is_err());
    }

    #[test]
    fn g_inverse_matches_bisection() {
        assert_eq!(g_inverse(0.0f64, 0.05).unwrap(), 0.5);
        // g⁻¹(8) = 1 - 8e-21 rounds to 1 in f64; its complement carries the value
        let wt = g_inverse_weight(8.0f64, 0.05).unwrap();
        assert!(wt.w > 0.5 && wt.w_c > 0.0 && wt.w_c < 0.5);
        let (mut lo, mut hi) = (-60.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let wc = 10f64.powf(mid);
            let gv = std_normal_quantile(0.05 * (1.0 - wc)).unwrap() - std_normal_quantile(0.05 * wc).unwrap();
            if gv > 8.0 { lo = mid } else { hi = mid }
        }
        assert!((wt.w_c / 10f64.powf(lo) - 1.0).abs() < 1e-8);
        let w = g_inverse(3.0f64, 0.05).unwrap();
        assert!((w - bisect_g(3.0, 0.05)).abs() < 1e-10);
        for &v in &[-5.0f64, -1.0, 0.3, 2.0] {
            assert!((g_inverse(v, 0.05).unwrap() - bisect_g(v, 0.05)).abs() < 1e-10);
        }
    }

    #[test]
    fn g_inverse_far_tails_stay_ordered() {
        let a = g_inverse_weight(-30.0f64, 0.05).unwrap();
        let b = g_inverse_weight(-20.0f64, 0.05).unwrap();
        assert!(a.w > 0.0 && a.w < b.w && b.w < 1e-80);
        let u = g_inverse_weight(30.0f64, 0.05).unwrap();
        assert!(u.w_c > 0.0 && u.w_c < 1e-100 && u.w == 1.0);
        // past underflow w saturates instead of failing
        let s = g_inverse_weight(-1e4f64, 0.05).unwrap();
        assert_eq!(s.w, 0.0);
    }

    proptest! {
        #[test]
        fn g_round_trip(w in 0.001f64..0.999, alpha in 0.01f64..0.9) {
            let v = g(w, alpha).unwrap();
            let back = g_inverse(v, alpha).unwrap();
            prop_assert!((back - w).abs() < 1e-9);
        }

        #[test]
        fn g_inverse_increasing(v1 in -30.0f64..30.0, dv in 0.01f64..5.0) {
            let a = g_inverse(v1, 0.05).unwrap();
            let b = g_inverse(v1 + dv, 0.05).unwrap();
            prop_assert!(b >= a);
        }

        #[test]
        fn w_psi_antisymmetric(d in 0.0f64..10.0) {
            let psi = pratt();
            let up = w_psi(d, &psi, 0.05).unwrap();
            let down = w_psi(-d, &psi, 0.05).unwrap();
            prop_assert!((up - (1.0 - down)).abs() < 1e-12);
        }
    }

    #[test]
    fn w_psi_spot_value() {
        let psi = pratt();
        assert_eq!(w_psi(0.0, &psi, 0.05).unwrap(), 0.5);
        // σ = 1, τ² = 1/4: v = 2 · 0.5 / 0.25 = 4
        let w = w_psi(0.5, &psi, 0.05).unwrap();
        assert!((w - bisect_g(4.0, 0.05)).abs() < 1e-8);
    }

    #[test]
    fn endpoints_solve_their_equations() {
        let psi = pratt();
        let wfn = PrattW::new(psi, 0.05).unwrap();
        for &y in &[-6.0f64, -1.0, 0.0, 0.7, 3.0, 20.0] {
            let iv = fab_z_interval(y, &psi, 0.05).unwrap();
            let wu = wfn.weight(iv.upper).unwrap();
            let wl = wfn.weight(iv.lower).unwrap();
            let ru = iv.upper - (y - std_normal_quantile(0.05 * wu.w).unwrap());
            let rl = iv.lower - (y + std_normal_quantile(0.05 * wl.w_c).unwrap());
            assert!(ru.abs() < 1e-8 && rl.abs() < 1e-8, "y={y}: {ru} {rl}");
            let z95 = std_normal_quantile(0.95f64).unwrap();
            assert!(iv.lower <= y - z95 + 1e-12 && y + z95 <= iv.upper + 1e-12);
        }
    }

    #[test]
    fn width_at_prior_mean() {
        let iv = fab_z_interval(0.0, &pratt(), 0.05).unwrap();
        assert!((iv.width() - 3.29).abs() < 0.01);
        let umau = umau_z_interval(0.0f64, 1.0, 0.05).unwrap();
        assert!((umau.width() - 3.9199).abs() < 1e-4);
        let ratio = iv.width() / umau.width();
        assert!((ratio - 0.84).abs() < 0.01);

        let iv = fab_z_interval(0.0, &pratt(), 0.5).unwrap();
        let umau = umau_z_interval(0.0, 1.0, 0.5).unwrap();
        assert!((iv.width() / umau.width() - 0.25).abs() < 0.01);
    }

    #[test]
    fn diffuse_prior_recovers_umau() {
        let psi = HomoHierParams::new(0.0, 1e8, 1.0).unwrap();
        for &y in &[-3.0f64, 0.0, 2.5] {
            let iv = fab_z_interval(y, &psi, 0.05).unwrap();
            let u = umau_z_interval(y, 1.0, 0.05).unwrap();
            assert!((iv.lower - u.lower).abs() < 1e-3 && (iv.upper - u.upper).abs() < 1e-3);
        }
    }

    #[test]
    fn degenerate_tau_falls_back() {
        let psi = HomoHierParams::new(0.0, 1e-14, 1.0).unwrap();
        let iv = fab_z_interval(0.3, &psi, 0.05).unwrap();
        assert_eq!(iv.method, Method::UmauZ);
        assert!(iv.fallback.is_some());
    }

    #[test]
    fn width_grows_away_from_mu() {
        let psi = pratt();
        let umau = 2.0 * 1.959963984540054;
        let w0 = fab_z_interval(0.0, &psi, 0.05).unwrap().width();
        let w_far = fab_z_interval(8.0, &psi, 0.05).unwrap().width();
        let w_mid = fab_z_interval(3.0, &psi, 0.05).unwrap().width();
        assert!(w0 < w_mid && w_mid < w_far && w_far > umau);
    }

    #[test]
    fn grid_oracle_matches_solver() {
        let psi = pratt();
        let wfn = PrattW::new(psi, 0.05).unwrap();
        let y = 1.3;
        let iv = fab_z_interval(y, &psi, 0.05).unwrap();
        let grid = ThetaGrid::with_spacing(-6.0, 8.0, 1e-3).unwrap();
        let pts = invert_region_oracle(y, &wfn, 1.0, 0.05, &grid).unwrap();
        let (lo, hi) = (pts[0], *pts.last().unwrap());
        let h = grid.spacing();
        assert!((lo - iv.lower).abs() <= h && (hi - iv.upper).abs() <= h);
        // contiguous
        assert_eq!(pts.len(), ((hi - lo) / h).round() as usize + 1);
    }

    #[test]
    fn constant_half_grid_is_umau() {
        let wfn = crate::wfn::ConstantW::half();
        let grid = ThetaGrid::with_spacing(-4.0, 4.0, 1e-3).unwrap();
        let pts = invert_region_oracle(0.0f64, &wfn, 1.0, 0.05, &grid).unwrap();
        assert!((pts[0] + 1.959964).abs() < 1e-3);
        assert!((pts.last().unwrap() - 1.959964).abs() < 1e-3);
    }

    #[test]
    fn risk_at_prior_mean() {
        let psi = pratt();
        let r = fab_z_risk(0.0, &psi, 0.05, 201).unwrap();
        assert!((r / 3.919928 - 0.85).abs() < 0.02, "risk {r}");
        let r = fab_z_risk(0.0, &psi, 0.5, 201).unwrap();
        let umau = 2.0 * 0.674489750196;
        assert!((r / umau - 0.60).abs() < 0.03);
    }

    #[test]
    fn single_precision_instance() {
        let psi = HomoHierParams::new(0.0f32, 0.25, 1.0).unwrap();
        let iv = fab_z_interval(0.0f32, &psi, 0.05).unwrap();
        assert!((iv.width() - 3.29).abs() < 0.01);
    }
}
