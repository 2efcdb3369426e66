//! Interval records and the endpoint solver shared by the z and t procedures.

use serde::{Deserialize, Serialize};

use crate::error::{FabError, Result};
use crate::roots::{brent_root, expand_bracket, RootOptions};
use crate::scalar::{c, Real};
use crate::wfn::WFunction;

/// Which procedure produced an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    FabZ,
    FabT,
    FabHomoscedastic,
    FabHeteroscedastic,
    UmauZ,
    UmauT,
    EmpiricalBayes,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FabZ => "fab-z",
            Method::FabT => "fab-t",
            Method::FabHomoscedastic => "fab-homo",
            Method::FabHeteroscedastic => "fab-hetero",
            Method::UmauZ => "umau-z",
            Method::UmauT => "umau",
            Method::EmpiricalBayes => "eb",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub residual_lower: f64,
    pub residual_upper: f64,
}

impl Diagnostics {
    pub fn closed_form() -> Self {
        Self {
            iterations: 0,
            converged: true,
            residual_lower: 0.0,
            residual_upper: 0.0,
        }
    }
}

/// A two-sided confidence interval `(lower, upper)` at level `1 - alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
    pub alpha: T,
    pub method: Method,
    pub diagnostics: Diagnostics,
    /// Set when the requested procedure degraded to a simpler one.
    pub fallback: Option<String>,
}

impl<T: Real> Interval<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: T) -> bool {
        self.lower < theta && theta < self.upper
    }

    pub fn midpoint(&self) -> T {
        (self.lower + self.upper) * c(0.5)
    }
}

pub(crate) fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(FabError::domain("alpha", alpha.as_f64()))
    }
}

/// Location/scale pivot `θ ∈ (m + s·Q(α(1-w(θ))), m - s·Q(α w(θ)))`, where `Q`
/// is the quantile of a symmetric reference law (normal or t).
pub(crate) struct Pivot<'a, T, W: ?Sized, Q> {
    pub center: T,
    pub scale: T,
    pub alpha: T,
    pub wfn: &'a W,
    pub quantile: Q,
}

impl<T, W, Q> Pivot<'_, T, W, Q>
where
    T: Real,
    W: WFunction<T> + ?Sized,
    Q: Fn(T) -> Result<T>,
{
    /// Increasing in θ; the upper endpoint is its root.
    fn h_upper(&self, theta: T) -> Result<T> {
        let w = self.wfn.weight(theta)?;
        let q = (self.quantile)(self.alpha * w.w)?;
        Ok(theta - self.center + self.scale * q)
    }

    /// Increasing in θ; the lower endpoint is its root.
    fn h_lower(&self, theta: T) -> Result<T> {
        let w = self.wfn.weight(theta)?;
        let q = (self.quantile)(self.alpha * w.w_c)?;
        Ok(theta - self.center - self.scale * q)
    }

    /// True when `θ` lies in the inverted region, i.e. the data are in `A_w(θ)`.
    pub fn covers(&self, theta: T) -> Result<bool> {
        let w = self.wfn.weight(theta)?;
        let q_lo = (self.quantile)(self.alpha * w.w_c)?;
        let q_hi = (self.quantile)(self.alpha * w.w)?;
        Ok(theta - self.center - self.scale * q_lo > T::zero()
            && theta - self.center + self.scale * q_hi < T::zero())
    }

    pub fn solve(&self, method: Method) -> Result<Interval<T>> {
        let s = self.scale;
        let q_a = (self.quantile)(self.alpha)?;
        let q_half = (self.quantile)(self.alpha * c(0.5))?;
        let opts = RootOptions {
            xtol: s * c(1e-11),
            ftol: s * c(1e-10),
            max_iter: 300,
        };
        let max_tries = 200;

        // upper endpoint: h_U ≤ 0 at m + s t_{1-α}; h_U ≥ 0 at max(center, m + s t_{1-α/2})
        let lo_u = self.center - s * q_a;
        let f_lo_u = self.h_upper(lo_u)?;
        let mut hi_u = self.center - s * q_half;
        if let Some(m) = self.wfn.center() {
            hi_u = hi_u.max(m);
        }
        if hi_u <= lo_u {
            hi_u = lo_u + s;
        }
        let (upper, iter_u) = if f_lo_u >= T::zero() {
            (crate::roots::Root { x: lo_u, fx: f_lo_u, iterations: 0 }, 0)
        } else {
            let (a, fa, b, fb) =
                expand_bracket(|t| self.h_upper(t), lo_u, f_lo_u, hi_u, hi_u - lo_u + s, max_tries)?;
            let r = brent_root(|t| self.h_upper(t), a, b, fa, fb, opts)?;
            (r, r.iterations)
        };

        let hi_l = self.center + s * q_a;
        let f_hi_l = self.h_lower(hi_l)?;
        let mut lo_l = self.center + s * q_half;
        if let Some(m) = self.wfn.center() {
            lo_l = lo_l.min(m);
        }
        if lo_l >= hi_l {
            lo_l = hi_l - s;
        }
        let (lower, iter_l) = if f_hi_l <= T::zero() {
            (crate::roots::Root { x: hi_l, fx: f_hi_l, iterations: 0 }, 0)
        } else {
            let (a, fa, b, fb) =
                expand_bracket(|t| self.h_lower(t), hi_l, f_hi_l, lo_l, hi_l - lo_l + s, max_tries)?;
            let r = brent_root(|t| self.h_lower(t), a, b, fa, fb, opts)?;
            (r, r.iterations)
        };

        // Brent only returns once the bracket is below `xtol`, so the
        // endpoints are pinned even where a steep w leaves a larger residual.
        let res_u = upper.fx.abs();
        let res_l = lower.fx.abs();
        let converged = true;
        Ok(Interval {
            lower: lower.x,
            upper: upper.x,
            alpha: self.alpha,
            method,
            diagnostics: Diagnostics {
                iterations: iter_u + iter_l,
                converged,
                residual_lower: res_l.as_f64(),
                residual_upper: res_u.as_f64(),
            },
            fallback: None,
        })
    }
}

/// Evenly spaced grid of θ values, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid<T> {
    pub lo: T,
    pub hi: T,
    pub n: usize,
}

impl<T: Real> ThetaGrid<T> {
    pub fn new(lo: T, hi: T, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(FabError::Config(format!("invalid grid range [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(FabError::Config("grid needs at least 2 points".into()));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid with the given spacing (rounded so both ends are hit).
    pub fn with_spacing(lo: T, hi: T, spacing: T) -> Result<Self> {
        let n = ((hi - lo) / spacing).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(lo, hi, n)
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / T::from_usize_lossy(self.n - 1)
    }

    pub fn point(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.spacing() * T::from_usize_lossy(i)
        }
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

/// Grid points θ whose acceptance region contains the data: an independent
/// check on the endpoint solver.
pub(crate) fn invert_on_grid<T, W, Q>(pivot: &Pivot<'_, T, W, Q>, grid: &ThetaGrid<T>) -> Result<Vec<T>>
where
    T: Real,
    W: WFunction<T> + ?Sized,
    Q: Fn(T) -> Result<T>,
{
    let mut out = Vec::new();
    for theta in grid.points() {
        if pivot.covers(theta)? {
            out.push(theta);
        }
    }
    Ok(out)
}
