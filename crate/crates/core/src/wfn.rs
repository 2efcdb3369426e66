//! w-functions: how the error rate α is split between the two tails at each θ.

use crate::error::{FabError, Result};
use crate::scalar::{c, Real};

/// A tail split `w` together with `1 - w`, each kept to full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight<T> {
    pub w: T,
    pub w_c: T,
}

impl<T: Real> Weight<T> {
    pub fn new(w: T) -> Self {
        Self { w, w_c: T::one() - w }
    }

    pub fn from_complement(w_c: T) -> Self {
        Self { w: T::one() - w_c, w_c }
    }

    pub fn half() -> Self {
        Self::new(c(0.5))
    }

    pub fn flip(self) -> Self {
        Self {
            w: self.w_c,
            w_c: self.w,
        }
    }
}

/// A continuous nondecreasing map θ ↦ w(θ) ∈ [0, 1].
pub trait WFunction<T: Real>: Sync {
    fn weight(&self, theta: T) -> Result<Weight<T>>;

    fn w(&self, theta: T) -> Result<T> {
        Ok(self.weight(theta)?.w)
    }

    /// A point where w crosses 1/2, when known; tightens endpoint brackets.
    fn center(&self) -> Option<T> {
        None
    }
}

impl<T: Real, W: WFunction<T> + ?Sized> WFunction<T> for &W {
    fn weight(&self, theta: T) -> Result<Weight<T>> {
        (**self).weight(theta)
    }

    fn center(&self) -> Option<T> {
        (**self).center()
    }
}

/// w(θ) ≡ constant; `1/2` gives the equal-tailed (UMAU) procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantW<T>(pub Weight<T>);

impl<T: Real> ConstantW<T> {
    pub fn new(w: T) -> Result<Self> {
        if !(w > T::zero() && w < T::one()) {
            return Err(FabError::domain("constant w", w.as_f64()));
        }
        Ok(Self(Weight::new(w)))
    }

    pub fn half() -> Self {
        Self(Weight::half())
    }
}

impl<T: Real> WFunction<T> for ConstantW<T> {
    fn weight(&self, _theta: T) -> Result<Weight<T>> {
        Ok(self.0)
    }
}

/// Wraps a closure as a w-function (the caller vouches for monotonicity).
pub struct FnW<F>(pub F);

impl<T: Real, F> WFunction<T> for FnW<F>
where
    F: Fn(T) -> Result<Weight<T>> + Sync,
{
    fn weight(&self, theta: T) -> Result<Weight<T>> {
        (self.0)(theta)
    }
}
