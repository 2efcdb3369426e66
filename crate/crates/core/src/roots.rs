//! Bracketed scalar root finding and minimization.

use crate::error::{FabError, Result};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions<T> {
    /// Absolute tolerance on the bracket half-width.
    pub xtol: T,
    /// Absolute tolerance on `|f(x)|`.
    pub ftol: T,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Brent's method on a sign-changing bracket `[a, b]` with `f(a) = fa`, `f(b) = fb`.
///
/// `f` may return infinities (saturated quantiles); such points force a
/// bisection step instead of interpolation.
pub fn brent_root<T, F>(mut f: F, a: T, b: T, fa: T, fb: T, opts: RootOptions<T>) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.is_nan() || fb.is_nan() || (fa > T::zero()) == (fb > T::zero()) {
        return Err(FabError::Convergence {
            what: "root bracket (no sign change)",
            iterations: 0,
            residual: fa.abs().min(fb.abs()).as_f64(),
        });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut cc, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    let two = c::<T>(2.0);
    let half = c::<T>(0.5);
    for iter in 1..=opts.max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            cc = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = cc;
            cc = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * opts.xtol;
        let xm = half * (cc - b);
        if fb.abs() <= opts.ftol || xm.abs() <= tol1 {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        let finite = fa.is_finite() && fb.is_finite() && fc.is_finite();
        if finite && e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == cc {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = c::<T>(3.0) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else if xm > T::zero() {
            b + tol1
        } else {
            b - tol1
        };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(FabError::Convergence {
                what: "root function returned NaN",
                iterations: iter,
                residual: f64::NAN,
            });
        }
    }
    Err(FabError::Convergence {
        what: "Brent root",
        iterations: opts.max_iter,
        residual: fb.as_f64(),
    })
}

/// Walks `x` in direction `dir` (±1) with doubling steps until `f` changes
/// sign relative to `f(start) = f0`. Returns `(x_prev, f_prev, x, f_x)`.
pub fn expand_bracket<T, F>(
    mut f: F,
    start: T,
    f0: T,
    first: T,
    step: T,
    max_tries: usize,
) -> Result<(T, T, T, T)>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let positive = f0 > T::zero();
    let dir = if first >= start { T::one() } else { -T::one() };
    let mut step = step.abs().max(T::min_positive_value());
    let (mut prev, mut fprev) = (start, f0);
    let mut x = first;
    for _ in 0..max_tries {
        let fx = f(x)?;
        if fx.is_nan() {
            return Err(FabError::Convergence {
                what: "bracket expansion hit NaN",
                iterations: 0,
                residual: f64::NAN,
            });
        }
        if fx == T::zero() || (fx > T::zero()) != positive {
            return Ok((prev, fprev, x, fx));
        }
        prev = x;
        fprev = fx;
        x = x + dir * step;
        step = step * c(2.0);
    }
    Err(FabError::Convergence {
        what: "bracket expansion",
        iterations: max_tries,
        residual: fprev.as_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Brent's derivative-free minimization on `[a, b]`.
pub fn brent_minimize<T, F>(mut f: F, a: T, b: T, xtol: T, max_iter: usize) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let golden = c::<T>(0.381_966_011_250_105_1);
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d = T::zero();
    let mut e = T::zero();
    let half = c::<T>(0.5);
    let two = c::<T>(2.0);
    for iter in 1..=max_iter {
        let xm = half * (a + b);
        let tol1 = T::epsilon().sqrt() * x.abs() * c(1e-3) + xtol / c(3.0);
        let tol2 = two * tol1;
        if (x - xm).abs() <= tol2 - half * (b - a) {
            return Ok(Minimum { x, fx, iterations: iter });
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (half * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(FabError::Optimization {
        what: "Brent minimization",
        reason: "iteration limit reached".into(),
        best: vec![x.as_f64()],
        value: fx.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RootOptions<f64> {
        RootOptions {
            xtol: 1e-14,
            ftol: 0.0,
            max_iter: 200,
        }
    }

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent_root(f, 0.0, 3.0, -2.0, 25.0, opts()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn tolerates_infinite_values() {
        // f = -inf below 0.1, smooth above
        let f = |x: f64| Ok(if x < 0.1 { f64::NEG_INFINITY } else { x.ln() });
        let r = brent_root(f, 0.0, 5.0, f64::NEG_INFINITY, 5f64.ln(), opts()).unwrap();
        assert!((r.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_missing_sign_change() {
        let f = |x: f64| Ok(x * x + 1.0);
        assert!(brent_root(f, -1.0, 1.0, 2.0, 2.0, opts()).is_err());
    }

    #[test]
    fn expansion_finds_far_root() {
        let f = |x: f64| Ok(x - 1000.0);
        let (a, fa, b, fb) = expand_bracket(f, 0.0, -1000.0, 1.0, 1.0, 60).unwrap();
        assert!(fa < 0.0 && fb >= 0.0 && a < 1000.0 && b >= 1000.0);
        let f = |x: f64| Ok(x + 50.0);
        let (_, _, b, fb) = expand_bracket(f, 0.0, 50.0, -1.0, 1.0, 60).unwrap();
        assert!(fb <= 0.0 && b <= -50.0);
    }

    #[test]
    fn minimizes_smooth_function() {
        let f = |x: f64| Ok((x - 0.3).powi(2) + 1.0);
        let m = brent_minimize(f, 0.0, 1.0, 1e-9, 200).unwrap();
        assert!((m.x - 0.3).abs() < 1e-7);
    }
}
