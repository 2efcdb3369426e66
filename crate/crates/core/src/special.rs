//! Special functions backing the distribution layer.
//!
//! Everything here is written against [`Real`] so the same code serves
//! `f32` and `f64`. Accuracy figures quoted in comments are for `f64`.

use crate::error::{FabError, Result};
use crate::scalar::{c, Real};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_78;

/// Iteration cap shared by the continued fractions and series below.
pub(crate) const SERIES_MAX_ITER: usize = 20_000;

/// Stirling remainder `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]`, valid for `x >= 10`.
fn stirling_remainder<T: Real>(x: T) -> T {
    let r = x.recip();
    let r2 = r * r;
    // Bernoulli-number series; at x = 10 the next term is below 1e-17.
    let series = c::<T>(1.0 / 156.0);
    let series = series * r2 - c(691.0 / 360_360.0);
    let series = series * r2 + c(1.0 / 1188.0);
    let series = series * r2 - c(1.0 / 1680.0);
    let series = series * r2 + c(1.0 / 1260.0);
    let series = series * r2 - c(1.0 / 360.0);
    let series = series * r2 + c(1.0 / 12.0);
    series * r
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    if x.is_infinite() {
        return T::infinity();
    }
    let ten = c::<T>(10.0);
    if x >= ten {
        return (x - c(0.5)) * x.ln() - x + c(HALF_LN_2PI) + stirling_remainder(x);
    }
    // shift up into the Stirling range: Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1))
    let mut z = x;
    let mut prod = T::one();
    while z < ten {
        prod *= z;
        z += T::one();
    }
    (z - c(0.5)) * z.ln() - z + c(HALF_LN_2PI) + stirling_remainder(z) - prod.ln()
}

/// `ln B(a, b)` with the large-argument cancellation handled analytically.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    let (p, q) = if a <= b { (a, b) } else { (b, a) };
    let ten = c::<T>(10.0);
    if p >= ten {
        let s = p + q;
        c::<T>(HALF_LN_2PI) - c::<T>(0.5) * q.ln()
            + stirling_remainder(p)
            + stirling_remainder(q)
            - stirling_remainder(s)
            + (p - c(0.5)) * (p / s).ln()
            + q * (-p / s).ln_1p()
    } else if q >= ten {
        // ln Γ(q) - ln Γ(p + q), expanded around q
        let diff = -p * q.ln() - (p + q - c(0.5)) * (p / q).ln_1p() + p + stirling_remainder(q)
            - stirling_remainder(p + q);
        ln_gamma(p) + diff
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
    }
}

/// Digamma ψ(x) for `x > 0`.
pub fn digamma<T: Real>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    let mut z = x;
    let mut acc = T::zero();
    while z < c(10.0) {
        acc -= z.recip();
        z += T::one();
    }
    let r = z.recip();
    let r2 = r * r;
    let tail = r2
        * (c::<T>(-1.0 / 12.0)
            + r2 * (c::<T>(1.0 / 120.0)
                + r2 * (c::<T>(-1.0 / 252.0)
                    + r2 * (c::<T>(1.0 / 240.0)
                        + r2 * (c::<T>(-1.0 / 132.0) + r2 * c::<T>(691.0 / 32760.0))))));
    acc + z.ln() - c::<T>(0.5) * r + tail
}

/// `exp(-x^2)` with the squaring error removed by splitting `x`.
fn exp_neg_sq<T: Real>(x: T) -> T {
    let sixteen = c::<T>(16.0);
    let hi = (x * sixteen).floor() / sixteen;
    let lo = x - hi;
    (-(hi * hi)).exp() * (-(lo * (x + hi))).exp()
}

/// erf(x) for `0 <= x <= 3` via the positive-term series
/// `erf(x) = 2/√π · e^{-x²} · Σ 2^n x^{2n+1} / (2n+1)!!`.
fn erf_series<T: Real>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = T::one();
    for _ in 0..200 {
        k += c(2.0);
        term = term * c::<T>(2.0) * x2 / k;
        sum += term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    c::<T>(2.0) * (T::FRAC_2_SQRT_PI() * c(0.5)) * exp_neg_sq(x) * sum
}

/// erfc(x) for `x >= 3` by the Laplace continued fraction (modified Lentz).
fn erfc_cf<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut f = x;
    let mut cc = x;
    let mut d = T::zero();
    for i in 1..500 {
        let an = c::<T>(i as f64 * 0.5);
        d = x + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = x + an / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        let delta = cc * d;
        f *= delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    exp_neg_sq(x) * (T::FRAC_2_SQRT_PI() * c(0.5)) / f
}

/// Complementary error function with relative accuracy in the upper tail.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return c::<T>(2.0) - erfc(-x);
    }
    if x < c(3.0) {
        T::one() - erf_series(x)
    } else if x > c(27.3) {
        T::zero()
    } else {
        erfc_cf(x)
    }
}

/// Error function.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let v = if ax < c(3.0) {
        erf_series(ax)
    } else {
        T::one() - erfc(ax)
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// `x^a y^b / (a B(a, b))`, the front factor of the incomplete beta function.
pub(crate) fn beta_front<T: Real>(a: T, b: T, x: T, y: T) -> T {
    (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp() / a
}

fn beta_cf<T: Real>(a: T, b: T, x: T) -> Result<T> {
    let tiny = T::min_positive_value() / T::epsilon();
    let eps = T::epsilon();
    let qab = a + b;
    let qap = a + T::one();
    let qam = a - T::one();
    let mut cc = T::one();
    let mut d = T::one() - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..SERIES_MAX_ITER {
        let m = T::from_usize_lossy(m);
        let m2 = m + m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = T::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = T::one() + aa / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        h *= d * cc;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = T::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = T::one() + aa / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        let del = d * cc;
        h *= del;
        if (del - T::one()).abs() <= eps {
            return Ok(h);
        }
    }
    Err(FabError::Convergence {
        what: "incomplete beta continued fraction",
        iterations: SERIES_MAX_ITER,
        residual: f64::NAN,
    })
}

/// Regularized incomplete beta `(I_x(a, b), 1 - I_x(a, b))`.
///
/// `y` must equal `1 - x`; passing it separately keeps both tails accurate.
/// Whichever member is evaluated directly carries full relative precision.
pub fn inc_beta_pair<T: Real>(a: T, b: T, x: T, y: T) -> Result<(T, T)> {
    if !(a > T::zero()) || !(b > T::zero()) {
        return Err(FabError::domain("incomplete beta shape", a.min(b).as_f64()));
    }
    if !(x >= T::zero()) || !(y >= T::zero()) {
        return Err(FabError::domain("incomplete beta argument", x.as_f64()));
    }
    if x == T::zero() {
        return Ok((T::zero(), T::one()));
    }
    if y == T::zero() {
        return Ok((T::one(), T::zero()));
    }
    if x * (a + b + c(2.0)) < a + T::one() {
        let v = beta_front(a, b, x, y) * beta_cf(a, b, x)?;
        Ok((v, T::one() - v))
    } else {
        let v = beta_front(b, a, y, x) * beta_cf(b, a, y)?;
        Ok((T::one() - v, v))
    }
}

/// `x^a e^{-x} / Γ(a)`, computed without the large-`a` cancellation.
pub(crate) fn gamma_front<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if a >= c(10.0) {
        let t = (x - a) / a;
        let lpm = t.ln_1p() - t;
        (a / T::TAU()).sqrt() * (a * lpm - stirling_remainder(a)).exp()
    } else {
        (a * x.ln() - x - ln_gamma(a)).exp()
    }
}

/// Regularized incomplete gamma `(P(a, x), Q(a, x))` for shape `a > 0`.
pub fn inc_gamma_pair<T: Real>(a: T, x: T) -> Result<(T, T)> {
    if !(a > T::zero()) {
        return Err(FabError::domain("incomplete gamma shape", a.as_f64()));
    }
    if x.is_nan() || x < T::zero() {
        return Err(FabError::domain("incomplete gamma argument", x.as_f64()));
    }
    if x == T::zero() {
        return Ok((T::zero(), T::one()));
    }
    if x.is_infinite() {
        return Ok((T::one(), T::zero()));
    }
    let front = gamma_front(a, x);
    if x < a + T::one() {
        let mut ap = a;
        let mut del = a.recip();
        let mut sum = del;
        for _ in 0..SERIES_MAX_ITER {
            ap += T::one();
            del = del * x / ap;
            sum += del;
            if del.abs() < sum.abs() * T::epsilon() {
                let p = (front * sum).min(T::one());
                return Ok((p, T::one() - p));
            }
        }
        Err(FabError::Convergence {
            what: "incomplete gamma series",
            iterations: SERIES_MAX_ITER,
            residual: del.as_f64(),
        })
    } else {
        let tiny = T::min_positive_value() / T::epsilon();
        let mut b = x + T::one() - a;
        let mut cc = tiny.recip();
        let mut d = b.recip();
        let mut h = d;
        for i in 1..SERIES_MAX_ITER {
            let i = T::from_usize_lossy(i);
            let an = -i * (i - a);
            b += c(2.0);
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            cc = b + an / cc;
            if cc.abs() < tiny {
                cc = tiny;
            }
            d = d.recip();
            let del = d * cc;
            h *= del;
            if (del - T::one()).abs() <= T::epsilon() {
                let q = (front * h).min(T::one());
                return Ok((T::one() - q, q));
            }
        }
        Err(FabError::Convergence {
            what: "incomplete gamma continued fraction",
            iterations: SERIES_MAX_ITER,
            residual: f64::NAN,
        })
    }
}

/// Quantile of the unit-rate gamma distribution with shape `a`.
///
/// Exactly one of `p` (lower tail) and `q` (upper tail) is used: the smaller,
/// so callers can ask for extreme upper quantiles without forming `1 - q`.
pub fn gamma_quantile<T: Real>(a: T, p: T, q: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(FabError::domain("gamma quantile shape", a.as_f64()));
    }
    if !(p >= T::zero() && q >= T::zero()) {
        return Err(FabError::domain("gamma quantile probability", p.as_f64()));
    }
    if p == T::zero() {
        return Ok(T::zero());
    }
    if q == T::zero() {
        return Ok(T::infinity());
    }
    let lower = p <= q;
    let target = if lower { p } else { q };
    // f(x) > 0 once x is past the quantile, for either tail
    let f = |x: T| -> Result<T> {
        let (pp, qq) = inc_gamma_pair(a, x)?;
        Ok(if lower { pp - p } else { q - qq })
    };

    // Wilson-Hilferty start, with the small-x power law for tiny lower tails.
    let z = crate::distributions::std_normal_quantile(if lower { p } else { q })
        .unwrap_or(T::zero());
    let z = if lower { z } else { -z };
    let nine_a = c::<T>(9.0) * a;
    let wh = T::one() - nine_a.recip() + z / nine_a.sqrt();
    let mut x = if wh > T::zero() {
        a * wh.powi(3)
    } else {
        ((target.ln() + ln_gamma(a + T::one())) / a).exp()
    };
    if lower && a < T::one() && target < c(0.1) {
        x = ((target.ln() + ln_gamma(a + T::one())) / a).exp();
    }
    if !(x > T::zero()) || !x.is_finite() {
        x = a.max(T::one());
    }

    let mut lo = x;
    let mut flo = f(lo)?;
    let mut k = 0;
    while flo > T::zero() {
        lo = lo * c(0.5);
        flo = f(lo)?;
        k += 1;
        if k > 2000 || lo == T::zero() {
            return Ok(lo);
        }
    }
    let mut hi = x.max(lo);
    let mut fhi = f(hi)?;
    k = 0;
    while fhi < T::zero() {
        hi = hi * c(2.0) + T::one();
        fhi = f(hi)?;
        k += 1;
        if k > 2000 {
            return Err(FabError::Convergence {
                what: "gamma quantile bracket",
                iterations: k,
                residual: fhi.as_f64(),
            });
        }
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }

    // Safeguarded Newton in log-space: d/d(ln x) P(a, x) = x^a e^{-x} / Γ(a).
    x = x.max(lo).min(hi);
    for _ in 0..300 {
        let fx = f(x)?;
        if fx == T::zero() {
            return Ok(x);
        }
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let slope = gamma_front(a, x);
        let mut next = if slope > T::zero() {
            x * (-fx / slope).exp()
        } else {
            T::nan()
        };
        if !(next > lo && next < hi) {
            next = if lo > T::zero() {
                (lo * hi).sqrt()
            } else {
                (lo + hi) * c(0.5)
            };
        }
        if (next - x).abs() <= x * T::epsilon() * c(4.0) || (hi - lo) <= hi * T::epsilon() * c(4.0)
        {
            return Ok(next);
        }
        x = next;
    }
    Err(FabError::Convergence {
        what: "gamma quantile",
        iterations: 300,
        residual: (hi - lo).as_f64(),
    })
}
