//! Normal, Student-t, noncentral t, inverse-gamma and F distributions.
//!
//! The gamma law on a precision is parameterized by shape `a` and rate `b`
//! (mean `a / b`) throughout the crate: `1/σ² ~ gamma(a, b)`.

use crate::error::{FabError, Result};
use crate::scalar::{c, Real};
use crate::special::{beta_front, erfc, gamma_quantile, inc_beta_pair, ln_beta};

/// Accuracy controls for the iterative distribution functions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistAccuracy {
    /// Target absolute error of a CDF value.
    pub abs_tol: f64,
    /// Iteration cap for series summation.
    pub max_iter: usize,
}

impl Default for DistAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl DistAccuracy {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(FabError::domain("accuracy tolerance", self.abs_tol));
        }
        if self.max_iter == 0 {
            return Err(FabError::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Standard normal density.
pub fn std_normal_pdf<T: Real>(x: T) -> T {
    (-(x * x) * c(0.5)).exp() / T::TAU().sqrt()
}

/// Standard normal CDF Φ(x); relative accuracy is kept in the lower tail.
pub fn std_normal_cdf<T: Real>(x: T) -> T {
    c::<T>(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

#[rustfmt::skip]
const AS241_A: [f64; 8] = [
    3.387_132_872_796_366_608, 133.141_667_891_784_377_45, 1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125, 45_921.953_931_549_871_457, 67_265.770_927_008_700_853,
    33_430.575_583_588_128_105, 2_509.080_928_730_122_672_7,
];
#[rustfmt::skip]
const AS241_B: [f64; 8] = [
    1.0, 42.313_330_701_600_911_252, 687.187_007_492_057_908_3, 5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867, 39_307.895_800_092_710_61, 28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
#[rustfmt::skip]
const AS241_C: [f64; 8] = [
    1.423_437_110_749_683_577_34, 4.630_337_846_156_545_295_9, 5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04, 1.270_458_252_452_368_382_58, 0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3, 7.745_450_142_783_414_076_4e-4,
];
#[rustfmt::skip]
const AS241_D: [f64; 8] = [
    1.0, 2.053_191_626_637_758_821_87, 1.676_384_830_183_803_849_4, 0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59, 0.015_198_666_563_616_457_196_6, 5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[rustfmt::skip]
const AS241_E: [f64; 8] = [
    6.657_904_643_501_103_777_2, 5.463_784_911_164_114_369_9, 1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23, 0.026_532_189_526_576_123_093, 0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5, 2.010_334_399_292_288_132_65e-7,
];
#[rustfmt::skip]
const AS241_F: [f64; 8] = [
    1.0, 0.599_832_206_555_887_937_69, 0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5, 7.868_691_311_456_132_591e-4, 1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7, 2.044_263_103_389_939_785_64e-15,
];

fn horner<T: Real>(coef: &[f64; 8], x: T) -> T {
    coef.iter().rev().fold(T::zero(), |acc, &k| acc * x + c(k))
}

/// Standard normal quantile Φ⁻¹(p) (Wichura's AS 241).
pub fn std_normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(FabError::domain("normal quantile probability", p.as_f64()));
    }
    let q = p - c(0.5);
    if q.abs() <= c(0.425) {
        let r = c::<T>(0.180625) - q * q;
        return Ok(q * horner(&AS241_A, r) / horner(&AS241_B, r));
    }
    let tail = if q < T::zero() { p } else { T::one() - p };
    let r = (-tail.ln()).sqrt();
    let v = if r <= c(5.0) {
        let r = r - c(1.6);
        horner(&AS241_C, r) / horner(&AS241_D, r)
    } else {
        let r = r - c(5.0);
        horner(&AS241_E, r) / horner(&AS241_F, r)
    };
    Ok(if q < T::zero() { -v } else { v })
}

/// Φ⁻¹ extended to the closed interval: `0 ↦ -∞`, `1 ↦ +∞`.
pub(crate) fn normal_quantile_ext<T: Real>(p: T) -> Result<T> {
    if p <= T::zero() {
        Ok(T::neg_infinity())
    } else if p >= T::one() {
        Ok(T::infinity())
    } else {
        std_normal_quantile(p)
    }
}

fn check_df<T: Real>(nu: T) -> Result<()> {
    if nu > T::zero() && !nu.is_nan() {
        Ok(())
    } else {
        Err(FabError::domain("degrees of freedom", nu.as_f64()))
    }
}

/// Student-t density.
pub fn t_pdf<T: Real>(x: T, nu: T) -> Result<T> {
    check_df(nu)?;
    if nu.is_infinite() {
        return Ok(std_normal_pdf(x));
    }
    let half = c::<T>(0.5);
    let ln = -(nu + T::one()) * half * (x * x / nu).ln_1p() - half * nu.ln() - ln_beta(nu * half, half);
    Ok(ln.exp())
}

/// `Pr(T > |x|)` for `T ~ t_nu`, accurate when small.
fn t_tail<T: Real>(x: T, nu: T) -> Result<T> {
    let x2 = x * x;
    let denom = nu + x2;
    let (i, _) = inc_beta_pair(nu * c(0.5), c(0.5), nu / denom, x2 / denom)?;
    Ok(i * c(0.5))
}

/// Student-t CDF via the regularized incomplete beta function.
pub fn t_cdf<T: Real>(x: T, nu: T) -> Result<T> {
    check_df(nu)?;
    if x.is_nan() {
        return Err(FabError::domain("t argument", f64::NAN));
    }
    if nu.is_infinite() {
        return Ok(std_normal_cdf(x));
    }
    if x == T::zero() {
        return Ok(c(0.5));
    }
    if x.is_infinite() {
        return Ok(if x > T::zero() { T::one() } else { T::zero() });
    }
    let tail = t_tail(x, nu)?;
    Ok(if x < T::zero() { tail } else { T::one() - tail })
}

/// Student-t quantile.
///
/// Closed forms for `nu = 1, 2`; otherwise Newton on `ln F` inside a
/// bisection bracket, started from a Cornish–Fisher expansion.
pub fn t_quantile<T: Real>(p: T, nu: T) -> Result<T> {
    check_df(nu)?;
    if !(p > T::zero() && p < T::one()) {
        return Err(FabError::domain("t quantile probability", p.as_f64()));
    }
    if nu.is_infinite() {
        return std_normal_quantile(p);
    }
    let half = c::<T>(0.5);
    if p == half {
        return Ok(T::zero());
    }
    if p > half {
        return Ok(-t_quantile_lower(T::one() - p, nu)?);
    }
    t_quantile_lower(p, nu)
}

/// Quantile for `p < 1/2` (negative result).
fn t_quantile_lower<T: Real>(p: T, nu: T) -> Result<T> {
    if nu == T::one() {
        return Ok(-(T::PI() * p).tan().recip());
    }
    if nu == c(2.0) {
        let two_p = p + p;
        return Ok((two_p - T::one()) / (two_p * (T::one() - p)).sqrt());
    }
    let z = std_normal_quantile(p)?;
    // Cornish–Fisher expansion in 1/nu
    let z2 = z * z;
    let g1 = (z2 + T::one()) * z / c(4.0);
    let g2 = ((c::<T>(5.0) * z2 + c(16.0)) * z2 + c(3.0)) * z / c(96.0);
    let g3 = (((c::<T>(3.0) * z2 + c(19.0)) * z2 + c(17.0)) * z2 - c(15.0)) * z / c(384.0);
    let mut x = z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu);
    // Heavy-tail start when the expansion is unreliable: F(t) ≈ K |t|^{-nu}.
    if !(x < T::zero()) || (nu < c(5.0) && p < c(1e-3)) {
        // K = nu^{nu/2 - 1} / B(nu/2, 1/2)
        let ln_k = (c::<T>(0.5) * nu - T::one()) * nu.ln() - ln_beta(c::<T>(0.5) * nu, c(0.5));
        x = -((ln_k - p.ln()) / nu).exp();
    }

    let f = |t: T| -> Result<T> { t_tail(t, nu) };
    let ln_p = p.ln();
    let mut hi = T::zero();
    let mut lo = x.min(-T::one());
    let mut k = 0;
    while f(lo)? > p {
        hi = lo;
        lo = lo * c(2.0);
        k += 1;
        if k > 1100 {
            return Err(FabError::Convergence {
                what: "t quantile bracket",
                iterations: k,
                residual: lo.as_f64(),
            });
        }
    }
    if !(x > lo && x < hi) {
        x = (lo + hi) * c(0.5);
    }
    for _ in 0..200 {
        let fx = f(x)?;
        if fx == p {
            return Ok(x);
        }
        if fx < p {
            lo = x;
        } else {
            hi = x;
        }
        let dens = t_pdf(x, nu)?;
        // Newton on ln F(t) - ln p
        let mut next = if fx > T::zero() && dens > T::zero() {
            x - (fx.ln() - ln_p) * fx / dens
        } else {
            T::nan()
        };
        if !(next > lo && next < hi) {
            next = if lo < -T::one() && hi < -T::one() {
                -((lo * hi).sqrt())
            } else {
                (lo + hi) * c(0.5)
            };
        }
        let scale = next.abs().max(T::one());
        if (next - x).abs() <= scale * T::epsilon() * c(4.0)
            || (hi - lo).abs() <= scale * T::epsilon() * c(4.0)
        {
            return Ok(next);
        }
        x = next;
    }
    Err(FabError::Convergence {
        what: "t quantile",
        iterations: 200,
        residual: (hi - lo).as_f64(),
    })
}

/// Quantile of a t law extended to the closed unit interval.
pub(crate) fn t_quantile_ext<T: Real>(p: T, nu: T) -> Result<T> {
    if p <= T::zero() {
        Ok(T::neg_infinity())
    } else if p >= T::one() {
        Ok(T::infinity())
    } else {
        t_quantile(p, nu)
    }
}

/// Noncentral t CDF `Pr(T ≤ x)` for `T = (Z + λ) / √(V/ν)`, default accuracy.
pub fn noncentral_t_cdf<T: Real>(x: T, nu: T, lambda: T) -> Result<T> {
    noncentral_t_cdf_with(x, nu, lambda, &DistAccuracy::default())
}

/// Noncentral t CDF by the Poisson-mixture series, summed outward from the
/// Poisson mode with incomplete-beta recurrences in both directions.
pub fn noncentral_t_cdf_with<T: Real>(x: T, nu: T, lambda: T, acc: &DistAccuracy) -> Result<T> {
    check_df(nu)?;
    acc.validate()?;
    if x.is_nan() || !lambda.is_finite() {
        return Err(FabError::domain("noncentral t argument", x.as_f64()));
    }
    if x.is_infinite() {
        return Ok(if x > T::zero() { T::one() } else { T::zero() });
    }
    let v = if x < T::zero() {
        T::one() - nct_nonneg(-x, nu, -lambda, acc)?
    } else {
        nct_nonneg(x, nu, lambda, acc)?
    };
    Ok(v.max(T::zero()).min(T::one()))
}

fn nct_nonneg<T: Real>(t: T, nu: T, del: T, acc: &DistAccuracy) -> Result<T> {
    let base = std_normal_cdf(-del);
    if t == T::zero() {
        return Ok(base);
    }
    let half = c::<T>(0.5);
    let t2 = t * t;
    let x = t2 / (t2 + nu);
    let y = nu / (t2 + nu);
    let b = nu * half;
    let lam = del * del * half;
    let errmax = c::<T>(acc.abs_tol * 1e-2);
    let coef = del / T::SQRT_2();

    // Poisson weights p_k = e^{-lam} lam^k / k!, q_k = e^{-lam} lam^k / Γ(k + 3/2)
    let k0 = lam.floor();
    let (p0, q0) = if lam > T::zero() {
        let ln_common = -lam + k0 * lam.ln();
        (
            (ln_common - crate::special::ln_gamma(k0 + T::one())).exp(),
            (ln_common - crate::special::ln_gamma(k0 + c(1.5))).exp(),
        )
    } else {
        (T::one(), T::one() / crate::special::ln_gamma(c::<T>(1.5)).exp())
    };
    let a_p = k0 + half;
    let a_q = k0 + T::one();
    let (ip0, _) = inc_beta_pair(a_p, b, x, y)?;
    let (iq0, _) = inc_beta_pair(a_q, b, x, y)?;
    // g_a = x^a y^b / (a B(a, b)) so that I_x(a + 1, b) = I_x(a, b) - g_a
    let gp0 = beta_front(a_p, b, x, y);
    let gq0 = beta_front(a_q, b, x, y);

    let mut sum = p0 * ip0 + coef * q0 * iq0;
    let mut mass = p0;

    // backward toward k = 0
    {
        let (mut p, mut q, mut ip, mut iq) = (p0, q0, ip0, iq0);
        let (mut gp, mut gq) = (gp0, gq0);
        let mut k = k0;
        while k > T::zero() {
            // g_{a-1} = g_a (a) / (x (a - 1 + b))  ->  I(a-1) = I(a) + g_{a-1}
            let ap = k + half;
            let aq = k + T::one();
            gp = gp * ap / (x * (ap - T::one() + b));
            gq = gq * aq / (x * (aq - T::one() + b));
            ip = ip + gp;
            iq = iq + gq;
            p = p * k / lam;
            q = q * (k + half) / lam;
            k -= T::one();
            sum += p * ip + coef * q * iq;
            mass += p;
            if p * (T::one() + coef.abs()) < errmax * c(1e-2) && k < k0 - c(5.0) {
                break;
            }
        }
    }

    // forward
    let (mut p, mut q, mut ip, mut iq) = (p0, q0, ip0, iq0);
    let (mut gp, mut gq) = (gp0, gq0);
    let mut k = k0;
    let mut iter = 0usize;
    loop {
        let ap = k + half;
        let aq = k + T::one();
        ip = ip - gp;
        iq = iq - gq;
        gp = gp * x * (ap + b) / (ap + T::one());
        gq = gq * x * (aq + b) / (aq + T::one());
        k += T::one();
        p = p * lam / k;
        q = q * lam / (k + half);
        sum += p * ip + coef * q * iq;
        mass += p;
        let remaining = (T::one() - mass).max(T::zero());
        let bound = remaining * (ip.max(T::zero()) + c::<T>(1.2) * coef.abs() * iq.max(T::zero()));
        iter += 1;
        if bound < errmax || (p == T::zero() && k > lam) {
            break;
        }
        if iter >= acc.max_iter {
            return Err(FabError::Convergence {
                what: "noncentral t series",
                iterations: iter,
                residual: bound.as_f64(),
            });
        }
    }
    Ok(base + sum * half)
}

/// Quantile of σ² when `1/σ² ~ gamma(a, b)` (shape `a`, rate `b`).
///
/// Orientation: the returned value increases with `u`, i.e. it solves
/// `Pr(Σ² ≤ σ²) = u`.
pub fn inv_gamma_sigma2_quantile<T: Real>(u: T, a: T, b: T) -> Result<T> {
    if !(u > T::zero() && u < T::one()) {
        return Err(FabError::domain("inverse-gamma quantile probability", u.as_f64()));
    }
    inv_gamma_sigma2_quantile_pair(u, T::one() - u, a, b)
}

/// As [`inv_gamma_sigma2_quantile`] but with the complement `1 - u` supplied
/// separately, so both extreme tails stay accurate.
pub fn inv_gamma_sigma2_quantile_pair<T: Real>(u: T, u_c: T, a: T, b: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(FabError::domain("inverse-gamma shape", a.as_f64()));
    }
    if !(b > T::zero()) || !b.is_finite() {
        return Err(FabError::domain("inverse-gamma rate", b.as_f64()));
    }
    if !(u > T::zero() && u_c > T::zero()) {
        return Err(FabError::domain("inverse-gamma quantile probability", u.as_f64()));
    }
    // Pr(Σ² ≤ s) = Q(a, b/s): the upper gamma tail at b/s equals u.
    let x = gamma_quantile(a, u_c, u)?;
    Ok(b / x)
}

/// Chi-square quantile with `k` degrees of freedom; `p` and `q = 1 - p` given separately.
pub fn chi_square_quantile_pair<T: Real>(p: T, q: T, k: T) -> Result<T> {
    check_df(k)?;
    Ok(gamma_quantile(k * c(0.5), p, q)? * c(2.0))
}

/// Upper tail `Pr(F > x)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf<T: Real>(x: T, d1: T, d2: T) -> Result<T> {
    check_df(d1)?;
    check_df(d2)?;
    if x <= T::zero() {
        return Ok(T::one());
    }
    let denom = d1 * x + d2;
    let (_, upper) = inc_beta_pair(d1 * c(0.5), d2 * c(0.5), d1 * x / denom, d2 / denom)?;
    Ok(upper)
}
