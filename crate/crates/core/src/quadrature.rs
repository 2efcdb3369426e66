//! Fixed quadrature rules.

use crate::scalar::{c, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (
        nodes.into_iter().map(c).collect(),
        weights.into_iter().map(c).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A node of a rule on the open unit interval, carrying `1 - u` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitNode<T> {
    pub u: T,
    pub u_c: T,
    pub weight: T,
}

/// Double-exponential (tanh-sinh) rule on `(0, 1)`.
///
/// Nodes cluster at both ends, which suits integrands obtained by pushing a
/// heavy-tailed density through its quantile function.
pub fn tanh_sinh_unit<T: Real>(n: usize) -> Vec<UnitNode<T>> {
    assert!(n >= 2, "tanh-sinh rule needs at least two nodes");
    let t_max = 3.15f64;
    let h = 2.0 * t_max / (n - 1) as f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..n)
        .map(|k| {
            let t = -t_max + h * k as f64;
            let s = half_pi * t.sinh();
            let u = 1.0 / (1.0 + (-2.0 * s).exp());
            let u_c = 1.0 / (1.0 + (2.0 * s).exp());
            let cs = s.cosh();
            let weight = h * half_pi * t.cosh() / (2.0 * cs * cs);
            UnitNode {
                u: c(u),
                u_c: c(u_c),
                weight: c(weight),
            }
        })
        .collect()
}

/// Gauss–Legendre rule mapped to `(0, 1)`.
pub fn gauss_legendre_unit<T: Real>(n: usize) -> Vec<UnitNode<T>> {
    let (x, w) = gauss_legendre::<f64>(n);
    x.into_iter()
        .zip(w)
        .map(|(x, w)| UnitNode {
            u: c((1.0 + x) / 2.0),
            u_c: c((1.0 - x) / 2.0),
            weight: c(w / 2.0),
        })
        .collect()
}
