//! Small dense quasi-Newton minimizer used by the hyperparameter fits.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the infinity norm of the gradient drops below this.
    pub grad_tol: f64,
    /// Stop when a step improves the objective by less than this (relative).
    pub f_rel_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-8,
            f_rel_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step; nonincreasing.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// BFGS with Armijo backtracking. `fg` returns the objective and its gradient;
/// non-finite objective values are treated as infeasible and backtracked from.
pub fn bfgs<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut h = identity(n);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= opts.grad_tol;
    while !converged && iterations < opts.max_iter && f.is_finite() {
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            h = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = fg(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // no descent possible along any tried step: treat as stationary
            converged = inf_norm(&g) <= opts.grad_tol.sqrt();
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let improvement = f - fn_;
        x = xn;
        g = gn;
        let f_prev = f;
        f = fn_;
        trace.push(f);
        if sy > 1e-300 {
            update_inverse_hessian(&mut h, &s, &y, sy);
        }
        if inf_norm(&g) <= opts.grad_tol {
            converged = true;
        } else if improvement <= opts.f_rel_tol * f_prev.abs().max(1.0) {
            converged = inf_norm(&g) <= opts.grad_tol.sqrt();
            break;
        }
    }
    BfgsResult {
        x,
        f,
        grad: g,
        iterations,
        converged,
        trace,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let r = bfgs(fg, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
