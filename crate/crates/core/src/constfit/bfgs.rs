//! Quasi-Newton minimisation with central-difference gradients.

#[derive(Clone, Copy, Debug)]
pub struct BfgsSettings {
    pub max_iter: usize,
    /// Stop when the gradient norm drops below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        BfgsSettings {
            max_iter: 200,
            grad_tol: 1e-8,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], g: &mut [f64], work: &mut Vec<f64>) {
    work.clear();
    work.extend_from_slice(x);
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        work[i] = x[i] + h;
        let fp = f(work);
        work[i] = x[i] - h;
        let fm = f(work);
        work[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f` from `x0`. The objective must return a finite value
/// everywhere it is probed (callers map invalid regions to a penalty).
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], s: &BfgsSettings) -> BfgsOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 || !fx.is_finite() {
        return BfgsOutcome {
            x,
            f: fx,
            iterations: 0,
            converged: n == 0,
        };
    }
    let mut work = Vec::with_capacity(n);
    let mut g = vec![0.0; n];
    gradient(&mut f, &x, &mut g, &mut work);
    // inverse Hessian approximation, row-major
    let mut hinv = vec![0.0; n * n];
    for i in 0..n {
        hinv[i * n + i] = 1.0;
    }
    let mut first_update = true;
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut s_vec = vec![0.0; n];
    let mut y_vec = vec![0.0; n];
    let mut hy = vec![0.0; n];

    for iter in 0..s.max_iter {
        if fx == 0.0 || dot(&g, &g).sqrt() < s.grad_tol {
            return BfgsOutcome {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            };
        }
        for i in 0..n {
            dir[i] = -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // lost descent: restart from steepest descent
            for i in 0..n {
                dir[i] = -g[i];
                for j in 0..n {
                    hinv[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            first_update = true;
            slope = -dot(&g, &g);
        }

        // backtracking Armijo line search
        let mut step = 1.0;
        let mut f_new = f64::INFINITY;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = f(&x_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return BfgsOutcome {
                x,
                f: fx,
                iterations: iter,
                converged: false,
            };
        }

        gradient(&mut f, &x_new, &mut g_new, &mut work);
        for i in 0..n {
            s_vec[i] = x_new[i] - x[i];
            y_vec[i] = g_new[i] - g[i];
        }
        let rel_change = (fx - f_new).abs() / fx.abs().max(f64::MIN_POSITIVE);
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;
        if rel_change < s.rel_tol {
            return BfgsOutcome {
                x,
                f: fx,
                iterations: iter + 1,
                converged: true,
            };
        }

        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-300 {
            if first_update {
                let scale = sy / dot(&y_vec, &y_vec);
                for i in 0..n {
                    for j in 0..n {
                        hinv[i * n + j] = if i == j { scale } else { 0.0 };
                    }
                }
                first_update = false;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            for i in 0..n {
                hy[i] = (0..n).map(|j| hinv[i * n + j] * y_vec[j]).sum();
            }
            let yhy = dot(&y_vec, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] +=
                        -rho * (hy[i] * s_vec[j] + s_vec[i] * hy[j]) + (rho * rho * yhy + rho) * s_vec[i] * s_vec[j];
                }
            }
        }
    }
    BfgsOutcome {
        x,
        f: fx,
        iterations: s.max_iter,
        converged: false,
    }
}
