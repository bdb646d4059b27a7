//! Quasi-Newton minimisation (BFGS with inverse-Hessian updates and an
//! Armijo backtracking line search).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Relative change in the objective between iterations.
    pub f_rel_tol: f64,
    /// Step size relative to `1 + |x|`.
    pub x_tol: f64,
    /// Infinity norm of the gradient.
    pub grad_tol: f64,
    pub max_evals: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            f_rel_tol: 1e-10,
            x_tol: 1e-8,
            grad_tol: 1e-7,
            max_evals: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub message: String,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimises `f`, which returns the objective and writes the gradient into
/// its second argument. Non-finite objective values count as `+inf`.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut evals = 1;
    let mut fx = f(&x, &mut g);
    if n == 0 {
        return OptimResult {
            x,
            f: fx,
            iterations: 0,
            evaluations: evals,
            converged: true,
            message: "no free parameters".into(),
        };
    }
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return OptimResult {
            x,
            f: fx,
            iterations: 0,
            evaluations: evals,
            converged: false,
            message: "objective not finite at start".into(),
        };
    }

    let identity = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    let mut h = vec![0.0; n * n];
    identity(&mut h, 1.0);
    let mut first_update = true;
    let mut resets = 0;

    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut iterations = 0;

    loop {
        if inf_norm(&g) <= opts.grad_tol {
            return done(x, fx, iterations, evals, true, "gradient tolerance reached");
        }
        if evals >= opts.max_evals {
            return done(x, fx, iterations, evals, false, "evaluation limit reached");
        }
        iterations += 1;

        for i in 0..n {
            dir[i] = -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 || !slope.is_finite() {
            identity(&mut h, 1.0);
            first_update = true;
            for i in 0..n {
                dir[i] = -g[i];
            }
            slope = dot(&dir, &g);
        }
        // keep the trial step bounded on the very first iterations
        let dnorm = inf_norm(&dir);
        let mut step = if first_update && dnorm > 1.0 {
            1.0 / dnorm
        } else {
            1.0
        };

        let mut accepted = false;
        let mut fnew = f64::INFINITY;
        while evals < opts.max_evals {
            for i in 0..n {
                xn[i] = x[i] + step * dir[i];
            }
            evals += 1;
            fnew = f(&xn, &mut gn);
            if fnew.is_finite()
                && gn.iter().all(|v| v.is_finite())
                && fnew <= fx + 1e-4 * step * slope
            {
                accepted = true;
                break;
            }
            step *= 0.5;
            if step * dnorm < 1e-16 {
                break;
            }
        }
        if !accepted {
            if resets == 0 {
                resets += 1;
                identity(&mut h, 1.0);
                first_update = true;
                continue;
            }
            let ok = inf_norm(&g) <= 1e-4;
            return done(x, fx, iterations, evals, ok, "line search failed");
        }

        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let f_change = (fx - fnew).abs();
        let step_small = s
            .iter()
            .zip(&x)
            .all(|(si, xi)| si.abs() <= opts.x_tol * (1.0 + xi.abs()));
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        let f_old = fx;
        fx = fnew;

        if f_change <= opts.f_rel_tol * (f_old.abs() + 1e-12)
            && (step_small || inf_norm(&g) <= 1e-5)
        {
            return done(
                x,
                fx,
                iterations,
                evals,
                true,
                "relative function tolerance reached",
            );
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first_update {
                identity(&mut h, sy / dot(&y, &y));
                first_update = false;
            }
            let rho = 1.0 / sy;
            // hy = H y
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
}

fn done(
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    msg: &str,
) -> OptimResult {
    OptimResult {
        x,
        f,
        iterations,
        evaluations,
        converged,
        message: msg.to_string(),
    }
}
