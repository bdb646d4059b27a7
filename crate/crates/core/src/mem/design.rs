//! Likelihood engine shared by the univariate and equation-by-equation
//! multivariate models.
//!
//! A [`Design`] holds one observed series `x_t` and a row of regressors per
//! period. The log conditional mean is
//!
//! ```text
//! log mu_t = omega + z_t . c + sum_j beta_j log mu_{t-j}      (t >= burn)
//! log mu_t = 0                                                 (t <  burn)
//! ```
//!
//! and the innovations follow a zero-augmented log-normal with unit mean.
//! Parameter vectors are laid out as `[omega, c_1..c_R, beta_1..beta_q, s]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::MemError;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Condition number above which a Hessian is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Design {
    pub y: Vec<f64>,
    log_y: Vec<f64>,
    /// Row-major `T x n_reg` regressors; row t enters `log mu_t`.
    pub z: Vec<f64>,
    pub n_reg: usize,
    pub q: usize,
    pub burn: usize,
    pub p_plus: f64,
    pub names: Vec<String>,
}

impl Design {
    pub fn new(
        y: Vec<f64>,
        z: Vec<f64>,
        reg_names: Vec<String>,
        q: usize,
        burn: usize,
        p_plus: f64,
    ) -> Result<Self, MemError> {
        let n_reg = reg_names.len();
        if z.len() != y.len() * n_reg {
            return Err(MemError::Shape(format!(
                "regressor matrix has {} entries, expected {} x {}",
                z.len(),
                y.len(),
                n_reg
            )));
        }
        if burn < q || y.len() <= burn {
            return Err(MemError::TooShort {
                len: y.len(),
                need: burn + 1,
            });
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(MemError::NonFinite { index: t });
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(MemError::NonFinite {
                index: i / n_reg.max(1),
            });
        }
        if !(p_plus > 0.0 && p_plus <= 1.0) {
            return Err(MemError::Domain(format!(
                "p_plus must lie in (0, 1], got {p_plus}"
            )));
        }
        if p_plus >= 1.0 {
            if let Some(t) = (burn..y.len()).find(|&t| y[t] == 0.0) {
                return Err(MemError::ZeroWithFullMass { index: t });
            }
        }
        let log_y = y
            .iter()
            .map(|&v| if v > 0.0 { v.ln() } else { 0.0 })
            .collect();
        let mut names = Vec::with_capacity(n_reg + q + 2);
        names.push("omega".to_string());
        names.extend(reg_names);
        names.extend((1..=q).map(|j| format!("beta_{j}")));
        names.push("s".to_string());
        Ok(Self {
            y,
            log_y,
            z,
            n_reg,
            q,
            burn,
            p_plus,
            names,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.n_reg + self.q + 2
    }

    /// Number of likelihood terms.
    pub fn n_obs(&self) -> usize {
        self.y.len() - self.burn
    }

    pub fn s_index(&self) -> usize {
        self.n_reg + self.q + 1
    }

    pub fn beta_range(&self) -> std::ops::Range<usize> {
        1 + self.n_reg..1 + self.n_reg + self.q
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.z[t * self.n_reg..(t + 1) * self.n_reg]
    }

    /// Log conditional means.
    pub fn filter(&self, theta: &[f64]) -> Vec<f64> {
        let r = self.n_reg;
        let coef = &theta[1..1 + r];
        let beta = &theta[1 + r..1 + r + self.q];
        let mut lm = vec![0.0; self.y.len()];
        for t in self.burn..self.y.len() {
            let mut v = theta[0];
            for (c, z) in coef.iter().zip(self.row(t)) {
                v += c * z;
            }
            for (j, b) in beta.iter().enumerate() {
                v += b * lm[t - 1 - j];
            }
            lm[t] = v;
        }
        lm
    }

    fn mean_shift(&self, s: f64) -> f64 {
        -0.5 * s * s - self.p_plus.ln()
    }

    /// Per-observation log-likelihood terms for `t >= burn`.
    pub fn contributions(&self, theta: &[f64]) -> Vec<f64> {
        let s = theta[self.s_index()];
        let lm = self.filter(theta);
        let m = self.mean_shift(s);
        let ln_p = self.p_plus.ln();
        let ln_zero = (1.0 - self.p_plus).ln();
        let c0 = ln_p - s.ln() - 0.5 * LN_2PI;
        (self.burn..self.y.len())
            .map(|t| {
                if self.y[t] > 0.0 {
                    let u = self.log_y[t] - lm[t] - m;
                    c0 - self.log_y[t] - u * u / (2.0 * s * s)
                } else {
                    ln_zero
                }
            })
            .collect()
    }

    pub fn loglik(&self, theta: &[f64]) -> f64 {
        if theta[self.s_index()] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.contributions(theta).iter().sum()
    }

    /// Total log-likelihood and its analytic gradient.
    pub fn loglik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let r = self.n_reg;
        let q = self.q;
        let np = self.n_params();
        let ns = np - 1; // derivatives of log mu exclude s
        let s = theta[self.s_index()];
        grad.iter_mut().for_each(|g| *g = 0.0);
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let coef = &theta[1..1 + r];
        let beta = &theta[1 + r..1 + r + q];
        let m = self.mean_shift(s);
        let ln_p = self.p_plus.ln();
        let ln_zero = (1.0 - self.p_plus).ln();
        let c0 = ln_p - s.ln() - 0.5 * LN_2PI;
        let inv_s2 = 1.0 / (s * s);

        let n = self.y.len();
        let mut lm = vec![0.0; n];
        // derivatives of log mu for the last q periods, ring buffer
        let mut dring = vec![0.0; (q.max(1)) * ns];
        let mut d = vec![0.0; ns];
        let mut ll = 0.0;
        for t in self.burn..n {
            let zt = self.row(t);
            let mut v = theta[0];
            for (c, z) in coef.iter().zip(zt) {
                v += c * z;
            }
            for (j, b) in beta.iter().enumerate() {
                v += b * lm[t - 1 - j];
            }
            lm[t] = v;

            d[0] = 1.0;
            d[1..1 + r].copy_from_slice(zt);
            for j in 0..q {
                d[1 + r + j] = lm[t - 1 - j];
            }
            for (j, b) in beta.iter().enumerate() {
                let slot = (t - 1 - j) % q;
                // periods before burn have zero derivative
                if t - 1 - j >= self.burn {
                    let prev = &dring[slot * ns..(slot + 1) * ns];
                    for k in 0..ns {
                        d[k] += b * prev[k];
                    }
                }
            }
            if q > 0 {
                let slot = t % q;
                dring[slot * ns..(slot + 1) * ns].copy_from_slice(&d);
            }

            if self.y[t] > 0.0 {
                let u = self.log_y[t] - v - m;
                ll += c0 - self.log_y[t] - 0.5 * u * u * inv_s2;
                let w = u * inv_s2;
                for k in 0..ns {
                    grad[k] += w * d[k];
                }
                grad[ns] += -1.0 / s - u / s + u * u / (s * s * s);
            } else {
                ll += ln_zero;
            }
        }
        ll
    }

    /// Sandwich covariance `H^-1 S H^-1 / n` over the free parameters, with
    /// per-observation scores and the Hessian of the mean log-likelihood
    /// both taken by central differences (step `1e-5 (1 + |theta|)`).
    pub fn robust_covariance(
        &self,
        theta: &[f64],
        free: &[bool],
    ) -> Result<DMatrix<f64>, MemError> {
        let idx: Vec<usize> = (0..theta.len()).filter(|&i| free[i]).collect();
        let k = idx.len();
        let n = self.n_obs();
        let nf = n as f64;
        let mut scores = DMatrix::<f64>::zeros(n, k);
        let mut hess = DMatrix::<f64>::zeros(k, k);
        let mut gp = vec![0.0; theta.len()];
        let mut gm = vec![0.0; theta.len()];
        for (col, &i) in idx.iter().enumerate() {
            let h = 1e-5 * (1.0 + theta[i].abs());
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let cp = self.contributions(&tp);
            let cm = self.contributions(&tm);
            for t in 0..n {
                scores[(t, col)] = (cp[t] - cm[t]) / (2.0 * h);
            }
            self.loglik_grad(&tp, &mut gp);
            self.loglik_grad(&tm, &mut gm);
            for (row, &j) in idx.iter().enumerate() {
                hess[(row, col)] = (gp[j] - gm[j]) / (2.0 * h) / nf;
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let outer = scores.transpose() * &scores / nf;

        let eig = SymmetricEigen::new(hess.clone());
        let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
        let max = abs.iter().cloned().fold(0.0, f64::max);
        let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition.is_finite() && condition < SINGULAR_CONDITION) {
            return Err(MemError::SingularHessian { condition });
        }
        let hinv = hess
            .try_inverse()
            .ok_or(MemError::SingularHessian { condition })?;
        Ok(&hinv * outer * &hinv / nf)
    }

    /// Linear-dependence check on the free regressor columns.
    pub fn collinearity(&self, free: &[bool]) -> Collinearity {
        let cols: Vec<usize> = (0..self.n_reg).filter(|&r| free[1 + r]).collect();
        let n = self.n_obs();
        let mut constant = Vec::new();
        let mut data: Vec<(usize, Vec<f64>)> = Vec::new();
        for &r in &cols {
            let col: Vec<f64> = (self.burn..self.y.len())
                .map(|t| self.z[t * self.n_reg + r])
                .collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let centred: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1e-12 * (1.0 + mean.abs()) * (n as f64).sqrt() {
                constant.push(self.names[1 + r].clone());
            } else {
                data.push((r, centred.into_iter().map(|v| v / norm).collect()));
            }
        }
        let m = data.len();
        let mut corr = DMatrix::<f64>::identity(m, m);
        let mut pairs = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                let c: f64 = data[a].1.iter().zip(&data[b].1).map(|(x, y)| x * y).sum();
                corr[(a, b)] = c;
                corr[(b, a)] = c;
                if c.abs() > 1.0 - 1e-8 {
                    pairs.push((
                        self.names[1 + data[a].0].clone(),
                        self.names[1 + data[b].0].clone(),
                    ));
                }
            }
        }
        let min_eigenvalue = if m > 0 {
            SymmetricEigen::new(corr)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        } else {
            1.0
        };
        Collinearity {
            collinear: !constant.is_empty() || !pairs.is_empty() || min_eigenvalue < 1e-10,
            min_eigenvalue,
            pairs,
            constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collinearity {
    pub collinear: bool,
    /// Smallest eigenvalue of the regressor correlation matrix.
    pub min_eigenvalue: f64,
    /// Column pairs with |correlation| indistinguishable from one.
    pub pairs: Vec<(String, String)>,
    /// Columns with no variation.
    pub constant: Vec<String>,
}
