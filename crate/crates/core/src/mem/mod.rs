//! Univariate Logarithmic Multiplicative Error Model.
//!
//! `x_t = mu_t * eps_t` with a unit-mean zero-augmented log-normal `eps_t`
//! and
//!
//! ```text
//! log mu_t = omega + sum_j alpha_j log x_{t-j} 1{x_{t-j} > 0}
//!                  + sum_j alpha0_j 1{x_{t-j} = 0}
//!                  + gamma log x_{t-1}^-
//!                  + sum_j beta_j log mu_{t-j}
//! ```
//!
//! where `log x^-` equals `log x` when the interval's own return was
//! negative (and `x > 0`) and zero otherwise.

pub mod design;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{bfgs, OptimOptions};
use crate::stats;
pub use design::{Collinearity, Design};

/// Minimum series length accepted by [`fit_logmem`].
pub const MIN_FIT_LEN: usize = 500;

#[derive(Debug, Error)]
pub enum MemError {
    #[error("series of length {len} is too short (need at least {need})")]
    TooShort { len: usize, need: usize },
    #[error("non-finite or negative input at index {index}")]
    NonFinite { index: usize },
    #[error("observation {index} is zero but p_plus = 1 gives it zero probability")]
    ZeroWithFullMass { index: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("Hessian is singular (condition number {condition:e})")]
    SingularHessian { condition: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PPlusPolicy {
    #[default]
    Empirical,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemSpec {
    pub p: usize,
    pub q: usize,
    pub asymmetry: bool,
    pub zero_augmented: bool,
    pub p_plus_policy: PPlusPolicy,
}

impl Default for MemSpec {
    fn default() -> Self {
        Self {
            p: 1,
            q: 1,
            asymmetry: true,
            zero_augmented: true,
            p_plus_policy: PPlusPolicy::Empirical,
        }
    }
}

impl MemSpec {
    pub fn new(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            ..Self::default()
        }
    }

    pub fn burn(&self) -> usize {
        self.p.max(self.q)
    }

    pub fn validate(&self) -> Result<(), MemError> {
        if self.p == 0 || self.q == 0 {
            return Err(MemError::Domain(format!(
                "lag orders must be >= 1, got p={}, q={}",
                self.p, self.q
            )));
        }
        if let PPlusPolicy::Fixed(v) = self.p_plus_policy {
            if !(v > 0.0 && v <= 1.0) {
                return Err(MemError::Domain(format!("fixed p_plus {v} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// Resolved probability of a positive observation.
    pub fn p_plus_for(&self, x: &[f64]) -> f64 {
        match self.p_plus_policy {
            PPlusPolicy::Fixed(v) => v,
            PPlusPolicy::Empirical => {
                x.iter().filter(|v| **v > 0.0).count() as f64 / x.len().max(1) as f64
            }
        }
    }
}

/// A non-negative series together with its interval-return signs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MemData {
    pub x: Vec<f64>,
    pub neg_return: Vec<bool>,
}

impl MemData {
    pub fn new(x: Vec<f64>, neg_return: Vec<bool>) -> Self {
        Self { x, neg_return }
    }

    /// Series without return-sign information.
    pub fn positive_returns(x: Vec<f64>) -> Self {
        let n = x.len();
        Self {
            x,
            neg_return: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn log_pos(&self, t: usize) -> f64 {
        if self.x[t] > 0.0 {
            self.x[t].ln()
        } else {
            0.0
        }
    }

    pub fn log_neg(&self, t: usize) -> f64 {
        if self.neg_return[t] {
            self.log_pos(t)
        } else {
            0.0
        }
    }

    pub fn is_zero(&self, t: usize) -> bool {
        self.x[t] == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub gamma: f64,
    pub beta: Vec<f64>,
    pub s: f64,
    pub p_plus: f64,
}

impl ParamSet {
    pub fn logmem11(
        omega: f64,
        alpha: f64,
        alpha0: f64,
        gamma: f64,
        beta: f64,
        s: f64,
        p_plus: f64,
    ) -> Self {
        Self {
            omega,
            alpha: vec![alpha],
            alpha0: vec![alpha0],
            gamma,
            beta: vec![beta],
            s,
            p_plus,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), MemError> {
        if !(self.s > 0.0) {
            return Err(MemError::Domain(format!(
                "s must be positive, got {}",
                self.s
            )));
        }
        if !(self.p_plus > 0.0 && self.p_plus <= 1.0) {
            return Err(MemError::Domain(format!(
                "p_plus {} outside (0, 1]",
                self.p_plus
            )));
        }
        if self.alpha.len() != self.alpha0.len() || self.alpha.is_empty() || self.beta.is_empty() {
            return Err(MemError::Shape(
                "alpha, alpha0 and beta must be non-empty with matching p".into(),
            ));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.persistence() >= 1.0 {
            w.push(format!(
                "sum(alpha) + sum(beta) = {:.4} >= 1: non-stationary",
                self.persistence()
            ));
        }
        w
    }

    fn spec(&self) -> MemSpec {
        MemSpec {
            p: self.alpha.len(),
            q: self.beta.len(),
            asymmetry: true,
            zero_augmented: true,
            p_plus_policy: PPlusPolicy::Fixed(self.p_plus),
        }
    }

    fn to_theta(&self) -> Vec<f64> {
        let mut v = vec![self.omega];
        v.extend(&self.alpha);
        v.extend(&self.alpha0);
        v.push(self.gamma);
        v.extend(&self.beta);
        v.push(self.s);
        v
    }

    fn from_theta(theta: &[f64], p: usize, q: usize, p_plus: f64) -> Self {
        Self {
            omega: theta[0],
            alpha: theta[1..1 + p].to_vec(),
            alpha0: theta[1 + p..1 + 2 * p].to_vec(),
            gamma: theta[1 + 2 * p],
            beta: theta[2 + 2 * p..2 + 2 * p + q].to_vec(),
            s: theta[2 + 2 * p + q],
            p_plus,
        }
    }
}

/// Builds the univariate design with regressor columns
/// `alpha_1..p, alpha0_1..p, gamma`.
pub fn univariate_design(
    data: &MemData,
    p: usize,
    q: usize,
    p_plus: f64,
) -> Result<Design, MemError> {
    if data.neg_return.len() != data.x.len() {
        return Err(MemError::Shape("neg_return length differs from x".into()));
    }
    let n = data.len();
    let burn = p.max(q);
    if n <= burn {
        return Err(MemError::TooShort {
            len: n,
            need: burn + 1,
        });
    }
    if let Some(t) = data.x.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(MemError::NonFinite { index: t });
    }
    let r = 2 * p + 1;
    let mut z = vec![0.0; n * r];
    for t in burn..n {
        let row = &mut z[t * r..(t + 1) * r];
        for j in 1..=p {
            row[j - 1] = data.log_pos(t - j);
            row[p + j - 1] = if data.is_zero(t - j) { 1.0 } else { 0.0 };
        }
        row[2 * p] = data.log_neg(t - 1);
    }
    let mut names: Vec<String> = (1..=p).map(|j| format!("alpha_{j}")).collect();
    names.extend((1..=p).map(|j| format!("alpha0_{j}")));
    names.push("gamma".into());
    Design::new(data.x.clone(), z, names, q, burn, p_plus)
}

/// Conditional means `mu_t`; the first `max(p, q)` periods sit at 1.
pub fn logmem_filter(
    params: &ParamSet,
    data: &MemData,
    spec: &MemSpec,
) -> Result<Vec<f64>, MemError> {
    params.validate()?;
    let _ = spec;
    let ps = params.spec();
    let design = univariate_design_unchecked(data, ps.p, ps.q)?;
    Ok(design
        .filter(&params.to_theta())
        .into_iter()
        .map(f64::exp)
        .collect())
}

fn univariate_design_unchecked(data: &MemData, p: usize, q: usize) -> Result<Design, MemError> {
    // filtering never evaluates the density, so any admissible p_plus works
    univariate_design(data, p, q, 0.5)
}

/// Log density of the zero-augmented log-normal for `x = mu * eps`.
pub fn zaln_log_density(x: f64, mu: f64, s: f64, p_plus: f64) -> f64 {
    if x == 0.0 {
        return (1.0 - p_plus).ln();
    }
    let m = -0.5 * s * s - p_plus.ln();
    let u = (x / mu).ln() - m;
    p_plus.ln() - x.ln() - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - u * u / (2.0 * s * s)
}

/// Sum of log densities over `t >= burn`.
pub fn zaln_loglik(
    x: &[f64],
    mu: &[f64],
    s: f64,
    p_plus: f64,
    burn: usize,
) -> Result<f64, MemError> {
    if !(s > 0.0) {
        return Err(MemError::Domain(format!("s must be positive, got {s}")));
    }
    if !(p_plus > 0.0 && p_plus <= 1.0) {
        return Err(MemError::Domain(format!("p_plus {p_plus} outside (0, 1]")));
    }
    if x.len() != mu.len() {
        return Err(MemError::Shape("x and mu lengths differ".into()));
    }
    let mut total = 0.0;
    for t in burn..x.len() {
        if !(mu[t] > 0.0) {
            return Err(MemError::Domain(format!(
                "mu[{t}] = {} is not positive",
                mu[t]
            )));
        }
        if x[t] == 0.0 && p_plus >= 1.0 {
            return Err(MemError::ZeroWithFullMass { index: t });
        }
        total += zaln_log_density(x[t], mu[t], s, p_plus);
    }
    Ok(total)
}

/// `k ln(T) - 2 LL`.
pub fn bic(loglik: f64, k: usize, t: usize) -> f64 {
    k as f64 * (t as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "minutes", rename_all = "snake_case")]
pub enum HalfLife {
    Finite(f64),
    NonStationary,
}

/// Minutes for the log conditional mean's deviation to halve:
/// `interval_minutes * log(0.5) / log(alpha + beta)`.
pub fn half_life(
    alpha_sum: f64,
    beta_sum: f64,
    interval_minutes: f64,
) -> Result<HalfLife, MemError> {
    let rho = alpha_sum + beta_sum;
    if !rho.is_finite() || rho <= 0.0 {
        return Err(MemError::Domain(format!(
            "persistence {rho} must be positive"
        )));
    }
    if rho >= 1.0 {
        return Ok(HalfLife::NonStationary);
    }
    Ok(HalfLife::Finite(interval_minutes * 0.5f64.ln() / rho.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of starting points, the first being the fixed default.
    pub starts: usize,
    pub seed: u64,
    pub optim: OptimOptions,
    /// Compute sandwich standard errors.
    pub standard_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 3,
            seed: 0x5eed,
            optim: OptimOptions::default(),
            standard_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignFit {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub message: String,
}

/// Maximises the design's log-likelihood over the `free` entries of `start`
/// (multi-start, best optimum kept). `s` is optimised on the log scale.
pub fn fit_design(design: &Design, start: &[f64], free: &[bool], opts: &FitOptions) -> DesignFit {
    let si = design.s_index();
    let idx: Vec<usize> = (0..start.len()).filter(|&i| free[i]).collect();
    let n_obs = design.n_obs() as f64;
    let to_natural = |u: &[f64]| {
        let mut th = start.to_vec();
        for (k, &i) in idx.iter().enumerate() {
            th[i] = if i == si { u[k].exp() } else { u[k] };
        }
        th
    };
    let mut full_grad = vec![0.0; start.len()];
    let mut objective = |u: &[f64], g: &mut [f64]| -> f64 {
        let th = to_natural(u);
        let ll = design.loglik_grad(&th, &mut full_grad);
        for (k, &i) in idx.iter().enumerate() {
            let gi = if i == si {
                full_grad[i] * th[i]
            } else {
                full_grad[i]
            };
            g[k] = -gi / n_obs;
        }
        let f = -ll / n_obs;
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    };

    let u0: Vec<f64> = idx
        .iter()
        .map(|&i| if i == si { start[i].ln() } else { start[i] })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<DesignFit> = None;
    let mut total_evals = 0;
    let mut total_iters = 0;
    for k in 0..opts.starts.max(1) {
        let u_start: Vec<f64> = if k == 0 {
            u0.clone()
        } else {
            u0.iter()
                .map(|v| {
                    let e: f64 = rng.sample(StandardNormal);
                    v + 0.05 * e
                })
                .collect()
        };
        let r = bfgs(&mut objective, &u_start, &opts.optim);
        total_evals += r.evaluations;
        total_iters += r.iterations;
        let cand = DesignFit {
            theta: to_natural(&r.x),
            loglik: -r.f * n_obs,
            converged: r.converged,
            iterations: r.iterations,
            evaluations: r.evaluations,
            message: r.message,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let (cl, bl) = (cand.loglik, b.loglik);
                (cand.converged && !b.converged && cl.is_finite())
                    || (cand.converged == b.converged && cl > bl)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total_iters;
    best.evaluations = total_evals;
    best
}

/// One estimated coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub free: bool,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub pvalue: Option<f64>,
}

/// Sandwich standard errors for the free entries of `theta` (NaN elsewhere).
pub fn robust_se(design: &Design, theta: &[f64], free: &[bool]) -> Result<Vec<f64>, MemError> {
    let cov = design.robust_covariance(theta, free)?;
    let mut out = vec![f64::NAN; theta.len()];
    let mut k = 0;
    for i in 0..theta.len() {
        if free[i] {
            out[i] = cov[(k, k)].max(0.0).sqrt();
            k += 1;
        }
    }
    Ok(out)
}

pub(crate) fn estimates_from(
    names: &[String],
    theta: &[f64],
    free: &[bool],
    se: Option<&[f64]>,
) -> Vec<Estimate> {
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let se_i = se
                .map(|v| v[i])
                .filter(|v| free[i] && v.is_finite() && *v > 0.0);
            let z = se_i.map(|s| theta[i] / s);
            Estimate {
                name: name.clone(),
                value: theta[i],
                free: free[i],
                se: se_i,
                z,
                pvalue: z.map(stats::two_sided_pvalue),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema_version: String,
    pub spec: MemSpec,
    pub params: ParamSet,
    pub estimates: Vec<Estimate>,
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub half_life_minutes: Option<f64>,
    pub stationary: bool,
    pub converged: bool,
    pub unidentified: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Default starting point: omega 0, alpha 0.2/p, alpha0 0, gamma 0,
/// beta 0.6/q, s the sd of the logs of the positive data.
pub fn default_start(data: &MemData, p: usize, q: usize) -> ParamSet {
    let logs: Vec<f64> = data
        .x
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| v.ln())
        .collect();
    ParamSet {
        omega: 0.0,
        alpha: vec![0.2 / p as f64; p],
        alpha0: vec![0.0; p],
        gamma: 0.0,
        beta: vec![0.6 / q as f64; q],
        s: stats::std_dev(&logs),
        p_plus: 1.0,
    }
}

/// Quasi-maximum-likelihood fit of a univariate LogMEM(p, q).
///
/// `alpha0` is estimated only when the model is zero-augmented and a zero
/// occurs among the lagged observations, and `gamma` only with asymmetry
/// enabled and at least one negative-return interval; otherwise they stay
/// fixed at zero and do not count towards the BIC penalty.
pub fn fit_logmem(
    data: &MemData,
    spec: &MemSpec,
    opts: &FitOptions,
) -> Result<FitResult, MemError> {
    spec.validate()?;
    if data.len() < MIN_FIT_LEN {
        return Err(MemError::TooShort {
            len: data.len(),
            need: MIN_FIT_LEN,
        });
    }
    let (p, q) = (spec.p, spec.q);
    let p_plus = spec.p_plus_for(&data.x);
    let design = univariate_design(data, p, q, p_plus)?;
    let mut start = default_start(data, p, q);
    start.p_plus = p_plus;
    let theta0 = start.to_theta();

    let mut free = vec![true; theta0.len()];
    let any_zero_lag = data.x[..data.len() - 1].contains(&0.0);
    for j in 0..p {
        free[1 + p + j] = spec.zero_augmented && any_zero_lag;
    }
    let gamma_col = 2 * p;
    let gamma_active = (0..design.len()).any(|t| design.z[t * design.n_reg + gamma_col] != 0.0);
    free[1 + 2 * p] = spec.asymmetry && gamma_active;

    let mut warnings = Vec::new();
    // variation below rounding noise of the logs counts as none
    let log_scale = data
        .x
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| v.ln().abs())
        .fold(0.0, f64::max);
    let unidentified = !start.s.is_finite() || start.s <= 1e-12 * (1.0 + log_scale);
    if unidentified {
        warnings.push("data carry no variation in logs; model unidentified".into());
        let k = free.iter().filter(|f| **f).count();
        return Ok(FitResult {
            schema_version: crate::SCHEMA_VERSION.into(),
            spec: *spec,
            params: start,
            estimates: estimates_from(&design.names, &theta0, &free, None),
            loglik: f64::NAN,
            bic: f64::NAN,
            n_params: k,
            n_obs: design.n_obs(),
            half_life_minutes: None,
            stationary: false,
            converged: false,
            unidentified: true,
            iterations: 0,
            evaluations: 0,
            warnings,
        });
    }

    let fit = fit_design(&design, &theta0, &free, opts);
    if !fit.converged {
        warnings.push(format!("optimizer did not converge: {}", fit.message));
    }
    let se = if opts.standard_errors {
        match robust_se(&design, &fit.theta, &free) {
            Ok(se) => Some(se),
            Err(e) => {
                warnings.push(format!("standard errors unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    let params = ParamSet::from_theta(&fit.theta, p, q, p_plus);
    warnings.extend(params.warnings());
    let k = free.iter().filter(|f| **f).count();
    let hl = half_life(params.alpha.iter().sum(), params.beta.iter().sum(), 5.0).ok();
    Ok(FitResult {
        schema_version: crate::SCHEMA_VERSION.into(),
        spec: *spec,
        estimates: estimates_from(&design.names, &fit.theta, &free, se.as_deref()),
        loglik: fit.loglik,
        bic: bic(fit.loglik, k, design.n_obs()),
        n_params: k,
        n_obs: design.n_obs(),
        half_life_minutes: match hl {
            Some(HalfLife::Finite(m)) => Some(m),
            _ => None,
        },
        stationary: params.persistence() < 1.0,
        params,
        converged: fit.converged,
        unidentified: false,
        iterations: fit.iterations,
        evaluations: fit.evaluations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm11(alpha: f64, alpha0: f64, beta: f64) -> ParamSet {
        ParamSet::logmem11(0.0, alpha, alpha0, 0.0, beta, 0.3, 0.9)
    }

    #[test]
    fn filter_fixed_point() {
        let d = MemData::positive_returns(vec![1.0, 1.0]);
        let mu = logmem_filter(&lm11(0.4, 0.0, 0.5), &d, &MemSpec::default()).unwrap();
        assert_eq!(mu, vec![1.0, 1.0]);
    }

    #[test]
    fn filter_one_step() {
        let d = MemData::positive_returns(vec![std::f64::consts::E, 1.0]);
        let mu = logmem_filter(&lm11(0.4, 0.0, 0.5), &d, &MemSpec::default()).unwrap();
        assert!((mu[1].ln() - 0.4).abs() < 1e-15);
        assert!((mu[1] - 1.4918).abs() < 1e-4);
    }

    #[test]
    fn filter_zero_branch() {
        let d = MemData::positive_returns(vec![0.0, 1.0]);
        let mu = logmem_filter(&lm11(0.4, -0.2, 0.5), &d, &MemSpec::default()).unwrap();
        assert!((mu[1].ln() + 0.2).abs() < 1e-15);
        assert!((mu[1] - 0.8187).abs() < 1e-4);
    }

    #[test]
    fn filter_asymmetry_uses_own_sign() {
        let e = std::f64::consts::E;
        let mut p = lm11(0.4, 0.0, 0.5);
        p.gamma = 0.1;
        let up = logmem_filter(
            &p,
            &MemData::new(vec![e, 1.0], vec![false, false]),
            &MemSpec::default(),
        )
        .unwrap();
        let down = logmem_filter(
            &p,
            &MemData::new(vec![e, 1.0], vec![true, false]),
            &MemSpec::default(),
        )
        .unwrap();
        assert!((up[1].ln() - 0.4).abs() < 1e-15);
        assert!((down[1].ln() - 0.5).abs() < 1e-15);
        // zero observation with a negative return adds nothing beyond alpha0
        let z = logmem_filter(
            &p,
            &MemData::new(vec![0.0, 1.0], vec![true, false]),
            &MemSpec::default(),
        )
        .unwrap();
        assert_eq!(z[1], 1.0);
    }

    #[test]
    fn filter_rejects_non_finite() {
        let d = MemData::positive_returns(vec![1.0, f64::INFINITY, 1.0]);
        assert!(matches!(
            logmem_filter(&lm11(0.4, 0.0, 0.5), &d, &MemSpec::default()),
            Err(MemError::NonFinite { index: 1 })
        ));
        let short = MemData::positive_returns(vec![1.0]);
        assert!(logmem_filter(&lm11(0.4, 0.0, 0.5), &short, &MemSpec::default()).is_err());
    }

    #[test]
    fn filter_is_bit_deterministic() {
        let x: Vec<f64> = (0..1000).map(|i| (i * 37 % 101) as f64 / 50.0).collect();
        let d = MemData::new(x, (0..1000).map(|i| i % 3 == 0).collect());
        let mut p = lm11(0.35, -0.1, 0.55);
        p.gamma = 0.03;
        let a = logmem_filter(&p, &d, &MemSpec::default()).unwrap();
        let b = logmem_filter(&p, &d, &MemSpec::default()).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        assert!(a.iter().all(|m| *m > 0.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn zaln_point_mass() {
        assert!((zaln_log_density(0.0, 1.0, 0.3, 0.9) - 0.1f64.ln()).abs() < 1e-15);
        assert!((zaln_log_density(0.0, 1.0, 0.3, 0.9) + 2.3026).abs() < 1e-4);
    }

    #[test]
    fn zaln_hand_evaluations() {
        // m = -0.5, exponent -(0.5)^2 / 2
        let v = zaln_log_density(1.0, 1.0, 1.0, 1.0);
        let hand = (0.398_942_280_401_432_7f64 * (-0.125f64).exp()).ln();
        assert!((v - hand).abs() < 1e-14);
        assert!((v + 1.0439).abs() < 5e-4);
        // x at exp(m) so the exponent vanishes: -log x - log s - log sqrt(2 pi)
        let v = zaln_log_density((-0.125f64).exp(), 1.0, 0.5, 1.0);
        let hand = 0.125 - 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - hand).abs() < 1e-14);
        assert!((v + 0.1008).abs() < 1e-4);
    }

    #[test]
    fn zaln_guard() {
        let r = zaln_loglik(&[1.0, 0.0], &[1.0, 1.0], 0.3, 1.0, 0);
        assert!(matches!(r, Err(MemError::ZeroWithFullMass { index: 1 })));
        assert!(zaln_loglik(&[1.0, 0.0], &[1.0, 1.0], 0.3, 0.5, 0)
            .unwrap()
            .is_finite());
        // burn-in excluded
        let with = zaln_loglik(&[5.0, 1.0], &[1.0, 1.0], 0.3, 1.0, 0).unwrap();
        let without = zaln_loglik(&[5.0, 1.0], &[1.0, 1.0], 0.3, 1.0, 1).unwrap();
        assert!((with - without - zaln_log_density(5.0, 1.0, 0.3, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn half_life_values() {
        match half_life(0.3741, 0.5901, 5.0).unwrap() {
            HalfLife::Finite(m) => assert_eq!(m.round(), 95.0),
            other => panic!("{other:?}"),
        }
        match half_life(0.25, 0.25, 5.0).unwrap() {
            HalfLife::Finite(m) => assert!((m - 5.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match half_life(0.2871, 0.6829, 5.0).unwrap() {
            HalfLife::Finite(m) => assert_eq!(m.round(), 114.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(half_life(0.5, 0.5, 5.0).unwrap(), HalfLife::NonStationary);
        assert!(half_life(0.0, -0.1, 5.0).is_err());
    }

    #[test]
    fn bic_values() {
        assert_eq!(bic(1448.0, 6, 25_920).round(), -2835.0);
        assert_eq!(bic(0.0, 0, 100), 0.0);
    }

    #[test]
    fn fit_rejects_short_series() {
        let d = MemData::positive_returns(vec![1.0; 100]);
        assert!(matches!(
            fit_logmem(&d, &MemSpec::default(), &FitOptions::default()),
            Err(MemError::TooShort { need: 500, .. })
        ));
    }

    #[test]
    fn constant_series_is_unidentified() {
        let d = MemData::positive_returns(vec![2.0; 800]);
        let f = fit_logmem(&d, &MemSpec::default(), &FitOptions::default()).unwrap();
        assert!(f.unidentified);
        assert!(!f.converged);
    }

    #[test]
    fn constant_data_has_singular_hessian() {
        let d = MemData::positive_returns(vec![1.0; 600]);
        let design = univariate_design(&d, 1, 1, 1.0).unwrap();
        let theta = ParamSet::logmem11(0.0, 0.3, 0.0, 0.0, 0.5, 0.3, 1.0).to_theta();
        let free = [true, true, false, false, true, true];
        assert!(matches!(
            robust_se(&design, &theta, &free),
            Err(MemError::SingularHessian { .. })
        ));
    }
}
