//! Multivariate LogMEM with diagonal long-term persistence.
//!
//! Each equation is fitted separately: instrument `i`'s conditional mean
//! uses its own lags plus the lagged log-values and zero dummies of the
//! other instruments as exogenous regressors. Matrices follow the
//! convention `A[i][j]` = effect of instrument `j` (source) on equation
//! `i` (target).
//!
//! With zones enabled, lag-1 log-value coefficients gain zone interactions
//! in sum-to-zero form: the regressors `(1_AS - 1_US) log x` and
//! `(1_EU - 1_US) log x` carry `A_AS` and `A_EU`, and
//! `A_US = -A_AS - A_EU`. The zone is that of the predicted interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mem::{self, Collinearity, Design, Estimate, FitOptions, MemData, MemError, MemSpec};
use crate::prep::{build_panel, InstrumentSeries, Panel, PrepError, Zone};
use crate::stats;

pub type Matrix = Vec<Vec<f64>>;
pub type OptMatrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Error)]
pub enum VmemError {
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error("need at least {need} instruments, got {got}")]
    TooFewInstruments { got: usize, need: usize },
    #[error("unknown instrument {0:?}")]
    UnknownInstrument(String),
    #[error("zone matrices were not fitted")]
    ZonesNotFitted,
    #[error("shock multiplier must be positive, got {0}")]
    BadMultiplier(f64),
    #[error("shape error: {0}")]
    Shape(String),
}

pub fn zeros(k: usize) -> Matrix {
    vec![vec![0.0; k]; k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMatrices {
    pub asia: Matrix,
    pub europe: Matrix,
    pub us: Matrix,
}

impl ZoneMatrices {
    pub fn zeros(k: usize) -> Self {
        Self {
            asia: zeros(k),
            europe: zeros(k),
            us: zeros(k),
        }
    }

    pub fn get(&self, zone: Zone) -> &Matrix {
        match zone {
            Zone::Asia => &self.asia,
            Zone::Europe => &self.europe,
            Zone::Us => &self.us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VParamSet {
    pub instruments: Vec<String>,
    pub w: Vec<f64>,
    /// One K x K matrix per short-term lag.
    pub a: Vec<Matrix>,
    pub a0: Vec<Matrix>,
    pub gamma: Matrix,
    /// Diagonal of B per long-term lag: `b[j][i]`.
    pub b: Vec<Vec<f64>>,
    pub zones: Option<ZoneMatrices>,
    pub s: Vec<f64>,
    pub p_plus: Vec<f64>,
}

impl VParamSet {
    /// Zero-initialised parameters for `k` instruments.
    pub fn zeros(instruments: Vec<String>, p: usize, q: usize) -> Self {
        let k = instruments.len();
        Self {
            instruments,
            w: vec![0.0; k],
            a: vec![zeros(k); p],
            a0: vec![zeros(k); p],
            gamma: zeros(k),
            b: vec![vec![0.0; k]; q],
            zones: None,
            s: vec![1.0; k],
            p_plus: vec![1.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.instruments.len()
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), VmemError> {
        let k = self.k();
        let square = |m: &Matrix| m.len() == k && m.iter().all(|r| r.len() == k);
        let ok = self.w.len() == k
            && !self.a.is_empty()
            && self.a.len() == self.a0.len()
            && self.a.iter().all(square)
            && self.a0.iter().all(square)
            && square(&self.gamma)
            && !self.b.is_empty()
            && self.b.iter().all(|v| v.len() == k)
            && self.s.len() == k
            && self.p_plus.len() == k
            && self
                .zones
                .as_ref()
                .is_none_or(|z| square(&z.asia) && square(&z.europe) && square(&z.us));
        if !ok {
            return Err(VmemError::Shape("inconsistent parameter dimensions".into()));
        }
        if self.s.iter().any(|s| !(*s > 0.0))
            || self.p_plus.iter().any(|p| !(*p > 0.0 && *p <= 1.0))
        {
            return Err(VmemError::Shape(
                "s must be positive and p_plus in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Result<usize, VmemError> {
        self.instruments
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| VmemError::UnknownInstrument(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VSpec {
    pub mem: MemSpec,
    pub zones: bool,
    /// Estimate off-diagonal entries of A and A0; off gives K univariate fits.
    pub cross_terms: bool,
    /// Significance level for the summaries.
    pub level: f64,
}

impl Default for VSpec {
    fn default() -> Self {
        Self {
            mem: MemSpec::default(),
            zones: false,
            cross_terms: true,
            level: 0.01,
        }
    }
}

impl VSpec {
    pub fn new(p: usize, q: usize) -> Self {
        Self {
            mem: MemSpec::new(p, q),
            ..Self::default()
        }
    }
}

/// Significance-filtered To/From sums of a lag-1 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverSummary {
    pub instruments: Vec<String>,
    /// Row sums: what each instrument receives, diagonal included.
    pub to_sums: Vec<f64>,
    /// Column sums: what each instrument transmits, diagonal included.
    pub from_sums: Vec<f64>,
    pub total_offdiag_abs: f64,
    pub total_diag: f64,
    pub significance_level: f64,
}

impl SpilloverSummary {
    pub fn from_matrix(
        instruments: &[String],
        a: &Matrix,
        significant: &[Vec<bool>],
        level: f64,
    ) -> Self {
        let k = a.len();
        let mut to_sums = vec![0.0; k];
        let mut from_sums = vec![0.0; k];
        let mut total_offdiag_abs = 0.0;
        let mut total_diag = 0.0;
        for i in 0..k {
            for j in 0..k {
                if !significant[i][j] {
                    continue;
                }
                to_sums[i] += a[i][j];
                from_sums[j] += a[i][j];
                if i == j {
                    total_diag += a[i][j];
                } else {
                    total_offdiag_abs += a[i][j].abs();
                }
            }
        }
        Self {
            instruments: instruments.to_vec(),
            to_sums,
            from_sums,
            total_offdiag_abs,
            total_diag,
            significance_level: level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneTotals {
    pub total_offdiag_abs: f64,
    pub total_diag: f64,
}

/// Totals of the effective lag-1 matrix `A + A_zone`, each part counted
/// only where significant.
pub fn zone_totals(
    base: &Matrix,
    base_sig: &[Vec<bool>],
    zone: &Matrix,
    zone_sig: &[Vec<bool>],
) -> ZoneTotals {
    let k = base.len();
    let mut out = ZoneTotals {
        total_offdiag_abs: 0.0,
        total_diag: 0.0,
    };
    for i in 0..k {
        for j in 0..k {
            let mut v = 0.0;
            if base_sig[i][j] {
                v += base[i][j];
            }
            if zone_sig[i][j] {
                v += zone[i][j];
            }
            if i == j {
                out.total_diag += v;
            } else {
                out.total_offdiag_abs += v.abs();
            }
        }
    }
    out
}

/// Size of the source shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shock {
    Multiplier(f64),
    /// One conditional standard deviation of a log-normal with log-sd `s`.
    OneSd(f64),
}

/// `1 + sqrt(exp(s^2) - 1)`: the positive part's coefficient of variation
/// added to its unit mean.
pub fn shock_multiplier(s: f64) -> f64 {
    1.0 + (s * s).exp_m1().sqrt()
}

/// Relative increase `multiplier^a - 1` of a target's conditional mean.
pub fn relative_increase(multiplier: f64, a: f64) -> Result<f64, VmemError> {
    if !(multiplier > 0.0) {
        return Err(VmemError::BadMultiplier(multiplier));
    }
    Ok(multiplier.powf(a) - 1.0)
}

/// One-step response of every target's conditional mean to a shock in
/// `source`, ignoring contemporaneous innovation correlation (co-movement
/// in realised data may be larger).
pub fn shock_response(a1: &Matrix, source: usize, shock: Shock) -> Result<Vec<f64>, VmemError> {
    let mult = match shock {
        Shock::Multiplier(m) => m,
        Shock::OneSd(s) => shock_multiplier(s),
    };
    if source >= a1.len() {
        return Err(VmemError::Shape(format!(
            "source index {source} out of range"
        )));
    }
    a1.iter()
        .map(|row| relative_increase(mult, row[source]))
        .collect()
}

/// Fit of one equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationFit {
    pub instrument: String,
    pub estimates: Vec<Estimate>,
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub s: f64,
    pub p_plus: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub collinearity: Collinearity,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VFitResult {
    pub schema_version: String,
    pub instruments: Vec<String>,
    pub spec: VSpec,
    pub params: VParamSet,
    pub a_se: Vec<OptMatrix>,
    pub a_pvalues: Vec<OptMatrix>,
    pub a0_se: Vec<OptMatrix>,
    pub zone_se: Option<[OptMatrix; 3]>,
    pub zone_pvalues: Option<[OptMatrix; 3]>,
    /// Lag-1 entries significant at `spec.level`.
    pub significant: Vec<Vec<bool>>,
    pub stars: Vec<Vec<String>>,
    pub spillover: SpilloverSummary,
    pub equations: Vec<EquationFit>,
    pub converged: bool,
}

impl VFitResult {
    pub fn significance_at(&self, level: f64) -> Vec<Vec<bool>> {
        sig_matrix(&self.a_pvalues[0], level)
    }

    pub fn spillover_summary(&self, level: f64) -> SpilloverSummary {
        SpilloverSummary::from_matrix(
            &self.instruments,
            &self.params.a[0],
            &self.significance_at(level),
            level,
        )
    }

    pub fn shock_response(&self, source: &str, shock: Shock) -> Result<Vec<f64>, VmemError> {
        let i = self.params.index_of(source)?;
        shock_response(&self.params.a[0], i, shock)
    }

    /// Shock of one conditional SD of the source's own innovation.
    pub fn shock_response_sd(&self, source: &str) -> Result<Vec<f64>, VmemError> {
        let i = self.params.index_of(source)?;
        shock_response(&self.params.a[0], i, Shock::OneSd(self.params.s[i]))
    }

    pub fn zone_totals(&self, zone: Zone, level: f64) -> Result<ZoneTotals, VmemError> {
        let zm = self
            .params
            .zones
            .as_ref()
            .ok_or(VmemError::ZonesNotFitted)?;
        let zp = self
            .zone_pvalues
            .as_ref()
            .ok_or(VmemError::ZonesNotFitted)?;
        let zi = match zone {
            Zone::Asia => 0,
            Zone::Europe => 1,
            Zone::Us => 2,
        };
        Ok(zone_totals(
            &self.params.a[0],
            &self.significance_at(level),
            zm.get(zone),
            &sig_matrix(&zp[zi], level),
        ))
    }
}

fn sig_matrix(p: &OptMatrix, level: f64) -> Vec<Vec<bool>> {
    p.iter()
        .map(|row| row.iter().map(|v| v.is_some_and(|p| p < level)).collect())
        .collect()
}

/// Column roles of one equation's regressors.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    A { lag: usize, src: usize },
    A0 { lag: usize, src: usize },
    Gamma,
    Zone { zone: usize, src: usize },
}

struct EquationDesign {
    design: Design,
    roles: Vec<Role>,
    free: Vec<bool>,
}

fn log_pos(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        0.0
    }
}

fn equation_design(panel: &Panel, i: usize, spec: &VSpec) -> Result<EquationDesign, VmemError> {
    let (p, q) = (spec.mem.p, spec.mem.q);
    let k = panel.n_instruments();
    let n = panel.n_rows();
    let burn = p.max(q);
    if n <= burn {
        return Err(MemError::TooShort {
            len: n,
            need: burn + 1,
        }
        .into());
    }
    let sources: Vec<usize> = if spec.cross_terms {
        (0..k).collect()
    } else {
        vec![i]
    };

    let mut roles = Vec::new();
    let mut names = Vec::new();
    for lag in 1..=p {
        for &src in &sources {
            roles.push(Role::A { lag, src });
            names.push(format!("A{lag}[{}]", panel.instruments[src]));
        }
    }
    for lag in 1..=p {
        for &src in &sources {
            roles.push(Role::A0 { lag, src });
            names.push(format!("A0_{lag}[{}]", panel.instruments[src]));
        }
    }
    roles.push(Role::Gamma);
    names.push("gamma".into());
    if spec.zones {
        for (zone, code) in ["AS", "EU"].iter().enumerate() {
            for &src in &sources {
                roles.push(Role::Zone { zone, src });
                names.push(format!("A_{code}[{}]", panel.instruments[src]));
            }
        }
    }

    let r = roles.len();
    let mut z = vec![0.0; n * r];
    for t in burn..n {
        let row = &mut z[t * r..(t + 1) * r];
        let effect = match panel.zones[t] {
            Zone::Asia => [1.0, 0.0],
            Zone::Europe => [0.0, 1.0],
            Zone::Us => [-1.0, -1.0],
        };
        for (c, role) in roles.iter().enumerate() {
            row[c] = match *role {
                Role::A { lag, src } => log_pos(panel.values[src][t - lag]),
                Role::A0 { lag, src } => {
                    if panel.values[src][t - lag] == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Role::Gamma => {
                    if panel.neg_return[i][t - 1] {
                        log_pos(panel.values[i][t - 1])
                    } else {
                        0.0
                    }
                }
                Role::Zone { zone, src } => effect[zone] * log_pos(panel.values[src][t - 1]),
            };
        }
    }

    let x = panel.values[i].clone();
    let p_plus = spec.mem.p_plus_for(&x);
    // a regressor that never moves away from zero carries no information
    let active = |c: usize| (burn..n).any(|t| z[t * r + c] != 0.0);
    let mut free = vec![true; r + q + 2];
    for (c, role) in roles.iter().enumerate() {
        free[1 + c] = match role {
            Role::A0 { .. } => spec.mem.zero_augmented && active(c),
            Role::Gamma => spec.mem.asymmetry && active(c),
            _ => active(c),
        };
    }
    let design = Design::new(x, z, names, q, burn, p_plus)?;
    Ok(EquationDesign {
        design,
        roles,
        free,
    })
}

fn fit_equation(
    panel: &Panel,
    i: usize,
    spec: &VSpec,
    opts: &FitOptions,
) -> Result<(EquationFit, Vec<Role>), VmemError> {
    let ed = equation_design(panel, i, spec)?;
    let d = &ed.design;
    let (p, q) = (spec.mem.p, spec.mem.q);
    let data = MemData::new(panel.values[i].clone(), panel.neg_return[i].clone());
    let start_uni = mem::default_start(&data, p, q);

    let mut theta0 = vec![0.0; d.n_params()];
    for (c, role) in ed.roles.iter().enumerate() {
        if let Role::A { lag, src } = role {
            if *src == i {
                theta0[1 + c] = start_uni.alpha[lag - 1];
            }
        }
    }
    for j in 0..q {
        theta0[d.beta_range().start + j] = start_uni.beta[j];
    }
    theta0[d.s_index()] = start_uni.s;

    let collinearity = d.collinearity(&ed.free);
    let mut warnings = Vec::new();
    if collinearity.collinear {
        warnings.push(format!(
            "collinear regressors: pairs {:?}, constant {:?}",
            collinearity.pairs, collinearity.constant
        ));
    }
    if !(start_uni.s > 0.0) {
        return Err(
            MemError::Domain(format!("{} has no variation in logs", panel.instruments[i])).into(),
        );
    }

    let fit = mem::fit_design(d, &theta0, &ed.free, opts);
    if !fit.converged {
        warnings.push(format!("optimizer did not converge: {}", fit.message));
    }
    let se = if opts.standard_errors {
        match mem::robust_se(d, &fit.theta, &ed.free) {
            Ok(se) => Some(se),
            Err(e) => {
                warnings.push(format!("standard errors unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    let k_free = ed.free.iter().filter(|f| **f).count();
    let eq = EquationFit {
        instrument: panel.instruments[i].clone(),
        estimates: mem::estimates_from(&d.names, &fit.theta, &ed.free, se.as_deref()),
        loglik: fit.loglik,
        bic: mem::bic(fit.loglik, k_free, d.n_obs()),
        n_params: k_free,
        n_obs: d.n_obs(),
        s: fit.theta[d.s_index()],
        p_plus: d.p_plus,
        converged: fit.converged,
        iterations: fit.iterations,
        evaluations: fit.evaluations,
        collinearity,
        warnings,
    };
    Ok((eq, ed.roles))
}

fn opt_zeros(k: usize) -> OptMatrix {
    vec![vec![None; k]; k]
}

/// Equation-by-equation QML fit of a vLogMEM(p, q).
///
/// Non-convergence in one equation is flagged in its [`EquationFit`] and in
/// `converged`, without aborting the others.
pub fn fit_vlogmem(
    panel: &Panel,
    spec: &VSpec,
    opts: &FitOptions,
) -> Result<VFitResult, VmemError> {
    spec.mem.validate()?;
    let k = panel.n_instruments();
    if k < 2 {
        return Err(VmemError::TooFewInstruments { got: k, need: 2 });
    }
    if panel.n_rows() < mem::MIN_FIT_LEN {
        return Err(MemError::TooShort {
            len: panel.n_rows(),
            need: mem::MIN_FIT_LEN,
        }
        .into());
    }
    let run = |i: usize| fit_equation(panel, i, spec, opts);
    #[cfg(feature = "parallel")]
    let fits: Vec<_> = {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<_> = (0..k).map(run).collect();
    let fits = fits.into_iter().collect::<Result<Vec<_>, _>>()?;

    let (p, q) = (spec.mem.p, spec.mem.q);
    let mut params = VParamSet::zeros(panel.instruments.clone(), p, q);
    let mut a_se = vec![opt_zeros(k); p];
    let mut a_pv = vec![opt_zeros(k); p];
    let mut a0_se = vec![opt_zeros(k); p];
    let mut zm = ZoneMatrices::zeros(k);
    let mut z_se = [opt_zeros(k), opt_zeros(k), opt_zeros(k)];
    let mut z_pv = [opt_zeros(k), opt_zeros(k), opt_zeros(k)];

    for (i, (eq, roles)) in fits.iter().enumerate() {
        let est = &eq.estimates;
        params.w[i] = est[0].value;
        let n_reg = roles.len();
        for (c, role) in roles.iter().enumerate() {
            let e = &est[1 + c];
            match *role {
                Role::A { lag, src } => {
                    params.a[lag - 1][i][src] = e.value;
                    a_se[lag - 1][i][src] = e.se;
                    a_pv[lag - 1][i][src] = e.pvalue;
                }
                Role::A0 { lag, src } => {
                    params.a0[lag - 1][i][src] = e.value;
                    a0_se[lag - 1][i][src] = e.se;
                }
                Role::Gamma => params.gamma[i][i] = e.value,
                Role::Zone { zone, src } => {
                    let m = if zone == 0 {
                        &mut zm.asia
                    } else {
                        &mut zm.europe
                    };
                    m[i][src] = e.value;
                    z_se[zone][i][src] = e.se;
                    z_pv[zone][i][src] = e.pvalue;
                }
            }
        }
        for j in 0..q {
            params.b[j][i] = est[1 + n_reg + j].value;
        }
        params.s[i] = eq.s;
        params.p_plus[i] = eq.p_plus;

        if spec.zones {
            zone_us_row(panel, i, spec, &fits[i], &mut zm, &mut z_se, &mut z_pv)?;
        }
    }
    if spec.zones {
        params.zones = Some(zm);
    }

    let significant = sig_matrix(&a_pv[0], spec.level);
    let stars = a_pv[0]
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| p.map_or("", stats::stars).to_string())
                .collect()
        })
        .collect();
    let spillover =
        SpilloverSummary::from_matrix(&panel.instruments, &params.a[0], &significant, spec.level);
    let converged = fits.iter().all(|(e, _)| e.converged);
    Ok(VFitResult {
        schema_version: crate::SCHEMA_VERSION.into(),
        instruments: panel.instruments.clone(),
        spec: *spec,
        params,
        a_se,
        a_pvalues: a_pv,
        a0_se,
        zone_se: spec.zones.then_some(z_se.clone()),
        zone_pvalues: spec.zones.then_some(z_pv),
        significant,
        stars,
        spillover,
        equations: fits.into_iter().map(|(e, _)| e).collect(),
        converged,
    })
}

/// Fills `A_US = -A_AS - A_EU` for equation `i`, with delta-method standard
/// errors from the equation's full covariance.
fn zone_us_row(
    panel: &Panel,
    i: usize,
    spec: &VSpec,
    fit: &(EquationFit, Vec<Role>),
    zm: &mut ZoneMatrices,
    z_se: &mut [OptMatrix; 3],
    z_pv: &mut [OptMatrix; 3],
) -> Result<(), VmemError> {
    let (eq, roles) = fit;
    for src in 0..panel.n_instruments() {
        zm.us[i][src] = -zm.asia[i][src] - zm.europe[i][src];
    }
    if eq.estimates.iter().all(|e| e.se.is_none()) {
        return Ok(());
    }
    let ed = equation_design(panel, i, spec)?;
    let theta: Vec<f64> = eq.estimates.iter().map(|e| e.value).collect();
    let cov = match ed.design.robust_covariance(&theta, &ed.free) {
        Ok(c) => c,
        Err(_) => return Ok(()),
    };
    // position of each parameter among the free ones
    let mut pos = vec![None; ed.free.len()];
    let mut k = 0;
    for (j, f) in ed.free.iter().enumerate() {
        if *f {
            pos[j] = Some(k);
            k += 1;
        }
    }
    for src in 0..panel.n_instruments() {
        let col = |zone: usize| {
            roles
                .iter()
                .position(|r| *r == Role::Zone { zone, src })
                .and_then(|c| pos[1 + c])
        };
        let (ia, ie) = (col(0), col(1));
        if ia.is_none() && ie.is_none() {
            continue;
        }
        let mut var = 0.0;
        for a in [ia, ie].into_iter().flatten() {
            for b in [ia, ie].into_iter().flatten() {
                var += cov[(a, b)];
            }
        }
        if var > 0.0 {
            let se = var.sqrt();
            z_se[2][i][src] = Some(se);
            z_pv[2][i][src] = Some(stats::two_sided_pvalue(zm.us[i][src] / se));
        }
    }
    Ok(())
}

/// Bivariate vLogMEM(2, 1) of diurnally adjusted volume and volatility.
/// Collinearity diagnostics are reported per equation.
pub fn fit_bivariate_volume_volatility(
    volume: &InstrumentSeries,
    rv: &InstrumentSeries,
    opts: &FitOptions,
) -> Result<VFitResult, VmemError> {
    let panel = build_panel(&[volume.clone(), rv.clone()])?;
    let spec = VSpec {
        mem: MemSpec::new(2, 1),
        ..VSpec::default()
    };
    fit_vlogmem(&panel, &spec, opts)
}
