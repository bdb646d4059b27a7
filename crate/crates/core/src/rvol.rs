//! Five-minute realised volatility estimators.
//!
//! Every estimator produces a realised variance from one-second log
//! returns, takes the square root and annualises with `sqrt(12 * 24 * 365)`.
//! Windows where fewer than `activity_threshold` of the seconds traded are
//! set to zero before any estimator runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::ReturnWindow;

/// 12 five-minute intervals per hour, 24 hours, 365 days.
pub const ANNUALISATION_FACTOR_SQ: f64 = 105_120.0;

/// Scaling constant of the median realised variance, `pi / (6 - 4 sqrt 3 + pi)`.
pub fn medrv_constant() -> f64 {
    PI / (6.0 - 4.0 * 3f64.sqrt() + PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Preavg,
    Bpv,
    Medrv,
    Squared,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Preavg => "preavg",
            Estimator::Bpv => "bpv",
            Estimator::Medrv => "medrv",
            Estimator::Squared => "squared",
        })
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "preavg" | "pre-averaging" => Ok(Estimator::Preavg),
            "bpv" | "bipower" => Ok(Estimator::Bpv),
            "medrv" => Ok(Estimator::Medrv),
            "squared" | "rv" => Ok(Estimator::Squared),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RvConfig {
    pub estimator: Estimator,
    /// Pre-averaging smoothing parameter.
    pub theta: f64,
    pub activity_threshold: f64,
    pub annualisation_factor: f64,
    /// Rescale the pre-averaged variance so that it is unbiased for i.i.d.
    /// returns. Off by default.
    pub debias: bool,
}

impl Default for RvConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Preavg,
            theta: 0.4,
            activity_threshold: 0.20,
            annualisation_factor: ANNUALISATION_FACTOR_SQ.sqrt(),
            debias: false,
        }
    }
}

impl RvConfig {
    pub fn with_estimator(estimator: Estimator) -> Self {
        Self {
            estimator,
            ..Self::default()
        }
    }

    /// Non-fatal configuration warnings.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(0.3..=0.6).contains(&self.theta) {
            w.push(format!(
                "theta {} outside the usual [0.3, 0.6] band",
                self.theta
            ));
        }
        if !(0.0..=1.0).contains(&self.activity_threshold) {
            w.push(format!(
                "activity threshold {} outside [0, 1]",
                self.activity_threshold
            ));
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvObservation {
    /// Annualised volatility.
    pub value: f64,
    pub is_zeroed: bool,
    pub interval_return_negative: bool,
}

/// Pre-averaging bandwidth `ceil(theta * sqrt(n))`.
pub fn bandwidth(theta: f64, n: usize) -> usize {
    // guard against 0.4 * sqrt(300) style products landing a hair above an integer
    let raw = theta * (n as f64).sqrt();
    let k = (raw - 1e-12).ceil();
    (k.max(1.0)) as usize
}

fn tent(x: f64) -> f64 {
    x.min(1.0 - x)
}

pub fn preaveraging_weights(k: usize) -> Vec<f64> {
    (1..=k).map(|j| tent(j as f64 / k as f64)).collect()
}

/// Sum of squared pre-averaged returns over the window starts `0..=n-k`.
pub fn preaveraged_variance(returns: &[f64], k: usize) -> f64 {
    let n = returns.len();
    if k == 0 || n < k {
        return 0.0;
    }
    let g = preaveraging_weights(k);
    (0..=n - k)
        .map(|t| {
            let rbar: f64 = g.iter().zip(&returns[t..t + k]).map(|(w, r)| w * r).sum();
            rbar * rbar
        })
        .sum()
}

/// Factor making [`preaveraged_variance`] unbiased for i.i.d. returns.
pub fn preaveraging_debias_factor(n: usize, k: usize) -> f64 {
    let g2: f64 = preaveraging_weights(k).iter().map(|w| w * w).sum();
    n as f64 / ((n - k + 1) as f64 * g2)
}

pub fn bipower_variance(returns: &[f64]) -> f64 {
    PI / 2.0
        * returns
            .windows(2)
            .map(|w| w[0].abs() * w[1].abs())
            .sum::<f64>()
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

pub fn medrv_variance(returns: &[f64]) -> f64 {
    medrv_constant()
        * returns
            .windows(3)
            .map(|w| {
                let m = median3(w[0].abs(), w[1].abs(), w[2].abs());
                m * m
            })
            .sum::<f64>()
}

pub fn squared_variance(returns: &[f64]) -> f64 {
    returns.iter().map(|r| r * r).sum()
}

/// Zeroes the observation when fewer than the threshold share of seconds
/// traded; otherwise passes `raw` through.
pub fn apply_activity_threshold(window: &ReturnWindow, cfg: &RvConfig, raw: f64) -> RvObservation {
    let negative = window.interval_return < 0.0;
    if window.activity_fraction() < cfg.activity_threshold {
        RvObservation {
            value: 0.0,
            is_zeroed: true,
            interval_return_negative: negative,
        }
    } else {
        RvObservation {
            value: raw,
            is_zeroed: false,
            interval_return_negative: negative,
        }
    }
}

fn finish(
    window: &ReturnWindow,
    cfg: &RvConfig,
    variance: impl FnOnce(&[f64]) -> f64,
) -> RvObservation {
    let probe = apply_activity_threshold(window, cfg, 0.0);
    if probe.is_zeroed {
        return probe;
    }
    let v = variance(&window.returns).max(0.0);
    apply_activity_threshold(window, cfg, v.sqrt() * cfg.annualisation_factor)
}

pub fn preaveraged_rv(window: &ReturnWindow, cfg: &RvConfig) -> RvObservation {
    let n = window.n();
    let k = bandwidth(cfg.theta, n);
    finish(window, cfg, |r| {
        let v = preaveraged_variance(r, k);
        if cfg.debias {
            v * preaveraging_debias_factor(n, k)
        } else {
            v
        }
    })
}

pub fn bipower_variation(window: &ReturnWindow, cfg: &RvConfig) -> RvObservation {
    finish(window, cfg, bipower_variance)
}

pub fn med_rv(window: &ReturnWindow, cfg: &RvConfig) -> RvObservation {
    finish(window, cfg, medrv_variance)
}

pub fn squared_rv(window: &ReturnWindow, cfg: &RvConfig) -> RvObservation {
    finish(window, cfg, squared_variance)
}

/// Dispatches on `cfg.estimator`.
pub fn realised_volatility(window: &ReturnWindow, cfg: &RvConfig) -> RvObservation {
    match cfg.estimator {
        Estimator::Preavg => preaveraged_rv(window, cfg),
        Estimator::Bpv => bipower_variation(window, cfg),
        Estimator::Medrv => med_rv(window, cfg),
        Estimator::Squared => squared_rv(window, cfg),
    }
}
