//! Browser bindings for the demo page in `www/`. Every export takes plain
//! numbers and returns a JSON string so the page needs no generated types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use volflow_core::mem::{half_life, HalfLife, ParamSet};
use volflow_core::pipeline::interval_series;
use volflow_core::rvol::{Estimator, RvConfig};
use volflow_core::sim::{simulate_logmem, simulate_ticks, TickSimConfig};
use volflow_core::vmem::{shock_multiplier, shock_response, Shock, SpilloverSummary};
use volflow_core::INTERVAL_SECONDS;

fn to_js<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct EstimatorSeries {
    estimator: String,
    values: Vec<f64>,
    zeroed: usize,
}

#[derive(Serialize)]
struct RvDemo {
    interval_minutes: i64,
    series: Vec<EstimatorSeries>,
}

/// Simulates one day of ticks and returns the five-minute volatility path
/// under each estimator.
#[wasm_bindgen]
pub fn rv_explorer(
    seed: u32,
    sigma_annual: f64,
    jump_intensity: f64,
    jump_size: f64,
    arrival_prob: f64,
) -> Result<String, JsError> {
    js(rv_explorer_json(
        seed,
        sigma_annual,
        jump_intensity,
        jump_size,
        arrival_prob,
    ))
}

pub fn rv_explorer_json(
    seed: u32,
    sigma_annual: f64,
    jump_intensity: f64,
    jump_size: f64,
    arrival_prob: f64,
) -> Result<String, String> {
    let cfg = TickSimConfig {
        seed: seed.into(),
        sigma_annual,
        jump_intensity,
        jump_size,
        arrival_prob,
        ..TickSimConfig::default()
    };
    let ticks = simulate_ticks(&cfg)?;
    let end = cfg.start + cfg.seconds as i64;
    let mut series = Vec::new();
    for estimator in [
        Estimator::Preavg,
        Estimator::Bpv,
        Estimator::Medrv,
        Estimator::Squared,
    ] {
        let iv = interval_series(
            "SIM",
            &ticks,
            cfg.start,
            end,
            &RvConfig::with_estimator(estimator),
        )
        .map_err(|e| e.to_string())?;
        series.push(EstimatorSeries {
            estimator: estimator.to_string(),
            values: iv.rv.values,
            zeroed: iv.zeroed,
        });
    }
    to_js(&RvDemo {
        interval_minutes: INTERVAL_SECONDS / 60,
        series,
    })
}

#[derive(Serialize)]
struct MemDemo {
    values: Vec<f64>,
    persistence: f64,
    half_life_minutes: Option<f64>,
    zero_fraction: f64,
}

/// Simulates a LogMEM(1,1) path and reports its persistence and half-life.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn logmem_simulator(
    seed: u32,
    n: u32,
    omega: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    s: f64,
    p_plus: f64,
) -> Result<String, JsError> {
    js(logmem_simulator_json(
        seed, n, omega, alpha, gamma, beta, s, p_plus,
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn logmem_simulator_json(
    seed: u32,
    n: u32,
    omega: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    s: f64,
    p_plus: f64,
) -> Result<String, String> {
    let params = ParamSet::logmem11(omega, alpha, 0.0, gamma, beta, s, p_plus);
    params.validate().map_err(|e| e.to_string())?;
    let data = simulate_logmem(&params, n as usize, seed.into());
    let persistence = alpha + beta;
    let half_life_minutes = match half_life(alpha, beta, (INTERVAL_SECONDS / 60) as f64) {
        Ok(HalfLife::Finite(m)) => Some(m),
        _ => None,
    };
    let zeros = data.x.iter().filter(|v| **v == 0.0).count();
    to_js(&MemDemo {
        zero_fraction: zeros as f64 / data.x.len().max(1) as f64,
        values: data.x,
        persistence,
        half_life_minutes,
    })
}

#[derive(Serialize)]
struct SpilloverDemo {
    multiplier: f64,
    responses: Vec<f64>,
    summary: SpilloverSummary,
}

/// Two-instrument lag-1 matrix `[[a11, a12], [a21, a22]]`, where `a12` is the
/// effect of instrument 2 on instrument 1. Every entry is treated as
/// significant. The shock is one conditional SD of the source's innovation.
#[wasm_bindgen]
pub fn spillover_demo(
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    s: f64,
    source: u32,
) -> Result<String, JsError> {
    js(spillover_demo_json(a11, a12, a21, a22, s, source))
}

pub fn spillover_demo_json(
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    s: f64,
    source: u32,
) -> Result<String, String> {
    let a = vec![vec![a11, a12], vec![a21, a22]];
    let names = vec!["X1".to_string(), "X2".to_string()];
    let responses =
        shock_response(&a, source as usize, Shock::OneSd(s)).map_err(|e| e.to_string())?;
    to_js(&SpilloverDemo {
        multiplier: shock_multiplier(s),
        responses,
        summary: SpilloverSummary::from_matrix(&names, &a, &[vec![true; 2], vec![true; 2]], 1.0),
    })
}
