//! Seeded simulation of LogMEM processes and tick-level price paths.
//!
//! All randomness comes from ChaCha8 generators. A simulation seeded with
//! `seed` draws from independent sub-streams of `ChaCha8Rng::seed_from_u64(seed)`
//! selected with `set_stream`:
//!
//! | stream       | use                                    |
//! |--------------|----------------------------------------|
//! | `2k`         | innovations of instrument `k`          |
//! | `2k + 1`     | return signs of instrument `k`         |
//! | `1000`       | tick diffusion and jumps               |
//! | `1001`       | trade arrivals and sizes               |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ingest::{TickRecord, TickSeries};
use crate::mem::{MemData, ParamSet};
use crate::prep::{InstrumentSeries, Zone};
use crate::vmem::{VParamSet, VmemError};
use crate::INTERVAL_SECONDS;

/// Periods simulated and discarded before the returned sample.
pub const BURN_IN: usize = 1000;

const SECONDS_PER_YEAR: f64 = 31_536_000.0;
const NANOS: i64 = 1_000_000_000;

/// Generator for sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One zero-augmented log-normal innovation with unit mean.
fn draw_eps(rng: &mut ChaCha8Rng, s: f64, p_plus: f64) -> f64 {
    // both draws always happen so the stream position does not depend on p_plus
    let u: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    if u >= p_plus {
        0.0
    } else {
        (-0.5 * s * s - p_plus.ln() + s * z).exp()
    }
}

fn log_pos(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        0.0
    }
}

/// Simulates `n` observations of a univariate LogMEM after discarding
/// [`BURN_IN`] periods. Return signs are fair coin flips.
pub fn simulate_logmem(params: &ParamSet, n: usize, seed: u64) -> MemData {
    let (p, q) = (params.alpha.len(), params.beta.len());
    let total = n + BURN_IN;
    let mut eps_rng = substream(seed, 0);
    let mut sign_rng = substream(seed, 1);
    let mut x = vec![1.0; total];
    let mut neg = vec![false; total];
    let mut lm = vec![0.0; total];
    let burn = p.max(q);
    for t in 0..total {
        if t >= burn {
            let mut v =
                params.omega + params.gamma * if neg[t - 1] { log_pos(x[t - 1]) } else { 0.0 };
            for j in 1..=p {
                v += if x[t - j] > 0.0 {
                    params.alpha[j - 1] * x[t - j].ln()
                } else {
                    params.alpha0[j - 1]
                };
            }
            for j in 1..=q {
                v += params.beta[j - 1] * lm[t - j];
            }
            lm[t] = v;
        }
        x[t] = lm[t].exp() * draw_eps(&mut eps_rng, params.s, params.p_plus);
        neg[t] = sign_rng.random::<bool>();
    }
    MemData::new(x[BURN_IN..].to_vec(), neg[BURN_IN..].to_vec())
}

/// Simulates a vLogMEM on the five-minute grid starting at `start` (Unix
/// seconds, after the burn-in); zone interactions follow each interval's
/// start time.
pub fn simulate_vlogmem(
    params: &VParamSet,
    n: usize,
    start: i64,
    seed: u64,
) -> Result<Vec<InstrumentSeries>, VmemError> {
    params.validate()?;
    let k = params.k();
    let (p, q) = (params.p(), params.q());
    let total = n + BURN_IN;
    let t0 = start - BURN_IN as i64 * INTERVAL_SECONDS;
    let mut eps_rng: Vec<ChaCha8Rng> = (0..k).map(|i| substream(seed, 2 * i as u64)).collect();
    let mut sign_rng: Vec<ChaCha8Rng> = (0..k).map(|i| substream(seed, 2 * i as u64 + 1)).collect();
    let mut x = vec![vec![1.0f64; total]; k];
    let mut neg = vec![vec![false; total]; k];
    let mut lm = vec![vec![0.0; total]; k];
    let burn = p.max(q);
    for t in 0..total {
        let zone = Zone::of_time(t0 + t as i64 * INTERVAL_SECONDS);
        if t >= burn {
            for i in 0..k {
                let mut v = params.w[i];
                for l in 1..=p {
                    for j in 0..k {
                        let xv = x[j][t - l];
                        v += if xv > 0.0 {
                            params.a[l - 1][i][j] * xv.ln()
                        } else {
                            params.a0[l - 1][i][j]
                        };
                    }
                }
                if let Some(z) = &params.zones {
                    let m = z.get(zone);
                    for j in 0..k {
                        v += m[i][j] * log_pos(x[j][t - 1]);
                    }
                }
                for j in 0..k {
                    if neg[j][t - 1] {
                        v += params.gamma[i][j] * log_pos(x[j][t - 1]);
                    }
                }
                for l in 1..=q {
                    v += params.b[l - 1][i] * lm[i][t - l];
                }
                lm[i][t] = v;
            }
        }
        for i in 0..k {
            x[i][t] = lm[i][t].exp() * draw_eps(&mut eps_rng[i], params.s[i], params.p_plus[i]);
            neg[i][t] = sign_rng[i].random::<bool>();
        }
    }
    let times: Vec<i64> = (0..n as i64)
        .map(|t| start + t * INTERVAL_SECONDS)
        .collect();
    Ok((0..k)
        .map(|i| {
            InstrumentSeries::new(
                params.instruments[i].clone(),
                times.clone(),
                x[i][BURN_IN..].to_vec(),
                neg[i][BURN_IN..].to_vec(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSimConfig {
    pub seed: u64,
    /// First simulated second (Unix seconds).
    pub start: i64,
    pub seconds: usize,
    pub initial_price: f64,
    pub sigma_annual: f64,
    /// Expected jumps per second.
    pub jump_intensity: f64,
    /// Jump size as a multiple of the per-second diffusion sd.
    pub jump_size: f64,
    /// Probability that a second carries a trade.
    pub arrival_prob: f64,
    /// Mean traded value per trade, quote currency.
    pub mean_trade_value: f64,
    /// Optional volatility multiplier per five-minute interval, cycled.
    #[serde(default)]
    pub interval_vol: Option<Vec<f64>>,
}

impl Default for TickSimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            start: 1_609_459_200,
            seconds: 86_400,
            initial_price: 30_000.0,
            sigma_annual: 0.7,
            jump_intensity: 0.0,
            jump_size: 10.0,
            arrival_prob: 1.0,
            mean_trade_value: 5_000.0,
            interval_vol: None,
        }
    }
}

impl TickSimConfig {
    /// Per-second diffusion sd.
    pub fn second_sd(&self) -> f64 {
        self.sigma_annual / SECONDS_PER_YEAR.sqrt()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.arrival_prob > 0.0 && self.arrival_prob <= 1.0) {
            return Err(format!(
                "arrival probability {} outside (0, 1]",
                self.arrival_prob
            ));
        }
        if !(self.jump_intensity >= 0.0) {
            return Err(format!("negative jump intensity {}", self.jump_intensity));
        }
        if !(self.initial_price > 0.0) || !(self.sigma_annual >= 0.0) {
            return Err("initial price must be positive and volatility non-negative".into());
        }
        if self
            .interval_vol
            .as_ref()
            .is_some_and(|v| v.is_empty() || v.iter().any(|m| !(*m >= 0.0)))
        {
            return Err(
                "interval volatility multipliers must be non-empty and non-negative".into(),
            );
        }
        Ok(())
    }
}

/// Simulates trades on a one-second grid. A seed trade one second before
/// `start` anchors the opening price. Jumps have random sign.
pub fn simulate_ticks(cfg: &TickSimConfig) -> Result<TickSeries, String> {
    cfg.validate()?;
    let mut path_rng = substream(cfg.seed, 1000);
    let mut trade_rng = substream(cfg.seed, 1001);
    let sd = cfg.second_sd();
    let poisson = if cfg.jump_intensity > 0.0 {
        Some(Poisson::new(cfg.jump_intensity).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let size =
        Exp::new(1.0 / cfg.mean_trade_value.max(f64::MIN_POSITIVE)).map_err(|e| e.to_string())?;
    // cumulative log return, so a flat path reproduces the initial price exactly
    let mut log_p = 0.0;
    let mut records = Vec::with_capacity((cfg.seconds as f64 * cfg.arrival_prob) as usize + 1);
    records.push(TickRecord {
        timestamp_ns: (cfg.start - 1) * NANOS,
        price: cfg.initial_price,
        size: 0.0,
    });
    for i in 0..cfg.seconds {
        let mult = cfg
            .interval_vol
            .as_ref()
            .map_or(1.0, |v| v[(i / INTERVAL_SECONDS as usize) % v.len()]);
        let z: f64 = path_rng.sample(StandardNormal);
        log_p += mult * sd * z;
        if let Some(pois) = &poisson {
            let jumps: f64 = pois.sample(&mut path_rng);
            for _ in 0..jumps as u64 {
                let sign = if path_rng.random::<bool>() { 1.0 } else { -1.0 };
                log_p += sign * cfg.jump_size * sd;
            }
        }
        let u: f64 = trade_rng.random();
        let value = size.sample(&mut trade_rng);
        if u < cfg.arrival_prob {
            records.push(TickRecord {
                timestamp_ns: (cfg.start + i as i64) * NANOS + NANOS / 2,
                price: cfg.initial_price * log_p.exp(),
                size: value,
            });
        }
    }
    Ok(TickSeries::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{align_to_grid, window_returns};
    use crate::rvol::{realised_volatility, Estimator, RvConfig};

    fn lm11(s: f64, p_plus: f64) -> ParamSet {
        ParamSet::logmem11(0.0, 0.35, -0.1, 0.03, 0.55, s, p_plus)
    }

    #[test]
    fn deterministic_limit_is_fixed_point() {
        let mut p = lm11(1e-9, 1.0);
        p.omega = 0.1;
        p.gamma = 0.0;
        let d = simulate_logmem(&p, 200, 3);
        let fp = (0.1f64 / (1.0 - 0.9)).exp();
        assert!(
            d.x.iter().all(|v| (v / fp - 1.0).abs() < 1e-6),
            "{}",
            d.x[0]
        );
    }

    #[test]
    fn zero_fraction_matches_p_plus() {
        let d = simulate_logmem(&lm11(0.3, 0.8), 100_000, 11);
        let zeros = d.x.iter().filter(|v| **v == 0.0).count() as f64 / d.len() as f64;
        assert!((zeros - 0.2).abs() < 0.005, "{zeros}");
    }

    #[test]
    fn innovations_have_unit_mean() {
        let mut rng = substream(5, 0);
        let n = 1_000_000;
        let m: f64 = (0..n).map(|_| draw_eps(&mut rng, 0.3, 0.9)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn bit_identical_replay() {
        let a = simulate_logmem(&lm11(0.3, 0.9), 5000, 42);
        let b = simulate_logmem(&lm11(0.3, 0.9), 5000, 42);
        assert!(a
            .x
            .iter()
            .zip(&b.x)
            .all(|(u, v)| u.to_bits() == v.to_bits()));
        assert_eq!(a.neg_return, b.neg_return);
        let c = simulate_logmem(&lm11(0.3, 0.9), 5000, 43);
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn instrument_streams_are_uncorrelated() {
        let mut p = VParamSet::zeros(vec!["a".into(), "b".into()], 1, 1);
        p.s = vec![0.3, 0.3];
        let sims = simulate_vlogmem(&p, 50_000, 0, 8).unwrap();
        let la: Vec<f64> = sims[0].values.iter().map(|v| v.ln()).collect();
        let lb: Vec<f64> = sims[1].values.iter().map(|v| v.ln()).collect();
        let (ma, mb) = (crate::stats::mean(&la), crate::stats::mean(&lb));
        let cov: f64 = la
            .iter()
            .zip(&lb)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / la.len() as f64;
        let corr = cov / (crate::stats::std_dev(&la) * crate::stats::std_dev(&lb));
        // 4 standard errors of a null correlation
        assert!(corr.abs() < 4.0 / (50_000f64).sqrt(), "{corr}");
    }

    #[test]
    fn zero_volatility_ticks_are_flat() {
        let cfg = TickSimConfig {
            sigma_annual: 0.0,
            seconds: 600,
            ..TickSimConfig::default()
        };
        let t = simulate_ticks(&cfg).unwrap();
        assert!(t.records.iter().all(|r| r.price == cfg.initial_price));
    }

    #[test]
    fn sparse_trading_is_zeroed() {
        let cfg = TickSimConfig {
            arrival_prob: 0.15,
            seconds: 3000,
            seed: 9,
            ..TickSimConfig::default()
        };
        let ticks = simulate_ticks(&cfg).unwrap();
        let grid = align_to_grid(&ticks, cfg.start - 1, cfg.start + 3000).unwrap();
        let rv = RvConfig::with_estimator(Estimator::Bpv);
        let mut zeroed = 0;
        for w in 0..10 {
            let win = window_returns(&grid, cfg.start + w * 300).unwrap();
            assert!(win.activity_fraction() < 0.2);
            let obs = realised_volatility(&win, &rv);
            assert!(obs.is_zeroed && obs.value == 0.0);
            zeroed += 1;
        }
        assert_eq!(zeroed, 10);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = TickSimConfig {
            arrival_prob: 0.0,
            ..TickSimConfig::default()
        };
        assert!(simulate_ticks(&bad).is_err());
        let bad = TickSimConfig {
            jump_intensity: -1.0,
            ..TickSimConfig::default()
        };
        assert!(simulate_ticks(&bad).is_err());
    }
}
