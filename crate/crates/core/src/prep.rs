//! Diurnal adjustment, winsorizing and panel assembly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::{INTERVAL_SECONDS, SCHEMA_VERSION, SLOTS_PER_DAY};

/// Floor applied to degenerate (all-zero) diurnal factors.
pub const FACTOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("diurnal slot {slot} ({label} UTC) has no observations")]
    EmptySlot { slot: usize, label: String },
    #[error("series is empty")]
    EmptySeries,
    #[error("instruments share no common timestamps")]
    EmptyIntersection,
    #[error("series `{name}` has mismatched column lengths")]
    RaggedSeries { name: String },
    #[error("panel csv line {line}: {message}")]
    CsvSchema { line: u64, message: String },
    #[error("panel json: {0}")]
    Json(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Regional trading session by UTC hour: [00,08), [08,16), [16,24).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    #[serde(rename = "AS")]
    Asia,
    #[serde(rename = "EU")]
    Europe,
    #[serde(rename = "US")]
    Us,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::Asia, Zone::Europe, Zone::Us];

    pub fn of_slot(slot: usize) -> Zone {
        match slot {
            0..=95 => Zone::Asia,
            96..=191 => Zone::Europe,
            _ => Zone::Us,
        }
    }

    pub fn of_time(ts: i64) -> Zone {
        Zone::of_slot(slot_of(ts))
    }

    pub fn code(&self) -> &'static str {
        match self {
            Zone::Asia => "AS",
            Zone::Europe => "EU",
            Zone::Us => "US",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Zone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AS" => Ok(Zone::Asia),
            "EU" => Ok(Zone::Europe),
            "US" => Ok(Zone::Us),
            other => Err(format!("unknown zone `{other}`")),
        }
    }
}

/// Five-minute slot of the UTC day containing `ts` (Unix seconds).
pub fn slot_of(ts: i64) -> usize {
    (ts.rem_euclid(86_400) / INTERVAL_SECONDS) as usize
}

/// `HH:MM` start time of a slot.
pub fn slot_label(slot: usize) -> String {
    let minutes = slot * 5;
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// Five-minute observations of one instrument.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstrumentSeries {
    pub name: String,
    /// Interval start times, Unix seconds, strictly increasing.
    pub times: Vec<i64>,
    pub values: Vec<f64>,
    pub neg_return: Vec<bool>,
}

impl InstrumentSeries {
    pub fn new(
        name: impl Into<String>,
        times: Vec<i64>,
        values: Vec<f64>,
        neg_return: Vec<bool>,
    ) -> Self {
        Self {
            name: name.into(),
            times,
            values,
            neg_return,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self) -> Result<(), PrepError> {
        if self.times.len() != self.values.len() || self.neg_return.len() != self.values.len() {
            return Err(PrepError::RaggedSeries {
                name: self.name.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

impl Statistic {
    pub fn apply(&self, xs: &[f64]) -> f64 {
        match self {
            Statistic::Mean => stats::mean(xs),
            Statistic::Median => stats::median(xs),
        }
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "median" => Ok(Statistic::Median),
            other => Err(format!("unknown statistic `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiurnalProfile {
    pub factors: Vec<f64>,
    pub statistic: Statistic,
    /// Slots whose statistic was zero and got floored.
    pub floored: Vec<usize>,
}

pub(crate) fn group_by_slot(series: &InstrumentSeries) -> Vec<Vec<f64>> {
    let mut by_slot = vec![Vec::new(); SLOTS_PER_DAY];
    for (t, v) in series.times.iter().zip(&series.values) {
        by_slot[slot_of(*t)].push(*v);
    }
    by_slot
}

pub fn diurnal_factors(
    series: &InstrumentSeries,
    statistic: Statistic,
) -> Result<DiurnalProfile, PrepError> {
    series.check()?;
    let by_slot = group_by_slot(series);
    let mut factors = Vec::with_capacity(SLOTS_PER_DAY);
    let mut floored = Vec::new();
    for (slot, vals) in by_slot.iter().enumerate() {
        if vals.is_empty() {
            return Err(PrepError::EmptySlot {
                slot,
                label: slot_label(slot),
            });
        }
        let f = statistic.apply(vals);
        if f > FACTOR_FLOOR {
            factors.push(f);
        } else {
            log::warn!("{}: diurnal factor for slot {slot} floored", series.name);
            floored.push(slot);
            factors.push(FACTOR_FLOOR);
        }
    }
    Ok(DiurnalProfile {
        factors,
        statistic,
        floored,
    })
}

pub fn diurnal_adjust(series: &InstrumentSeries, profile: &DiurnalProfile) -> InstrumentSeries {
    let values = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, v)| {
            if *v == 0.0 {
                0.0
            } else {
                v / profile.factors[slot_of(*t)]
            }
        })
        .collect();
    InstrumentSeries {
        values,
        ..series.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinsorReport {
    pub threshold: f64,
    pub clipped: usize,
}

/// Nearest-rank upper quantile: the `ceil((1 - tail) * n)`-th smallest value.
pub fn nearest_rank_upper(values: &[f64], tail: f64) -> f64 {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // ceil((1 - tail) n) == n - floor(tail n) for integer n
    let drop = (tail * n as f64 + 1e-9).floor() as usize;
    let rank = n.saturating_sub(drop).max(1);
    sorted[rank - 1]
}

/// Clips values above the `(1 - tail)` nearest-rank quantile.
pub fn winsorize_values(values: &mut [f64], tail: f64) -> WinsorReport {
    if values.is_empty() {
        return WinsorReport {
            threshold: f64::NAN,
            clipped: 0,
        };
    }
    let q = nearest_rank_upper(values, tail);
    let mut clipped = 0;
    for v in values.iter_mut() {
        if *v > q {
            *v = q;
            clipped += 1;
        }
    }
    WinsorReport {
        threshold: q,
        clipped,
    }
}

pub fn winsorize_top(
    series: &InstrumentSeries,
    tail: f64,
) -> Result<(InstrumentSeries, WinsorReport), PrepError> {
    if series.is_empty() {
        return Err(PrepError::EmptySeries);
    }
    let mut out = series.clone();
    let report = winsorize_values(&mut out.values, tail);
    Ok((out, report))
}

/// Time-aligned observations of K instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub instruments: Vec<String>,
    pub times: Vec<i64>,
    /// One column per instrument, each of length `times.len()`.
    pub values: Vec<Vec<f64>>,
    pub neg_return: Vec<Vec<bool>>,
    pub zones: Vec<Zone>,
    /// Rows dropped because some instrument lacked them.
    pub dropped_rows: usize,
}

impl Panel {
    pub fn n_rows(&self) -> usize {
        self.times.len()
    }

    pub fn n_instruments(&self) -> usize {
        self.instruments.len()
    }

    pub fn is_zero(&self, row: usize, k: usize) -> bool {
        self.values[k][row] == 0.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.instruments.iter().position(|n| n == name)
    }

    pub fn series(&self, k: usize) -> InstrumentSeries {
        InstrumentSeries::new(
            self.instruments[k].clone(),
            self.times.clone(),
            self.values[k].clone(),
            self.neg_return[k].clone(),
        )
    }

    /// Panel restricted to the named instruments, in the given order.
    pub fn select(&self, names: &[String]) -> Option<Panel> {
        let idx: Option<Vec<usize>> = names.iter().map(|n| self.index_of(n)).collect();
        let idx = idx?;
        Some(Panel {
            instruments: names.to_vec(),
            times: self.times.clone(),
            values: idx.iter().map(|&k| self.values[k].clone()).collect(),
            neg_return: idx.iter().map(|&k| self.neg_return[k].clone()).collect(),
            zones: self.zones.clone(),
            dropped_rows: self.dropped_rows,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PrepError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "timestamp",
            "instrument",
            "value",
            "zero",
            "neg_return",
            "zone",
        ])?;
        for (row, t) in self.times.iter().enumerate() {
            for (k, name) in self.instruments.iter().enumerate() {
                let v = self.values[k][row];
                w.write_record(&[
                    t.to_string(),
                    name.clone(),
                    v.to_string(),
                    u8::from(v == 0.0).to_string(),
                    u8::from(self.neg_return[k][row]).to_string(),
                    self.zones[row].code().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Panel, PrepError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let expected = [
            "timestamp",
            "instrument",
            "value",
            "zero",
            "neg_return",
            "zone",
        ];
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(PrepError::CsvSchema {
                line: 1,
                message: format!("expected header `{}`", expected.join(",")),
            });
        }
        let mut order: Vec<String> = Vec::new();
        let mut rows: BTreeMap<i64, HashMap<String, (f64, bool)>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| PrepError::CsvSchema { line, message };
            if rec.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", rec.len())));
            }
            let t: i64 = rec[0]
                .parse()
                .map_err(|_| bad(format!("bad timestamp `{}`", &rec[0])))?;
            let name = rec[1].to_string();
            let v: f64 = rec[2]
                .parse()
                .map_err(|_| bad(format!("bad value `{}`", &rec[2])))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(format!(
                    "value must be finite and non-negative, got {v}"
                )));
            }
            let flag = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(format!("bad {what} flag `{other}`"))),
            };
            let zero = flag(&rec[3], "zero")?;
            let neg = flag(&rec[4], "neg_return")?;
            if zero != (v == 0.0) {
                return Err(bad("zero flag disagrees with value".into()));
            }
            let zone: Zone = rec[5].parse().map_err(bad)?;
            if zone != Zone::of_time(t) {
                return Err(bad(format!("zone {zone} does not match timestamp {t}")));
            }
            if !order.contains(&name) {
                order.push(name.clone());
            }
            if rows
                .entry(t)
                .or_default()
                .insert(name.clone(), (v, neg))
                .is_some()
            {
                return Err(bad(format!("duplicate row for {name} at {t}")));
            }
        }
        let series: Vec<InstrumentSeries> = order
            .iter()
            .map(|name| {
                let mut s = InstrumentSeries::new(name.clone(), vec![], vec![], vec![]);
                for (t, m) in &rows {
                    if let Some((v, neg)) = m.get(name) {
                        s.times.push(*t);
                        s.values.push(*v);
                        s.neg_return.push(*neg);
                    }
                }
                s
            })
            .collect();
        build_panel(&series)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "panel",
            "instruments": self.instruments,
            "times": self.times,
            "values": self.values,
            "neg_return": self.neg_return,
            "zones": self.zones,
            "dropped_rows": self.dropped_rows,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Panel, PrepError> {
        #[derive(Deserialize)]
        struct Columnar {
            schema_version: String,
            instruments: Vec<String>,
            times: Vec<i64>,
            values: Vec<Vec<f64>>,
            neg_return: Vec<Vec<bool>>,
            #[serde(default)]
            dropped_rows: usize,
        }
        let c: Columnar =
            serde_json::from_value(value.clone()).map_err(|e| PrepError::Json(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(PrepError::Json(format!(
                "unsupported schema_version {}",
                c.schema_version
            )));
        }
        let k = c.instruments.len();
        if c.values.len() != k || c.neg_return.len() != k {
            return Err(PrepError::Json(
                "column count does not match instruments".into(),
            ));
        }
        if c.values.iter().any(|col| col.len() != c.times.len())
            || c.neg_return.iter().any(|col| col.len() != c.times.len())
        {
            return Err(PrepError::Json("column length does not match times".into()));
        }
        let zones = c.times.iter().map(|t| Zone::of_time(*t)).collect();
        Ok(Panel {
            instruments: c.instruments,
            times: c.times,
            values: c.values,
            neg_return: c.neg_return,
            zones,
            dropped_rows: c.dropped_rows,
        })
    }
}

/// Inner join of the instruments on timestamp.
pub fn build_panel(series: &[InstrumentSeries]) -> Result<Panel, PrepError> {
    if series.is_empty() {
        return Err(PrepError::EmptyIntersection);
    }
    for s in series {
        s.check()?;
    }
    let maps: Vec<HashMap<i64, usize>> = series
        .iter()
        .map(|s| s.times.iter().enumerate().map(|(i, t)| (*t, i)).collect())
        .collect();
    let mut union: Vec<i64> = series
        .iter()
        .flat_map(|s| s.times.iter().copied())
        .collect();
    union.sort_unstable();
    union.dedup();
    let times: Vec<i64> = union
        .iter()
        .copied()
        .filter(|t| maps.iter().all(|m| m.contains_key(t)))
        .collect();
    if times.is_empty() {
        return Err(PrepError::EmptyIntersection);
    }
    let dropped_rows = union.len() - times.len();
    let values = series
        .iter()
        .zip(&maps)
        .map(|(s, m)| times.iter().map(|t| s.values[m[t]]).collect())
        .collect();
    let neg_return = series
        .iter()
        .zip(&maps)
        .map(|(s, m)| times.iter().map(|t| s.neg_return[m[t]]).collect())
        .collect();
    let zones = times.iter().map(|t| Zone::of_time(*t)).collect();
    Ok(Panel {
        instruments: series.iter().map(|s| s.name.clone()).collect(),
        times,
        values,
        neg_return,
        zones,
        dropped_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DAY: i64 = 86_400;

    fn days(n: i64, f: impl Fn(i64, usize) -> f64) -> InstrumentSeries {
        let mut s = InstrumentSeries::new("X", vec![], vec![], vec![]);
        for d in 0..n {
            for slot in 0..SLOTS_PER_DAY {
                let t = d * DAY + slot as i64 * 300;
                s.times.push(t);
                s.values.push(f(d, slot));
                s.neg_return.push(false);
            }
        }
        s
    }

    #[test]
    fn zone_boundaries() {
        assert_eq!(Zone::of_slot(95), Zone::Asia);
        assert_eq!(Zone::of_slot(96), Zone::Europe);
        assert_eq!(Zone::of_slot(191), Zone::Europe);
        assert_eq!(Zone::of_slot(192), Zone::Us);
        assert_eq!(Zone::of_slot(287), Zone::Us);
        assert_eq!(slot_label(95), "07:55");
        assert_eq!(slot_label(192), "16:00");
    }

    #[test]
    fn mean_factor_per_slot() {
        let s = days(2, |d, slot| {
            if slot == 17 {
                [2.0, 4.0][d as usize]
            } else {
                1.0
            }
        });
        let p = diurnal_factors(&s, Statistic::Mean).unwrap();
        assert_eq!(p.factors[17], 3.0);
        assert_eq!(p.factors[0], 1.0);
        let adj = diurnal_adjust(&s, &p);
        assert!((adj.values[17] - 2.0 / 3.0).abs() < 1e-15);
        assert!((adj.values[288 + 17] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_series_factors() {
        let s = days(3, |_, _| 5.0);
        let p = diurnal_factors(&s, Statistic::Mean).unwrap();
        assert!(p.factors.iter().all(|&f| f == 5.0));
        assert!(p.floored.is_empty());
    }

    #[test]
    fn zero_slot_is_floored() {
        let s = days(2, |_, slot| if slot == 3 { 0.0 } else { 1.0 });
        let p = diurnal_factors(&s, Statistic::Mean).unwrap();
        assert_eq!(p.factors[3], FACTOR_FLOOR);
        assert_eq!(p.floored, vec![3]);
        let adj = diurnal_adjust(&s, &p);
        assert_eq!(adj.values[3], 0.0);
    }

    #[test]
    fn empty_slot_is_named() {
        let mut s = days(1, |_, _| 1.0);
        s.times.remove(40);
        s.values.remove(40);
        s.neg_return.remove(40);
        match diurnal_factors(&s, Statistic::Mean) {
            Err(PrepError::EmptySlot { slot, label }) => {
                assert_eq!(slot, 40);
                assert_eq!(label, "03:20");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjustment_is_idempotent() {
        let s = days(4, |d, slot| 0.5 + ((d * 7 + slot as i64 * 13) % 11) as f64);
        let adj = diurnal_adjust(&s, &diurnal_factors(&s, Statistic::Mean).unwrap());
        let again = diurnal_factors(&adj, Statistic::Mean).unwrap();
        assert!(again.factors.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn median_profile() {
        let s = days(3, |d, _| [1.0, 1.0, 10.0][d as usize]);
        assert_eq!(
            diurnal_factors(&s, Statistic::Median).unwrap().factors[0],
            1.0
        );
        assert_eq!(
            diurnal_factors(&s, Statistic::Mean).unwrap().factors[0],
            4.0
        );
    }

    /// Brute-force nearest-rank quantile with exact integer arithmetic:
    /// the smallest value v with #{x <= v} * denom >= (denom - num) * n.
    fn brute_nearest_rank(values: &[f64], num: u64, denom: u64) -> f64 {
        let n = values.len() as u64;
        let mut cands = values.to_vec();
        cands.sort_by(f64::total_cmp);
        for v in cands {
            let count = values.iter().filter(|&&x| x <= v).count() as u64;
            if count * denom >= (denom - num) * n {
                return v;
            }
        }
        unreachable!()
    }

    #[test]
    fn winsorize_ten_thousand() {
        let vals: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        let oracle = brute_nearest_rank(&vals, 5, 10_000);
        assert_eq!(oracle, 9_995.0);
        let mut w = vals.clone();
        let rep = winsorize_values(&mut w, 0.0005);
        assert_eq!(rep.threshold, oracle);
        assert_eq!(rep.clipped, 5);
        assert!(w[9_995..].iter().all(|&v| v == 9_995.0));
        assert_eq!(&w[..9_995], &vals[..9_995]);
    }

    #[test]
    fn winsorize_degenerate() {
        let mut w = vec![3.0; 50];
        assert_eq!(winsorize_values(&mut w, 0.0005).clipped, 0);
        let mut w: Vec<f64> = (0..100).map(f64::from).collect();
        let orig = w.clone();
        assert_eq!(winsorize_values(&mut w, 0.0).clipped, 0);
        assert_eq!(w, orig);
        assert!(winsorize_top(&InstrumentSeries::default(), 0.0005).is_err());
    }

    proptest! {
        #[test]
        fn winsorize_matches_oracle_and_is_idempotent(vals in proptest::collection::vec(0.0f64..100.0, 1..400), num in 0u64..50) {
            let tail = num as f64 / 1000.0;
            let mut once = vals.clone();
            let rep = winsorize_values(&mut once, tail);
            prop_assert_eq!(rep.threshold, brute_nearest_rank(&vals, num, 1000));
            let mut twice = once.clone();
            winsorize_values(&mut twice, tail);
            prop_assert_eq!(&once, &twice);
            // monotone: order preserved
            for i in 0..vals.len() {
                for j in 0..vals.len() {
                    if vals[i] <= vals[j] {
                        prop_assert!(once[i] <= once[j]);
                    }
                }
            }
        }
    }

    fn named(name: &str, times: Vec<i64>) -> InstrumentSeries {
        let n = times.len();
        InstrumentSeries::new(
            name,
            times,
            (0..n).map(|i| i as f64).collect(),
            vec![false; n],
        )
    }

    #[test]
    fn panel_identical_clocks() {
        let t: Vec<i64> = (0..10).map(|i| i * 300).collect();
        let p = build_panel(&[named("A", t.clone()), named("B", t)]).unwrap();
        assert_eq!(p.n_rows(), 10);
        assert_eq!(p.dropped_rows, 0);
        assert!(p.is_zero(0, 0));
    }

    #[test]
    fn panel_drops_missing_rows() {
        let t: Vec<i64> = (0..10).map(|i| i * 300).collect();
        let mut t2 = t.clone();
        t2.remove(4);
        let p = build_panel(&[named("A", t), named("B", t2)]).unwrap();
        assert_eq!(p.n_rows(), 9);
        assert_eq!(p.dropped_rows, 1);
        assert!(!p.times.contains(&1200));
    }

    #[test]
    fn panel_ninety_days() {
        let s = days(90, |_, _| 1.0);
        let p = build_panel(&[
            s.clone(),
            InstrumentSeries {
                name: "Y".into(),
                ..s
            },
        ])
        .unwrap();
        assert_eq!(p.n_rows(), 25_920);
    }

    #[test]
    fn panel_empty_intersection() {
        let r = build_panel(&[named("A", vec![0, 300]), named("B", vec![600])]);
        assert!(matches!(r, Err(PrepError::EmptyIntersection)));
    }

    #[test]
    fn zone_labels_follow_rows() {
        let s = days(1, |_, _| 1.0);
        let p = build_panel(&[s]).unwrap();
        assert_eq!(p.zones[95], Zone::Asia);
        assert_eq!(p.zones[96], Zone::Europe);
        assert_eq!(p.zones[192], Zone::Us);
    }

    fn sample_panel() -> Panel {
        let t: Vec<i64> = (0..600).map(|i| 1_609_459_200 + i * 300).collect();
        let a = InstrumentSeries::new(
            "CB",
            t.clone(),
            (0..600)
                .map(|i| {
                    if i % 17 == 0 {
                        0.0
                    } else {
                        0.1 + (i as f64).sin().abs() / 3.0
                    }
                })
                .collect(),
            (0..600).map(|i| i % 3 == 0).collect(),
        );
        let b = InstrumentSeries::new(
            "BIT",
            t,
            (0..600).map(|i| 1.0 / (1.0 + i as f64)).collect(),
            vec![true; 600],
        );
        build_panel(&[a, b]).unwrap()
    }

    #[test]
    fn panel_csv_round_trip() {
        let p = sample_panel();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = Panel::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn panel_json_round_trip() {
        let p = sample_panel();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = Panel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn panel_csv_rejects_bad_rows_with_line() {
        let text =
            "timestamp,instrument,value,zero,neg_return,zone\n0,A,1.5,0,0,AS\n300,A,0.0,0,0,AS\n";
        match Panel::read_csv(text.as_bytes()) {
            Err(PrepError::CsvSchema { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "ts,instrument,value,zero,neg_return,zone\n";
        assert!(matches!(
            Panel::read_csv(text.as_bytes()),
            Err(PrepError::CsvSchema { line: 1, .. })
        ));
    }
}
