//! Tick ingestion and the one-second grid.
//!
//! Trades are bucketed into whole UTC seconds. Each grid second carries the
//! price of the last trade at or before it (file order breaks ties within a
//! second), so untraded seconds produce exactly zero log returns. Seconds
//! before the first observable price are invalid and never back-filled.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::INTERVAL_SECONDS;

const NANOS_PER_SECOND: i64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read tick file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{column}` in header")]
    MissingColumn { column: String },
    #[error("no valid rows ({rejected} rejected)")]
    NoValidRows { rejected: usize },
    #[error("grid range is empty or not second-aligned: start={start}, end={end}")]
    BadRange { start: i64, end: i64 },
    #[error("interval starting at {start} is not covered by the grid")]
    NotCovered { start: i64 },
    #[error("interval starting at {start} touches seconds without an observable price")]
    InvalidWindow { start: i64 },
}

/// A single trade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    /// Nanoseconds since the Unix epoch, UTC.
    pub timestamp_ns: i64,
    pub price: f64,
    /// Traded notional in quote currency.
    pub size: f64,
}

impl TickRecord {
    pub fn second(&self) -> i64 {
        self.timestamp_ns.div_euclid(NANOS_PER_SECOND)
    }
}

/// Column names used to read a tick CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickSchema {
    pub timestamp: String,
    pub price: String,
    pub size: String,
}

impl Default for TickSchema {
    fn default() -> Self {
        Self {
            timestamp: "ts_ns".into(),
            price: "price".into(),
            size: "size".into(),
        }
    }
}

/// A row that could not be used, with its 1-based line number in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct TickSeries {
    /// Sorted by timestamp; equal timestamps keep file order.
    pub records: Vec<TickRecord>,
    pub rejected: Vec<RejectedRow>,
}

impl TickSeries {
    pub fn from_records(mut records: Vec<TickRecord>) -> Self {
        records.sort_by_key(|r| r.timestamp_ns);
        Self {
            records,
            rejected: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

pub fn parse_ticks(path: &Path, schema: &TickSchema) -> Result<TickSeries, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_ticks(file, schema)
}

pub fn read_ticks<R: Read>(reader: R, schema: &TickSchema) -> Result<TickSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                column: name.to_string(),
            })
    };
    let (ts_col, px_col, sz_col) = (
        col(&schema.timestamp)?,
        col(&schema.price)?,
        col(&schema.size)?,
    );

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let parsed = (|| {
            let ts: i64 = field(ts_col)
                .parse()
                .map_err(|_| format!("bad timestamp `{}`", field(ts_col)))?;
            let price: f64 = field(px_col)
                .parse()
                .map_err(|_| format!("bad price `{}`", field(px_col)))?;
            let size: f64 = field(sz_col)
                .parse()
                .map_err(|_| format!("bad size `{}`", field(sz_col)))?;
            if !(price.is_finite() && price > 0.0) {
                return Err(format!("non-positive price {price}"));
            }
            if !(size.is_finite() && size >= 0.0) {
                return Err(format!("negative size {size}"));
            }
            Ok(TickRecord {
                timestamp_ns: ts,
                price,
                size,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    if records.is_empty() {
        return Err(IngestError::NoValidRows {
            rejected: rejected.len(),
        });
    }
    if !rejected.is_empty() {
        log::warn!("{} tick rows rejected", rejected.len());
    }
    let mut series = TickSeries::from_records(records);
    series.rejected = rejected;
    Ok(series)
}

/// Writes ticks in the default `ts_ns,price,size` schema.
pub fn write_ticks<W: Write>(writer: W, ticks: &TickSeries) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ts_ns", "price", "size"])?;
    for r in &ticks.records {
        w.write_record(&[
            r.timestamp_ns.to_string(),
            r.price.to_string(),
            r.size.to_string(),
        ])?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Gapless 1 Hz price grid over `[start, start + len)` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondSeries {
    /// First grid second (Unix seconds).
    pub start: i64,
    /// Forward-filled close price per second; NaN before `first_valid`.
    pub prices: Vec<f64>,
    pub trade_counts: Vec<u32>,
    pub traded_value: Vec<f64>,
    /// Index of the first second with an observable price.
    pub first_valid: usize,
}

impl SecondSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn end(&self) -> i64 {
        self.start + self.prices.len() as i64
    }

    pub fn is_valid(&self, second: i64) -> bool {
        let i = second - self.start;
        i >= self.first_valid as i64 && i < self.prices.len() as i64
    }

    /// One synthetic trade per traded second at that second's close, with
    /// the summed value as size. Aligning these reproduces the grid.
    pub fn implied_ticks(&self) -> TickSeries {
        let records = (0..self.len())
            .filter(|&i| self.trade_counts[i] > 0)
            .map(|i| TickRecord {
                timestamp_ns: (self.start + i as i64) * NANOS_PER_SECOND,
                price: self.prices[i],
                size: self.traded_value[i],
            })
            .collect();
        TickSeries::from_records(records)
    }
}

/// Aligns trades to the grid `[start, end)`; trades before `start` seed the
/// fill and trades at or after `end` are ignored.
pub fn align_to_grid(
    ticks: &TickSeries,
    start: i64,
    end: i64,
) -> Result<SecondSeries, IngestError> {
    if start >= end {
        return Err(IngestError::BadRange { start, end });
    }
    let len = (end - start) as usize;
    let mut prices = vec![f64::NAN; len];
    let mut trade_counts = vec![0u32; len];
    let mut traded_value = vec![0.0; len];
    let mut seed: Option<f64> = None;
    let mut last_in_second: Vec<Option<f64>> = vec![None; len];

    for r in &ticks.records {
        let s = r.second();
        if s < start {
            seed = Some(r.price);
        } else if s < end {
            let i = (s - start) as usize;
            trade_counts[i] += 1;
            traded_value[i] += r.size;
            last_in_second[i] = Some(r.price);
        }
    }

    let mut current = seed;
    let mut first_valid = len;
    for i in 0..len {
        if let Some(p) = last_in_second[i] {
            current = Some(p);
        }
        if let Some(p) = current {
            if first_valid == len {
                first_valid = i;
            }
            prices[i] = p;
        }
    }
    Ok(SecondSeries {
        start,
        prices,
        trade_counts,
        traded_value,
        first_valid,
    })
}

/// The 300 one-second returns of a five-minute interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnWindow {
    /// Interval start (Unix seconds).
    pub start: i64,
    pub returns: Vec<f64>,
    pub active_seconds: usize,
    /// log(close / open), where open is the price standing before the
    /// interval's first second.
    pub interval_return: f64,
    /// Summed traded value inside the interval.
    pub traded_value: f64,
}

impl ReturnWindow {
    pub fn from_returns(returns: Vec<f64>, active_seconds: usize) -> Self {
        let interval_return = returns.iter().sum();
        Self {
            start: 0,
            returns,
            active_seconds,
            interval_return,
            traded_value: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.returns.len()
    }

    pub fn activity_fraction(&self) -> f64 {
        self.active_seconds as f64 / self.returns.len() as f64
    }
}

/// Returns of the interval covering seconds `[interval_start, interval_start + 300)`.
///
/// The first return is taken against the price of second
/// `interval_start - 1`, which must lie inside the grid.
pub fn window_returns(
    series: &SecondSeries,
    interval_start: i64,
) -> Result<ReturnWindow, IngestError> {
    window_returns_n(series, interval_start, INTERVAL_SECONDS as usize)
}

pub fn window_returns_n(
    series: &SecondSeries,
    interval_start: i64,
    n: usize,
) -> Result<ReturnWindow, IngestError> {
    let base = interval_start - 1;
    let last = interval_start + n as i64 - 1;
    if base < series.start || last >= series.end() {
        return Err(IngestError::NotCovered {
            start: interval_start,
        });
    }
    if !series.is_valid(base) {
        return Err(IngestError::InvalidWindow {
            start: interval_start,
        });
    }
    let b = (base - series.start) as usize;
    let p = &series.prices[b..=b + n];
    let returns: Vec<f64> = p.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let active_seconds = series.trade_counts[b + 1..=b + n]
        .iter()
        .filter(|&&c| c > 0)
        .count();
    let traded_value = series.traded_value[b + 1..=b + n].iter().sum();
    Ok(ReturnWindow {
        start: interval_start,
        interval_return: (p[n] / p[0]).ln(),
        returns,
        active_seconds,
        traded_value,
    })
}
