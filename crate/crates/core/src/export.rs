//! Machine-readable exports consumed by the figure renderer.
//!
//! File formats (all carry or imply `schema_version` "1"):
//!
//! * `flowgraph.json`: `{schema_version, kind: "flowgraph", significance_level,
//!   nodes: [{id, label, self_weight}], edges: [{source, target, weight, sign}]}`.
//!   Edges run from the transmitting instrument to the receiving one.
//! * `profile_<instrument>.csv`: `slot,utc,value,count`, 288 rows.
//! * `hist_<instrument>.csv`: `bin,lower,upper,before,after`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prep::{group_by_slot, slot_label, InstrumentSeries, Statistic};
use crate::vmem::{Matrix, VFitResult};
use crate::{SCHEMA_VERSION, SLOTS_PER_DAY};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("slot {slot} ({label}) has no observations")]
    EmptySlot { slot: usize, label: String },
    #[error("bins must be at least 1")]
    NoBins,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: usize,
    pub label: String,
    /// Diagonal entry, or null when not significant.
    pub self_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub schema_version: String,
    pub kind: String,
    pub significance_level: f64,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
}

/// Flow graph of a lag-1 matrix; `a[i][j]` flows from `j` to `i`. Edges
/// are ordered by source, then target.
pub fn flow_graph(
    labels: &[String],
    a: &Matrix,
    significant: &[Vec<bool>],
    level: f64,
) -> FlowGraph {
    let k = labels.len();
    let nodes = (0..k)
        .map(|i| FlowNode {
            id: i,
            label: labels[i].clone(),
            self_weight: significant[i][i].then_some(a[i][i]),
        })
        .collect();
    let mut edges = Vec::new();
    for source in 0..k {
        for target in 0..k {
            if source != target && significant[target][source] && a[target][source].is_finite() {
                let w = a[target][source];
                edges.push(FlowEdge {
                    source,
                    target,
                    weight: w,
                    sign: if w < 0.0 { -1 } else { 1 },
                });
            }
        }
    }
    FlowGraph {
        schema_version: SCHEMA_VERSION.into(),
        kind: "flowgraph".into(),
        significance_level: level,
        nodes,
        edges,
    }
}

pub fn export_flow_graph(fit: &VFitResult, level: f64) -> FlowGraph {
    flow_graph(
        &fit.instruments,
        &fit.params.a[0],
        &fit.significance_at(level),
        level,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub slot: usize,
    pub utc: String,
    pub value: f64,
    pub count: usize,
}

/// Per-slot statistic over the whole series.
pub fn intraday_profile(
    series: &InstrumentSeries,
    statistic: Statistic,
) -> Result<Vec<ProfileRow>, ExportError> {
    let groups = group_by_slot(series);
    (0..SLOTS_PER_DAY)
        .map(|slot| {
            let g = &groups[slot];
            if g.is_empty() {
                return Err(ExportError::EmptySlot {
                    slot,
                    label: slot_label(slot),
                });
            }
            Ok(ProfileRow {
                slot,
                utc: slot_label(slot),
                value: statistic.apply(g),
                count: g.len(),
            })
        })
        .collect()
}

pub fn write_profile_csv<W: Write>(rows: &[ProfileRow], writer: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub before: usize,
    pub after: usize,
}

/// Counts of both series on shared, equally wide bins spanning their joint
/// range. The last bin is closed on the right. With `exclude_zeros`, exact
/// zeros are left out of both the range and the counts.
pub fn export_histogram(
    before: &[f64],
    after: &[f64],
    bins: usize,
    exclude_zeros: bool,
) -> Result<Vec<HistogramRow>, ExportError> {
    if bins == 0 {
        return Err(ExportError::NoBins);
    }
    let keep = |v: &&f64| v.is_finite() && !(exclude_zeros && **v == 0.0);
    let b: Vec<f64> = before.iter().filter(keep).copied().collect();
    let a: Vec<f64> = after.iter().filter(keep).copied().collect();
    let (lo, hi) = b
        .iter()
        .chain(&a)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let index = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    let mut rows: Vec<HistogramRow> = (0..bins)
        .map(|i| HistogramRow {
            bin: i,
            lower: lo + i as f64 * width,
            upper: if i + 1 == bins {
                lo + bins as f64 * width
            } else {
                lo + (i + 1) as f64 * width
            },
            before: 0,
            after: 0,
        })
        .collect();
    for v in b {
        rows[index(v)].before += 1;
    }
    for v in a {
        rows[index(v)].after += 1;
    }
    Ok(rows)
}

pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], writer: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
