//! End-to-end run: ticks, realised volatility, adjustment, fits, exports.
//!
//! Artifacts are first written as `<name>.partial` and renamed once every
//! stage has succeeded, so a failed run leaves only `.partial` files behind.
//! Artifact contents never include wall-clock time; the manifest carries
//! the optional creation timestamp supplied by the caller.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::export::{self, ExportError};
use crate::ingest::{
    align_to_grid, parse_ticks, window_returns, IngestError, TickSchema, TickSeries,
};
use crate::mem::{fit_logmem, FitOptions, FitResult, MemData, MemSpec};
use crate::prep::{
    build_panel, diurnal_adjust, diurnal_factors, winsorize_top, DiurnalProfile, InstrumentSeries,
    Panel, Statistic, WinsorReport,
};
use crate::rvol::{realised_volatility, RvConfig};
use crate::sim::{simulate_ticks, simulate_vlogmem, TickSimConfig};
use crate::vmem::{fit_vlogmem, VParamSet, VSpec};
use crate::{INTERVAL_SECONDS, SCHEMA_VERSION, SLOTS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Rv,
    Adjust,
    FitUni,
    FitMulti,
    Export,
    Write,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string));
        f.write_str(&s.unwrap_or_default())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {message}")]
    Io { stage: Stage, message: String },
    #[error("stage {stage}: {message}")]
    Schema { stage: Stage, message: String },
    #[error("stage {stage}: {message}")]
    Estimation { stage: Stage, message: String },
}

impl PipelineError {
    pub fn stage(&self) -> Stage {
        match self {
            Self::Io { stage, .. }
            | Self::Schema { stage, .. }
            | Self::Estimation { stage, .. } => *stage,
        }
    }

    fn io(stage: Stage, e: impl std::fmt::Display) -> Self {
        Self::Io {
            stage,
            message: e.to_string(),
        }
    }

    fn schema(stage: Stage, e: impl std::fmt::Display) -> Self {
        Self::Schema {
            stage,
            message: e.to_string(),
        }
    }

    fn estimation(stage: Stage, e: impl std::fmt::Display) -> Self {
        Self::Estimation {
            stage,
            message: e.to_string(),
        }
    }
}

fn ingest_error(e: IngestError) -> PipelineError {
    match e {
        IngestError::Io { .. } => PipelineError::io(Stage::Ingest, e),
        other => PipelineError::schema(Stage::Ingest, other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentInput {
    pub name: String,
    pub ticks: PathBuf,
    #[serde(default)]
    pub schema: Option<TickSchema>,
}

/// Simulated tick data: a vLogMEM drives per-interval volatility
/// multipliers, on top of a sinusoidal intraday pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub instruments: Vec<String>,
    pub sigma_annual: f64,
    pub arrival_prob: f64,
    pub own_persistence: f64,
    /// Lag-1 effect of the first instrument on every other one.
    pub leader_spillover: f64,
    pub long_persistence: f64,
    pub s: f64,
    /// Relative amplitude of the intraday volatility cycle.
    pub diurnal_amplitude: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            instruments: vec!["LEAD".into(), "FOLLOW".into()],
            sigma_annual: 0.7,
            arrival_prob: 0.6,
            own_persistence: 0.3,
            leader_spillover: 0.15,
            long_persistence: 0.5,
            s: 0.3,
            diurnal_amplitude: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub p: usize,
    pub q: usize,
    pub zones: bool,
    pub level: f64,
    pub asymmetry: bool,
    pub zero_augmented: bool,
    pub starts: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            p: 1,
            q: 1,
            zones: false,
            level: 0.01,
            asymmetry: true,
            zero_augmented: true,
            starts: 3,
        }
    }
}

impl ModelConfig {
    pub fn mem_spec(&self) -> MemSpec {
        MemSpec {
            asymmetry: self.asymmetry,
            zero_augmented: self.zero_augmented,
            ..MemSpec::new(self.p, self.q)
        }
    }

    pub fn vspec(&self) -> VSpec {
        VSpec {
            mem: self.mem_spec(),
            zones: self.zones,
            cross_terms: true,
            level: self.level,
        }
    }
}

/// One run, read from a single JSON file. Command-line flags override
/// individual fields after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub instruments: Vec<InstrumentInput>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// RFC 3339, inclusive.
    pub start: String,
    /// RFC 3339, exclusive.
    pub end: String,
    #[serde(default)]
    pub rv: RvConfig,
    #[serde(default = "default_tail")]
    pub winsor_tail: f64,
    #[serde(default)]
    pub model: ModelConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_tail() -> f64 {
    0.0005
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::io(Stage::Config, format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            PipelineError::schema(Stage::Config, format!("{}: {e}", path.display()))
        })?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        for inst in &mut cfg.instruments {
            if inst.ticks.is_relative() {
                inst.ticks = base.join(&inst.ticks);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Start and end as Unix seconds.
    pub fn range(&self) -> Result<(i64, i64), PipelineError> {
        let (a, b) = (parse_time(&self.start)?, parse_time(&self.end)?);
        if a >= b {
            return Err(PipelineError::schema(
                Stage::Config,
                "date range is empty or reversed",
            ));
        }
        if a.rem_euclid(INTERVAL_SECONDS) != 0 || b.rem_euclid(INTERVAL_SECONDS) != 0 {
            return Err(PipelineError::schema(
                Stage::Config,
                "date range must align to five-minute boundaries",
            ));
        }
        Ok((a, b))
    }

    pub fn names(&self) -> Vec<String> {
        match &self.synthetic {
            Some(s) => s.instruments.clone(),
            None => self.instruments.iter().map(|i| i.name.clone()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.range()?;
        let names = self.names();
        if names.is_empty() {
            return Err(PipelineError::schema(
                Stage::Config,
                "no instruments configured",
            ));
        }
        if self.synthetic.is_some() && !self.instruments.is_empty() {
            return Err(PipelineError::schema(
                Stage::Config,
                "give either instruments or synthetic, not both",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(PipelineError::schema(
                    Stage::Config,
                    format!("duplicate instrument {n:?}"),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.winsor_tail) {
            return Err(PipelineError::schema(
                Stage::Config,
                "winsor_tail must lie in [0, 1)",
            ));
        }
        self.model
            .mem_spec()
            .validate()
            .map_err(|e| PipelineError::schema(Stage::Config, e))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, leaving out the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

/// RFC 3339 timestamp to Unix seconds.
pub fn parse_time(s: &str) -> Result<i64, PipelineError> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc).timestamp())
        .map_err(|e| PipelineError::schema(Stage::Config, format!("bad timestamp {s:?}: {e}")))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Five-minute realised volatility and traded value of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSeries {
    pub rv: InstrumentSeries,
    pub volume: InstrumentSeries,
    pub zeroed: usize,
    pub invalid_windows: usize,
}

/// Realised volatility for every valid interval in `[start, end)`.
pub fn interval_series(
    name: &str,
    ticks: &TickSeries,
    start: i64,
    end: i64,
    cfg: &RvConfig,
) -> Result<IntervalSeries, IngestError> {
    // one extra second in front supplies the first interval's opening price
    let grid = align_to_grid(ticks, start - 1, end)?;
    let mut rv = InstrumentSeries::new(name, vec![], vec![], vec![]);
    let mut volume = InstrumentSeries::new(name, vec![], vec![], vec![]);
    let mut zeroed = 0;
    let mut invalid = 0;
    let mut t = start;
    while t + INTERVAL_SECONDS <= end {
        match window_returns(&grid, t) {
            Ok(w) => {
                let obs = realised_volatility(&w, cfg);
                zeroed += obs.is_zeroed as usize;
                rv.times.push(t);
                rv.values.push(obs.value);
                rv.neg_return.push(obs.interval_return_negative);
                volume.times.push(t);
                volume.values.push(w.traded_value);
                volume.neg_return.push(obs.interval_return_negative);
            }
            Err(IngestError::InvalidWindow { .. }) => invalid += 1,
            Err(e) => return Err(e),
        }
        t += INTERVAL_SECONDS;
    }
    Ok(IntervalSeries {
        rv,
        volume,
        zeroed,
        invalid_windows: invalid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjusted {
    pub series: InstrumentSeries,
    pub profile: DiurnalProfile,
    pub winsor: WinsorReport,
}

/// Diurnal adjustment with full-sample factors, then winsorizing.
pub fn adjust(
    series: &InstrumentSeries,
    statistic: Statistic,
    tail: f64,
) -> Result<Adjusted, crate::prep::PrepError> {
    let profile = diurnal_factors(series, statistic)?;
    let adjusted = diurnal_adjust(series, &profile);
    let (series, winsor) = winsorize_top(&adjusted, tail)?;
    Ok(Adjusted {
        series,
        profile,
        winsor,
    })
}

/// Simulated ticks for every synthetic instrument. Instrument `i` uses tick
/// seed `seed + 1 + i`; the driving vLogMEM uses `seed`.
pub fn synthetic_ticks(
    cfg: &SyntheticConfig,
    start: i64,
    end: i64,
    seed: u64,
) -> Result<Vec<TickSeries>, PipelineError> {
    let k = cfg.instruments.len();
    let n = ((end - start) / INTERVAL_SECONDS) as usize;
    let mut params = VParamSet::zeros(cfg.instruments.clone(), 1, 1);
    for i in 0..k {
        params.a[0][i][i] = cfg.own_persistence;
        if i > 0 {
            params.a[0][i][0] = cfg.leader_spillover;
        }
        params.b[0][i] = cfg.long_persistence;
        params.s[i] = cfg.s;
    }
    let levels = simulate_vlogmem(&params, n, start, seed)
        .map_err(|e| PipelineError::schema(Stage::Ingest, e))?;
    levels
        .iter()
        .enumerate()
        .map(|(i, lv)| {
            let mult: Vec<f64> = lv
                .values
                .iter()
                .zip(&lv.times)
                .map(|(x, t)| {
                    let slot = crate::prep::slot_of(*t) as f64;
                    let phase = 2.0 * std::f64::consts::PI * slot / SLOTS_PER_DAY as f64;
                    x * (1.0 + cfg.diurnal_amplitude * phase.sin())
                })
                .collect();
            let tc = TickSimConfig {
                seed: seed.wrapping_add(1 + i as u64),
                start,
                seconds: (end - start) as usize,
                sigma_annual: cfg.sigma_annual,
                arrival_prob: cfg.arrival_prob,
                interval_vol: Some(mult),
                ..TickSimConfig::default()
            };
            simulate_ticks(&tc).map_err(|e| PipelineError::schema(Stage::Ingest, e))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub created_at: Option<String>,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub converged: bool,
    pub manifest: Manifest,
}

/// Buffers artifacts as `.partial` files and finalises them together.
struct Writer {
    dir: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
}

impl Writer {
    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), PipelineError> {
        let path = self.dir.join(format!("{name}.partial"));
        fs::write(&path, &bytes)
            .map_err(|e| PipelineError::io(Stage::Write, format!("{}: {e}", path.display())))?;
        self.files.insert(name.to_string(), bytes);
        Ok(())
    }

    fn put_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| PipelineError::io(Stage::Write, e))?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    fn finish(self) -> Result<Vec<ArtifactEntry>, PipelineError> {
        let mut out = Vec::new();
        for (name, bytes) in &self.files {
            let from = self.dir.join(format!("{name}.partial"));
            let to = self.dir.join(name);
            fs::rename(&from, &to)
                .map_err(|e| PipelineError::io(Stage::Write, format!("{}: {e}", to.display())))?;
            out.push(ArtifactEntry {
                file: name.clone(),
                sha256: hex(&Sha256::digest(bytes)),
            });
        }
        Ok(out)
    }
}

fn map_par<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs every stage. Non-convergence is reported through
/// [`RunSummary::converged`], not as an error.
pub fn run_pipeline(
    cfg: &RunConfig,
    created_at: Option<String>,
) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let (start, end) = cfg.range()?;
    let mut warnings: Vec<String> = cfg.rv.warnings();
    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        PipelineError::io(Stage::Write, format!("{}: {e}", cfg.output_dir.display()))
    })?;
    let mut out = Writer {
        dir: cfg.output_dir.clone(),
        files: BTreeMap::new(),
    };

    let names = cfg.names();
    let ticks: Vec<TickSeries> = match &cfg.synthetic {
        Some(s) => synthetic_ticks(s, start, end, cfg.seed)?,
        None => map_par(&cfg.instruments, |inst| {
            parse_ticks(
                &inst.ticks,
                inst.schema.as_ref().unwrap_or(&TickSchema::default()),
            )
        })
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(ingest_error)?,
    };
    for (n, t) in names.iter().zip(&ticks) {
        if t.rejected_count() > 0 {
            warnings.push(format!(
                "{n}: {} malformed tick rows rejected",
                t.rejected_count()
            ));
        }
    }

    let pairs: Vec<(&String, &TickSeries)> = names.iter().zip(&ticks).collect();
    let intervals: Vec<IntervalSeries> =
        map_par(&pairs, |(n, t)| interval_series(n, t, start, end, &cfg.rv))
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(|e| match e {
                IngestError::Io { .. } => PipelineError::io(Stage::Rv, e),
                other => PipelineError::schema(Stage::Rv, other),
            })?;

    let adjusted: Vec<Adjusted> = map_par(&intervals, |s| {
        adjust(&s.rv, Statistic::Mean, cfg.winsor_tail)
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(|e| PipelineError::estimation(Stage::Adjust, e))?;
    let vol_adjusted: Vec<Adjusted> = map_par(&intervals, |s| {
        adjust(&s.volume, Statistic::Median, cfg.winsor_tail)
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(|e| PipelineError::estimation(Stage::Adjust, e))?;
    for (n, a) in names.iter().zip(&adjusted) {
        if !a.profile.floored.is_empty() {
            warnings.push(format!(
                "{n}: {} diurnal slots floored",
                a.profile.floored.len()
            ));
        }
    }
    let panel = build_panel(
        &adjusted
            .iter()
            .map(|a| a.series.clone())
            .collect::<Vec<_>>(),
    )
    .map_err(|e| PipelineError::estimation(Stage::Adjust, e))?;
    if panel.dropped_rows > 0 {
        warnings.push(format!(
            "{} panel rows dropped by the inner join",
            panel.dropped_rows
        ));
    }

    let mut panel_csv = Vec::new();
    panel
        .write_csv(&mut panel_csv)
        .map_err(|e| PipelineError::io(Stage::Write, e))?;
    out.put("panel.csv", panel_csv)?;
    out.put_json("panel.json", &panel.to_json())?;

    let opts = FitOptions {
        starts: cfg.model.starts,
        seed: cfg.seed,
        ..FitOptions::default()
    };
    let spec = cfg.model.mem_spec();
    let uni: Vec<FitResult> = map_par(&(0..panel.n_instruments()).collect::<Vec<_>>(), |&k| {
        fit_logmem(
            &MemData::new(panel.values[k].clone(), panel.neg_return[k].clone()),
            &spec,
            &opts,
        )
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(|e| PipelineError::estimation(Stage::FitUni, e))?;
    let mut converged = true;
    for (n, f) in names.iter().zip(&uni) {
        converged &= f.converged;
        out.put_json(&format!("fit_{n}.json"), f)?;
    }

    let multi = if panel.n_instruments() >= 2 {
        let v = fit_vlogmem(&panel, &cfg.model.vspec(), &opts)
            .map_err(|e| PipelineError::estimation(Stage::FitMulti, e))?;
        converged &= v.converged;
        out.put_json("vfit.json", &v)?;
        out.put_json("spillover.json", &v.spillover)?;
        out.put_json(
            "flowgraph.json",
            &export::export_flow_graph(&v, cfg.model.level),
        )?;
        Some(v)
    } else {
        None
    };
    if multi.is_none() {
        warnings.push("single instrument: multivariate stage skipped".into());
    }

    for (i, n) in names.iter().enumerate() {
        let rows =
            export::intraday_profile(&intervals[i].rv, Statistic::Mean).map_err(export_err)?;
        let mut buf = Vec::new();
        export::write_profile_csv(&rows, &mut buf).map_err(export_err)?;
        out.put(&format!("profile_{n}.csv"), buf)?;
        let rows = export::intraday_profile(&intervals[i].volume, Statistic::Median)
            .map_err(export_err)?;
        let mut buf = Vec::new();
        export::write_profile_csv(&rows, &mut buf).map_err(export_err)?;
        out.put(&format!("volume_profile_{n}.csv"), buf)?;
        let hist = export::export_histogram(
            &intervals[i].rv.values,
            &adjusted[i].series.values,
            50,
            true,
        )
        .map_err(export_err)?;
        let mut buf = Vec::new();
        export::write_histogram_csv(&hist, &mut buf).map_err(export_err)?;
        out.put(&format!("hist_{n}.csv"), buf)?;
    }
    out.put_json(
        "diurnal.json",
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "diurnal",
            "instruments": names,
            "rv": adjusted.iter().map(|a| (&a.profile, &a.winsor)).collect::<Vec<_>>(),
            "volume": vol_adjusted.iter().map(|a| (&a.profile, &a.winsor)).collect::<Vec<_>>(),
            "zeroed_intervals": intervals.iter().map(|s| s.zeroed).collect::<Vec<_>>(),
            "invalid_windows": intervals.iter().map(|s| s.invalid_windows).collect::<Vec<_>>(),
        }),
    )?;

    let dir = out.dir.clone();
    let artifacts = out.finish()?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        created_at,
        converged,
        warnings,
        artifacts,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&manifest).map_err(|e| PipelineError::io(Stage::Write, e))?;
    bytes.push(b'\n');
    fs::write(dir.join("manifest.json"), bytes).map_err(|e| PipelineError::io(Stage::Write, e))?;
    Ok(RunSummary {
        output_dir: dir,
        converged,
        manifest,
    })
}

fn export_err(e: ExportError) -> PipelineError {
    PipelineError::estimation(Stage::Export, e)
}

/// Panel of the adjusted series, for callers that stop before fitting.
pub fn panel_from(adjusted: &[Adjusted]) -> Result<Panel, crate::prep::PrepError> {
    build_panel(
        &adjusted
            .iter()
            .map(|a| a.series.clone())
            .collect::<Vec<_>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> RunConfig {
        RunConfig {
            instruments: vec![],
            synthetic: Some(SyntheticConfig::default()),
            start: "2021-01-01T00:00:00Z".into(),
            end: "2021-01-03T00:00:00Z".into(),
            rv: RvConfig::default(),
            winsor_tail: 0.0005,
            model: ModelConfig {
                starts: 1,
                ..ModelConfig::default()
            },
            output_dir: dir.to_path_buf(),
            seed: 7,
        }
    }

    #[test]
    fn range_checks() {
        let mut c = config(Path::new("/tmp"));
        assert_eq!(
            c.range().unwrap(),
            (1_609_459_200, 1_609_459_200 + 2 * 86_400)
        );
        c.end = c.start.clone();
        assert!(c.range().is_err());
        c.end = "2021-01-01T00:01:00Z".into();
        assert!(c.range().is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut c = config(Path::new("/tmp"));
        c.synthetic.as_mut().unwrap().instruments = vec!["A".into(), "A".into()];
        assert!(matches!(
            c.validate(),
            Err(PipelineError::Schema {
                stage: Stage::Config,
                ..
            })
        ));
    }

    #[test]
    fn missing_tick_file_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path());
        c.synthetic = None;
        c.instruments = vec![InstrumentInput {
            name: "X".into(),
            ticks: dir.path().join("nope.csv"),
            schema: None,
        }];
        let err = run_pipeline(&c, None).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::Io {
                stage: Stage::Ingest,
                ..
            }
        ));
        assert!(err.to_string().contains("nope.csv"));
    }

    #[test]
    fn hash_is_stable() {
        let c = config(Path::new("/tmp"));
        assert_eq!(c.hash(), c.clone().hash());
        let mut d = c.clone();
        d.seed = 8;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn synthetic_interval_series() {
        let c = config(Path::new("/tmp"));
        let (s, e) = c.range().unwrap();
        let ticks = synthetic_ticks(c.synthetic.as_ref().unwrap(), s, s + 3600, 1).unwrap();
        let iv = interval_series("LEAD", &ticks[0], s, s + 3600, &c.rv).unwrap();
        assert_eq!(iv.rv.len(), 12);
        assert_eq!(iv.invalid_windows, 0);
        assert!(iv.rv.values.iter().all(|v| *v > 0.0));
        assert!(e > s);
    }
}
