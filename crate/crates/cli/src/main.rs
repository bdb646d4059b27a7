use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use volflow_core::export;
use volflow_core::ingest::{align_to_grid, parse_ticks, write_ticks, TickSchema};
use volflow_core::mem::{
    fit_logmem, FitOptions, MemData, MemError, MemSpec, PPlusPolicy, ParamSet,
};
use volflow_core::pipeline::{self, interval_series, parse_time, PipelineError, RunConfig};
use volflow_core::prep::{build_panel, Panel, Statistic, Zone};
use volflow_core::rvol::{Estimator, RvConfig};
use volflow_core::sim::{simulate_logmem, simulate_ticks, TickSimConfig};
use volflow_core::vmem::{fit_vlogmem, Shock, VFitResult, VSpec, VmemError};

/// Thread count for the parallel stages.
const THREADS_ENV: &str = "VOLFLOW_THREADS";

#[derive(Parser)]
#[command(
    name = "volflow",
    version,
    about = "Realised volatility panels and LogMEM spillover estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a tick file to the one-second grid and write it as CSV.
    Ingest(IngestArgs),
    /// Five-minute realised volatility for one or more tick files.
    Rv(RvArgs),
    /// Diurnal adjustment and winsorizing of a panel.
    Adjust(AdjustArgs),
    /// Univariate LogMEM fit per instrument.
    FitUni(FitArgs),
    /// Equation-by-equation vLogMEM fit.
    FitMulti(FitArgs),
    /// vLogMEM fit with time-of-day zone interactions.
    FitIntraday(FitArgs),
    /// To/From sums of a multivariate fit.
    Spillover(SpilloverArgs),
    /// One-step response of every target to a shock in one source.
    Shock(ShockArgs),
    /// Simulated ticks or LogMEM series.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Flow graph, intraday profile or histogram files.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Full pipeline from a JSON config.
    Run(RunArgs),
}

#[derive(Args)]
struct Schema {
    #[arg(long, default_value = "ts_ns")]
    ts_col: String,
    #[arg(long, default_value = "price")]
    price_col: String,
    #[arg(long, default_value = "size")]
    size_col: String,
}

impl Schema {
    fn get(&self) -> TickSchema {
        TickSchema {
            timestamp: self.ts_col.clone(),
            price: self.price_col.clone(),
            size: self.size_col.clone(),
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    ticks: PathBuf,
    /// RFC 3339 grid start.
    #[arg(long)]
    start: String,
    /// RFC 3339 grid end (exclusive).
    #[arg(long)]
    end: String,
    #[command(flatten)]
    schema: Schema,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RvArgs {
    /// `NAME=PATH`, repeatable.
    #[arg(long = "ticks", required = true)]
    ticks: Vec<String>,
    #[arg(long)]
    start: String,
    #[arg(long)]
    end: String,
    #[arg(long, default_value = "preavg")]
    estimator: Estimator,
    #[arg(long, default_value_t = 0.4)]
    theta: f64,
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long)]
    debias: bool,
    /// Write traded value instead of volatility.
    #[arg(long)]
    volume: bool,
    #[command(flatten)]
    schema: Schema,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdjustArgs {
    /// Panel CSV or JSON.
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value = "mean")]
    statistic: Statistic,
    #[arg(long, default_value_t = 0.0005)]
    tail: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    panel: PathBuf,
    /// Restrict to these instruments (repeatable).
    #[arg(long = "instrument")]
    instruments: Vec<String>,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long)]
    no_asymmetry: bool,
    #[arg(long)]
    no_zero_augmentation: bool,
    /// Fix p_plus instead of using the empirical positive fraction.
    #[arg(long)]
    p_plus: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    level: f64,
    #[arg(long, default_value_t = 3)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl FitArgs {
    fn spec(&self) -> MemSpec {
        MemSpec {
            p: self.p,
            q: self.q,
            asymmetry: !self.no_asymmetry,
            zero_augmented: !self.no_zero_augmentation,
            p_plus_policy: self
                .p_plus
                .map_or(PPlusPolicy::Empirical, PPlusPolicy::Fixed),
        }
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            starts: self.starts,
            seed: self.seed,
            ..FitOptions::default()
        }
    }

    fn panel(&self) -> Result<Panel> {
        let panel = read_panel(&self.panel)?;
        if self.instruments.is_empty() {
            return Ok(panel);
        }
        panel
            .select(&self.instruments)
            .with_context(|| format!("unknown instrument among {:?}", self.instruments))
    }
}

#[derive(Args)]
struct SpilloverArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Defaults to the level stored in the fit.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShockArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    source: String,
    /// One conditional standard deviation of the source's innovation.
    #[arg(long, conflicts_with = "multiplier")]
    sd: bool,
    #[arg(long)]
    multiplier: Option<f64>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Tick file from a one-second diffusion.
    Ticks(SimTicksArgs),
    /// Univariate LogMEM(1,1) series as a one-instrument panel CSV.
    Mem(SimMemArgs),
}

#[derive(Args)]
struct SimTicksArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "2021-01-01T00:00:00Z")]
    start: String,
    #[arg(long, default_value_t = 86_400)]
    seconds: usize,
    #[arg(long, default_value_t = 30_000.0)]
    price: f64,
    #[arg(long, default_value_t = 0.7)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    jump_intensity: f64,
    #[arg(long, default_value_t = 10.0)]
    jump_size: f64,
    #[arg(long, default_value_t = 1.0)]
    arrival: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimMemArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value = "2021-01-01T00:00:00Z")]
    start: String,
    #[arg(long, default_value = "SIM")]
    name: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    omega: f64,
    #[arg(long, default_value_t = 0.35, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.03, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0.55, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.28)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    p_plus: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExportCommand {
    /// Flow graph JSON of a multivariate fit.
    Flowgraph {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 288-slot intraday profile CSV.
    Profile {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        instrument: String,
        #[arg(long, default_value = "mean")]
        statistic: Statistic,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Before/after histogram CSV on shared bins.
    Histogram {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        instrument: String,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        exclude_zeros: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the config's significance level.
    #[arg(long)]
    level: Option<f64>,
}

/// Outcome of a command that finished without an error.
enum Outcome {
    Ok,
    NotConverged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: estimation did not converge; results are flagged");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

/// 1 for estimation failures, 2 for I/O and schema problems.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(p) = cause.downcast_ref::<PipelineError>() {
            return if matches!(p, PipelineError::Estimation { .. }) {
                1
            } else {
                2
            };
        }
        if cause.is::<MemError>() || cause.is::<VmemError>() {
            return 1;
        }
    }
    2
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Rv(a) => rv(a),
        Command::Adjust(a) => adjust(a),
        Command::FitUni(a) => fit_uni(a),
        Command::FitMulti(a) => fit_multi(a, false),
        Command::FitIntraday(a) => fit_multi(a, true),
        Command::Spillover(a) => spillover(a),
        Command::Shock(a) => shock(a),
        Command::Simulate(c) => simulate(c),
        Command::Export(c) => export_cmd(c),
        Command::Run(a) => run(a),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_panel(path: &Path) -> Result<Panel> {
    let file = File::open(path).with_context(|| format!("cannot read panel {}", path.display()))?;
    let panel = if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        Panel::from_json(&v)
    } else {
        Panel::read_csv(BufReader::new(file))
    };
    panel.with_context(|| format!("bad panel file {}", path.display()))
}

fn write_panel(panel: &Panel, out: &Option<PathBuf>) -> Result<()> {
    if out
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "json"))
    {
        return write_json(out, &panel.to_json());
    }
    let mut w = output(out)?;
    panel.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_fit(path: &Path) -> Result<VFitResult> {
    let file = File::open(path).with_context(|| format!("cannot read fit {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{} is not a multivariate fit", path.display()))
}

fn ingest(a: IngestArgs) -> Result<Outcome> {
    let (start, end) = (parse_time(&a.start)?, parse_time(&a.end)?);
    let ticks = parse_ticks(&a.ticks, &a.schema.get())?;
    if ticks.rejected_count() > 0 {
        log::warn!("{} malformed rows rejected", ticks.rejected_count());
    }
    let grid = align_to_grid(&ticks, start, end)?;
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    w.write_record(["second", "price", "valid", "trades", "traded_value"])?;
    for i in 0..grid.len() {
        let sec = grid.start + i as i64;
        w.write_record([
            sec.to_string(),
            if grid.is_valid(sec) {
                grid.prices[i].to_string()
            } else {
                String::new()
            },
            (grid.is_valid(sec) as u8).to_string(),
            grid.trade_counts[i].to_string(),
            grid.traded_value[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

fn rv(a: RvArgs) -> Result<Outcome> {
    let (start, end) = (parse_time(&a.start)?, parse_time(&a.end)?);
    let cfg = RvConfig {
        estimator: a.estimator,
        theta: a.theta,
        activity_threshold: a.threshold,
        debias: a.debias,
        ..RvConfig::default()
    };
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    let mut series = Vec::new();
    for spec in &a.ticks {
        let (name, path) = spec
            .split_once('=')
            .with_context(|| format!("--ticks expects NAME=PATH, got {spec:?}"))?;
        let ticks = parse_ticks(Path::new(path), &a.schema.get())?;
        let iv = interval_series(name, &ticks, start, end, &cfg)?;
        if iv.invalid_windows > 0 {
            log::warn!(
                "{name}: {} intervals without a price dropped",
                iv.invalid_windows
            );
        }
        series.push(if a.volume { iv.volume } else { iv.rv });
    }
    write_panel(&build_panel(&series)?, &a.out)?;
    Ok(Outcome::Ok)
}

fn adjust(a: AdjustArgs) -> Result<Outcome> {
    let panel = read_panel(&a.panel)?;
    let mut out = Vec::new();
    for k in 0..panel.n_instruments() {
        let adj = pipeline::adjust(&panel.series(k), a.statistic, a.tail)?;
        if adj.winsor.clipped > 0 {
            log::info!(
                "{}: {} values winsorized at {}",
                panel.instruments[k],
                adj.winsor.clipped,
                adj.winsor.threshold
            );
        }
        out.push(adj.series);
    }
    write_panel(&build_panel(&out)?, &a.out)?;
    Ok(Outcome::Ok)
}

fn fit_uni(a: FitArgs) -> Result<Outcome> {
    let panel = a.panel()?;
    let (spec, opts) = (a.spec(), a.options());
    let mut fits = serde_json::Map::new();
    let mut converged = true;
    for k in 0..panel.n_instruments() {
        let data = MemData::new(panel.values[k].clone(), panel.neg_return[k].clone());
        let f = fit_logmem(&data, &spec, &opts)
            .with_context(|| format!("fitting {}", panel.instruments[k]))?;
        converged &= f.converged;
        fits.insert(panel.instruments[k].clone(), serde_json::to_value(&f)?);
    }
    write_json(&a.out, &fits)?;
    Ok(if converged {
        Outcome::Ok
    } else {
        Outcome::NotConverged
    })
}

fn fit_multi(a: FitArgs, zones: bool) -> Result<Outcome> {
    let panel = a.panel()?;
    let spec = VSpec {
        mem: a.spec(),
        zones,
        cross_terms: true,
        level: a.level,
    };
    let fit = fit_vlogmem(&panel, &spec, &a.options())?;
    write_json(&a.out, &fit)?;
    Ok(if fit.converged {
        Outcome::Ok
    } else {
        Outcome::NotConverged
    })
}

fn spillover(a: SpilloverArgs) -> Result<Outcome> {
    let fit = read_fit(&a.fit)?;
    let level = a.level.unwrap_or(fit.spec.level);
    let mut summary = serde_json::to_value(fit.spillover_summary(level))?;
    if fit.params.zones.is_some() {
        let mut zones = serde_json::Map::new();
        for z in Zone::ALL {
            zones.insert(
                z.code().into(),
                serde_json::to_value(fit.zone_totals(z, level)?)?,
            );
        }
        summary["zone_totals"] = zones.into();
    }
    write_json(&a.out, &summary)?;
    Ok(Outcome::Ok)
}

fn shock(a: ShockArgs) -> Result<Outcome> {
    let fit = read_fit(&a.fit)?;
    let response = match (a.sd, a.multiplier) {
        (true, _) => fit.shock_response_sd(&a.source)?,
        (false, Some(m)) => fit.shock_response(&a.source, Shock::Multiplier(m))?,
        (false, None) => bail!("give --sd or --multiplier"),
    };
    if a.json {
        let rows: Vec<_> = fit
            .instruments
            .iter()
            .zip(&response)
            .map(|(t, r)| serde_json::json!({"target": t, "relative_increase": r}))
            .collect();
        write_json(
            &None,
            &serde_json::json!({"source": a.source, "responses": rows}),
        )?;
    } else {
        let mut out = io::stdout().lock();
        writeln!(out, "{:<12} {:>10}", "target", "percent")?;
        for (t, r) in fit.instruments.iter().zip(&response) {
            writeln!(out, "{:<12} {:>10.2}", t, 100.0 * r)?;
        }
    }
    Ok(Outcome::Ok)
}

fn simulate(c: SimulateCommand) -> Result<Outcome> {
    match c {
        SimulateCommand::Ticks(a) => {
            let cfg = TickSimConfig {
                seed: a.seed,
                start: parse_time(&a.start)?,
                seconds: a.seconds,
                initial_price: a.price,
                sigma_annual: a.sigma,
                jump_intensity: a.jump_intensity,
                jump_size: a.jump_size,
                arrival_prob: a.arrival,
                ..TickSimConfig::default()
            };
            let ticks = simulate_ticks(&cfg).map_err(anyhow::Error::msg)?;
            write_ticks(output(&a.out)?, &ticks)?;
        }
        SimulateCommand::Mem(a) => {
            let params =
                ParamSet::logmem11(a.omega, a.alpha, a.alpha0, a.gamma, a.beta, a.s, a.p_plus);
            params.validate()?;
            for w in params.warnings() {
                log::warn!("{w}");
            }
            let d = simulate_logmem(&params, a.n, a.seed);
            let start = parse_time(&a.start)?;
            let times = (0..a.n as i64)
                .map(|t| start + t * volflow_core::INTERVAL_SECONDS)
                .collect();
            let s = volflow_core::prep::InstrumentSeries::new(a.name, times, d.x, d.neg_return);
            write_panel(&build_panel(&[s])?, &a.out)?;
        }
    }
    Ok(Outcome::Ok)
}

fn export_cmd(c: ExportCommand) -> Result<Outcome> {
    match c {
        ExportCommand::Flowgraph { fit, level, out } => {
            let fit = read_fit(&fit)?;
            write_json(&out, &export::export_flow_graph(&fit, level))?;
        }
        ExportCommand::Profile {
            panel,
            instrument,
            statistic,
            out,
        } => {
            let panel = read_panel(&panel)?;
            let k = panel
                .index_of(&instrument)
                .with_context(|| format!("unknown instrument {instrument:?}"))?;
            let rows = export::intraday_profile(&panel.series(k), statistic)?;
            export::write_profile_csv(&rows, output(&out)?)?;
        }
        ExportCommand::Histogram {
            before,
            after,
            instrument,
            bins,
            exclude_zeros,
            out,
        } => {
            let column = |path: &Path| -> Result<Vec<f64>> {
                let p = read_panel(path)?;
                let k = p.index_of(&instrument).with_context(|| {
                    format!("{} has no instrument {instrument:?}", path.display())
                })?;
                Ok(p.values[k].clone())
            };
            let rows =
                export::export_histogram(&column(&before)?, &column(&after)?, bins, exclude_zeros)?;
            export::write_histogram_csv(&rows, output(&out)?)?;
        }
    }
    Ok(Outcome::Ok)
}

fn run(a: RunArgs) -> Result<Outcome> {
    let mut cfg = RunConfig::from_path(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.output_dir {
        cfg.output_dir = d;
    }
    if let Some(l) = a.level {
        cfg.model.level = l;
    }
    let created = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let summary = pipeline::run_pipeline(&cfg, Some(created))?;
    for w in &summary.manifest.warnings {
        log::warn!("{w}");
    }
    eprintln!(
        "wrote {} artifacts to {}",
        summary.manifest.artifacts.len() + 1,
        summary.output_dir.display()
    );
    Ok(if summary.converged {
        Outcome::Ok
    } else {
        Outcome::NotConverged
    })
}
