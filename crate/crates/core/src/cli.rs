//! Command layer of the `freshsim` binary.
//!
//! Every command is a function of its flags (and seed); results go to the
//! given writer as JSON or CSV. Commands that write files also write a
//! [`RunManifest`] next to them.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticResult, QueueParams};
use crate::costmodel::{CostKind, CostModel, UpdateRecord};
use crate::error::{Error, Result};
use crate::sim::{self, replication_seed, SimConfig, SimSummary, StopRule};
use crate::specfun::QuadratureSpec;
use crate::sweep::{self, Figure, Objective, SimTemplate, SweepMode, SweepSpec};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_UPDATES: u64 = 100_000;
pub const RECORDS_HEADER: &str = "i,t_gen,t_recv,Y,T,V,Q";

#[derive(Debug, Parser)]
#[command(
    name = "freshsim",
    version,
    about = "CoUD and VoIU of an M/M/1 status-update queue"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form / quadrature averages at one operating point.
    Analytic(AnalyticArgs),
    /// Discrete-event simulation with optional replications.
    Simulate(SimulateArgs),
    /// Sweep utilization for one or more cost models; CSV output.
    Sweep(SweepArgs),
    /// Golden-section search for the best utilization.
    Optimize(OptimizeArgs),
    /// Write the curve data of a utilization figure.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QueueArgs {
    /// Arrival rate.
    #[arg(long, conflicts_with = "rho")]
    pub lambda: Option<f64>,
    /// Utilization; sets lambda = rho * mu.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Service rate.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

impl QueueArgs {
    pub fn queue(&self) -> Result<QueueParams> {
        match (self.lambda, self.rho) {
            (Some(l), None) => QueueParams::new(l, self.mu),
            (None, Some(r)) => QueueParams::from_rho(r, self.mu),
            _ => Err(Error::InvalidParameter(
                "give exactly one of --lambda or --rho".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Cost family: linear, exponential or logarithmic.
    #[arg(long, default_value = "linear")]
    pub kind: CostKind,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

impl ModelArgs {
    pub fn model(&self) -> Result<CostModel> {
        CostModel::new(self.kind, self.alpha)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub queue: QueueArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub queue: QueueArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, env = "FRESHSIM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of delivered updates per replication [default: 100000].
    #[arg(long, conflicts_with = "horizon")]
    pub updates: Option<u64>,
    /// Keep updates generated up to this time instead of a fixed count.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    /// Leading share of each run left out of the averages.
    #[arg(long, default_value_t = SimConfig::DEFAULT_WARMUP)]
    pub warmup: f64,
    /// Cost level at time zero.
    #[arg(long, default_value_t = 0.0)]
    pub initial_cost: f64,
    /// Directory for summary.json, manifest.json and records.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-update records (of the first replication).
    #[arg(long, requires = "out")]
    pub dump_records: bool,
}

impl SimulateArgs {
    pub fn config(&self) -> Result<SimConfig> {
        let queue = self.queue.queue()?;
        let model = self.model.model()?;
        let stop = match self.horizon {
            Some(h) => StopRule::Horizon(h),
            None => StopRule::Updates(self.updates.unwrap_or(DEFAULT_UPDATES)),
        };
        let config = SimConfig {
            queue,
            model,
            stop,
            seed: self.seed,
            warmup_fraction: self.warmup,
            initial_cost: self.initial_cost,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Explicit utilizations (comma separated); overrides the start/stop/step grid.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub rho_start: f64,
    #[arg(long, default_value_t = 0.98)]
    pub rho_stop: f64,
    #[arg(long, default_value_t = 0.02)]
    pub rho_step: f64,
    /// Cost families (comma separated), crossed with every --alpha.
    #[arg(long, value_delimiter = ',', default_value = "linear")]
    pub kind: Vec<CostKind>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub alpha: Vec<f64>,
    /// analytic, simulation or both.
    #[arg(long, default_value = "analytic")]
    pub mode: SweepMode,
    #[arg(long, default_value_t = DEFAULT_UPDATES)]
    pub updates: u64,
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    #[arg(long, env = "FRESHSIM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = SimConfig::DEFAULT_WARMUP)]
    pub warmup: f64,
    /// Worker threads for row evaluation.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV destination; a `.manifest.json` is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn spec(&self) -> Result<SweepSpec> {
        let rho_grid = if self.rho.is_empty() {
            sweep::rho_grid(self.rho_start, self.rho_stop, self.rho_step)?
        } else {
            self.rho.clone()
        };
        let models = self
            .kind
            .iter()
            .flat_map(|&k| self.alpha.iter().map(move |&a| CostModel::new(k, a)))
            .collect::<Result<Vec<_>>>()?;
        let spec = SweepSpec {
            mu: self.mu,
            rho_grid,
            models,
            mode: self.mode,
            sim: SimTemplate {
                updates: self.updates,
                replications: self.replications,
                seed: self.seed,
                warmup_fraction: self.warmup,
            },
            quadrature: QuadratureSpec::default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    /// min-coud or max-voiu.
    #[arg(long, default_value = "min-coud")]
    pub objective: Objective,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Final bracket width in utilization.
    #[arg(long, default_value_t = sweep::DEFAULT_TOL)]
    pub tol: f64,
    /// Lower end of the search bracket.
    #[arg(long, requires = "hi")]
    pub lo: Option<f64>,
    /// Upper end of the search bracket.
    #[arg(long, requires = "lo")]
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FigureArgs {
    /// fig2a, fig2b or fig2c.
    pub name: Figure,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

impl RunManifest {
    fn start<P: Serialize>(command: &str, params: &P, seed: Option<u64>) -> Result<Self> {
        let parameters = match serde_json::to_value(params)? {
            serde_json::Value::Object(map) => map.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        let now = unix_ms();
        Ok(Self {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: now,
            finished_unix_ms: now,
        })
    }

    fn finish_and_write(mut self, path: &Path) -> Result<()> {
        self.finished_unix_ms = unix_ms();
        write_json_file(path, &self)
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn write_json<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_json(&mut w, value)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub kind: CostKind,
    pub alpha: f64,
    #[serde(flatten)]
    pub result: AnalyticResult,
}

pub fn cmd_analytic(args: &AnalyticArgs) -> Result<AnalyticReport> {
    let q = args.queue.queue()?;
    let model = args.model.model()?;
    let result = analytic::evaluate(&q, &model, &QuadratureSpec::default())?;
    Ok(AnalyticReport {
        lambda: q.lambda(),
        mu: q.mu(),
        rho: q.rho(),
        kind: model.kind(),
        alpha: model.alpha(),
        result,
    })
}

/// Runs the configured simulation. Records are returned only when
/// `--dump-records` is set; with several replications they belong to
/// replication 0, whose seed is `replication_seed(seed, 0)`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(SimSummary, Option<Vec<UpdateRecord>>)> {
    let config = args.config()?;
    if args.replications <= 1 {
        let (summary, records) = sim::run(&config)?;
        return Ok((summary, args.dump_records.then_some(records)));
    }
    let summary = sim::run_replications(&config, args.replications)?;
    let records = if args.dump_records {
        let first = SimConfig {
            seed: replication_seed(config.seed, 0),
            ..config
        };
        Some(sim::simulate(&first)?)
    } else {
        None
    };
    Ok((summary, records))
}

/// Simulation output: the run configuration (seed included) and the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub config: SimConfig,
    #[serde(flatten)]
    pub summary: SimSummary,
}

pub fn write_records<W: Write>(records: &[UpdateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<UpdateRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<sweep::OptimumReport> {
    let model = args.model.model()?;
    match (args.lo, args.hi) {
        (Some(lo), Some(hi)) => sweep::optimize_in(
            args.objective,
            &model,
            args.mu,
            args.tol,
            (lo, hi),
            &QuadratureSpec::default(),
        ),
        _ => sweep::optimize(args.objective, &model, args.mu, args.tol),
    }
}

/// Writes `<out>/<name>.csv` and its manifest; returns the CSV path.
pub fn cmd_figure(args: &FigureArgs) -> Result<PathBuf> {
    let manifest = RunManifest::start("figure", args, None)?;
    fs::create_dir_all(&args.out)?;
    let rows = sweep::sweep(&args.name.spec(), args.jobs)?;
    let csv_path = args.out.join(format!("{}.csv", args.name.name()));
    write_csv_file(&csv_path, &rows)?;
    manifest.finish_and_write(&args.out.join(format!("{}.manifest.json", args.name.name())))?;
    Ok(csv_path)
}

fn write_csv_file(path: &Path, rows: &[sweep::SweepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    sweep::write_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Dispatches a parsed command line, writing its primary output to `out`.
pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    match &cli.command {
        Command::Analytic(args) => write_json(out, &cmd_analytic(args)?),
        Command::Simulate(args) => {
            let manifest = RunManifest::start("simulate", args, Some(args.seed))?;
            let (summary, records) = cmd_simulate(args)?;
            let report = SimulateReport {
                config: args.config()?,
                summary,
            };
            if let Some(dir) = &args.out {
                fs::create_dir_all(dir)?;
                write_json_file(&dir.join("summary.json"), &report)?;
                if let Some(records) = &records {
                    let mut w = BufWriter::new(File::create(dir.join("records.csv"))?);
                    write_records(records, &mut w)?;
                    w.flush()?;
                }
                manifest.finish_and_write(&dir.join("manifest.json"))?;
            }
            write_json(out, &report)
        }
        Command::Sweep(args) => {
            let seed = (args.mode != SweepMode::Analytic).then_some(args.seed);
            let manifest = RunManifest::start("sweep", args, seed)?;
            let rows = sweep::sweep(&args.spec()?, args.jobs)?;
            match &args.out {
                Some(path) => {
                    write_csv_file(path, &rows)?;
                    manifest.finish_and_write(&path.with_extension("manifest.json"))
                }
                None => sweep::write_csv(&rows, out),
            }
        }
        Command::Optimize(args) => write_json(out, &cmd_optimize(args)?),
        Command::Figure(args) => {
            let path = cmd_figure(args)?;
            writeln!(out, "{}", path.display())?;
            Ok(())
        }
    }
}

/// Extra advice printed after an error message, if any.
pub fn hint(err: &Error) -> Option<&'static str> {
    match err {
        Error::InsufficientData { .. } => {
            Some("increase --updates or --horizon, or lower --warmup, so that enough updates are measured")
        }
        Error::UnstableQueue { .. } => Some("the queue needs lambda < mu (0 < rho < 1)"),
        _ => None,
    }
}
