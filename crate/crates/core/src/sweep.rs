//! Utilization sweeps and golden-section optimization of the analytic
//! objectives over `ρ ∈ (0, 1)`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, QueueParams};
use crate::costmodel::{CostKind, CostModel};
use crate::error::{Error, Result};
use crate::sim::{replication_seed, run_replications, SimConfig};
use crate::specfun::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Analytic,
    Simulation,
    Both,
}

impl SweepMode {
    fn analytic(self) -> bool {
        matches!(self, SweepMode::Analytic | SweepMode::Both)
    }

    fn simulation(self) -> bool {
        matches!(self, SweepMode::Simulation | SweepMode::Both)
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(SweepMode::Analytic),
            "simulation" | "sim" => Ok(SweepMode::Simulation),
            "both" => Ok(SweepMode::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep mode '{other}' (expected analytic, simulation or both)"
            ))),
        }
    }
}

/// Simulation settings applied to every simulated sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimTemplate {
    pub updates: u64,
    pub replications: usize,
    pub seed: u64,
    pub warmup_fraction: f64,
}

impl Default for SimTemplate {
    fn default() -> Self {
        Self {
            updates: 100_000,
            replications: 10,
            seed: 42,
            warmup_fraction: SimConfig::DEFAULT_WARMUP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mu: f64,
    pub rho_grid: Vec<f64>,
    pub models: Vec<CostModel>,
    pub mode: SweepMode,
    pub sim: SimTemplate,
    pub quadrature: QuadratureSpec,
}

impl SweepSpec {
    pub fn analytic(mu: f64, rho_grid: Vec<f64>, models: Vec<CostModel>) -> Self {
        Self {
            mu,
            rho_grid,
            models,
            mode: SweepMode::Analytic,
            sim: SimTemplate::default(),
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite and > 0, got {}",
                self.mu
            )));
        }
        if self.rho_grid.is_empty() || self.models.is_empty() {
            return Err(Error::InvalidParameter(
                "a sweep needs at least one utilization and one model".into(),
            ));
        }
        if let Some(r) = self.rho_grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::UnstableQueue { rho: *r });
        }
        if self.rho_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "rho grid must be strictly increasing".into(),
            ));
        }
        if self.mode.simulation() && self.sim.replications < 2 {
            return Err(Error::InvalidParameter(
                "simulated sweeps need at least 2 replications".into(),
            ));
        }
        Ok(())
    }
}

/// `start, start + step, ...` up to `stop` inclusive, rounded to 12 decimals
/// so that accumulated steps land on the intended values.
pub fn rho_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::InvalidParameter(format!(
            "bad grid {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// One `(rho, model)` cell. Empty cells serialize as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub model_kind: CostKind,
    pub alpha: f64,
    pub coud: Option<f64>,
    pub voiu_rate: Option<f64>,
    pub valid: Option<bool>,
    pub note: String,
    pub sim_coud: Option<f64>,
    pub sim_coud_ci: Option<f64>,
    pub sim_voiu_rate: Option<f64>,
    pub sim_voiu_ci: Option<f64>,
    pub error: String,
}

impl SweepRow {
    fn empty(rho: f64, model: &CostModel) -> Self {
        Self {
            rho,
            model_kind: model.kind(),
            alpha: model.alpha(),
            coud: None,
            voiu_rate: None,
            valid: None,
            note: String::new(),
            sim_coud: None,
            sim_coud_ci: None,
            sim_voiu_rate: None,
            sim_voiu_ci: None,
            error: String::new(),
        }
    }
}

fn evaluate_cell(spec: &SweepSpec, index: usize, rho: f64, model: &CostModel) -> SweepRow {
    let mut row = SweepRow::empty(rho, model);
    let queue = match QueueParams::from_rho(rho, spec.mu) {
        Ok(q) => q,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    if spec.mode.analytic() {
        match analytic::evaluate(&queue, model, &spec.quadrature) {
            Ok(r) => {
                row.coud = Some(r.avg_coud);
                row.voiu_rate = Some(r.avg_voiu_rate);
                row.valid = Some(r.valid);
                row.note = r.validity_note;
            }
            Err(e) => row.error = e.to_string(),
        }
    }
    if spec.mode.simulation() {
        let cfg = SimConfig {
            warmup_fraction: spec.sim.warmup_fraction,
            ..SimConfig::with_updates(
                queue,
                *model,
                spec.sim.updates,
                replication_seed(spec.sim.seed, index as u64),
            )
        };
        match run_replications(&cfg, spec.sim.replications) {
            Ok(s) => {
                row.sim_coud = Some(s.avg_coud);
                row.sim_coud_ci = Some(s.ci_halfwidth_coud);
                row.sim_voiu_rate = Some(s.avg_voiu_rate);
                row.sim_voiu_ci = Some(s.ci_halfwidth_voiu);
            }
            Err(e) => {
                if !row.error.is_empty() {
                    row.error.push_str("; ");
                }
                row.error.push_str(&format!("simulation: {e}"));
            }
        }
    }
    row
}

/// Evaluates every `(rho, model)` cell, rho-major. A failing cell records its
/// error in the row instead of aborting the sweep. `jobs > 1` evaluates rows
/// on a dedicated thread pool; row order does not depend on `jobs`.
pub fn sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells: Vec<(usize, f64, CostModel)> = spec
        .rho_grid
        .iter()
        .flat_map(|&rho| spec.models.iter().map(move |m| (rho, *m)))
        .enumerate()
        .map(|(i, (rho, m))| (i, rho, m))
        .collect();
    if jobs <= 1 {
        return Ok(cells
            .iter()
            .map(|(i, rho, m)| evaluate_cell(spec, *i, *rho, m))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|(i, rho, m)| evaluate_cell(spec, *i, *rho, m))
            .collect()
    }))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinCoud,
    MaxVoiu,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "min_coud" => Ok(Objective::MinCoud),
            "max_voiu" => Ok(Objective::MaxVoiu),
            other => Err(Error::InvalidParameter(format!(
                "unknown objective '{other}' (expected min-coud or max-voiu)"
            ))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MinCoud => "min_coud",
            Objective::MaxVoiu => "max_voiu",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section minimization of a unimodal `f` on `(lo, hi)` down to a
/// bracket of width `tol`. Endpoints are never evaluated.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<GoldenResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "golden section needs lo < hi and tol > 0, got ({lo}, {hi}), tol {tol}"
        )));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "objective is undefined at {x}; check the bracket"
            )));
        }
        Ok(v)
    };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok(GoldenResult {
        x,
        fx: eval(x)?,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub objective: Objective,
    pub model: CostModel,
    pub mu: f64,
    pub rho_star: f64,
    pub value_at_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

pub const DEFAULT_BRACKET: (f64, f64) = (0.02, 0.98);
pub const DEFAULT_TOL: f64 = 1e-4;

/// Default search interval; for the exponential CoUD it is narrowed to where
/// `α < min(λ, μ - λ)`.
pub fn default_bracket(objective: Objective, model: &CostModel, mu: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = DEFAULT_BRACKET;
    if objective == Objective::MinCoud && model.kind() == CostKind::Exponential {
        let edge = model.alpha() / mu;
        lo = lo.max(edge);
        hi = hi.min(1.0 - edge);
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "no utilization keeps the exponential CoUD finite for alpha = {} and mu = {mu}",
                model.alpha()
            )));
        }
    }
    Ok((lo, hi))
}

/// Value of the objective at utilization `rho` (the CoUD, or the VoIU rate).
pub fn objective_value(
    objective: Objective,
    model: &CostModel,
    mu: f64,
    rho: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let q = QueueParams::from_rho(rho, mu)?;
    match objective {
        Objective::MinCoud => Ok(analytic::avg_coud(&q, model, spec)?.value),
        Objective::MaxVoiu => analytic::avg_voiu_rate(&q, model, spec),
    }
}

/// Golden-section search of the analytic objective over the default bracket.
pub fn optimize(
    objective: Objective,
    model: &CostModel,
    mu: f64,
    tol: f64,
) -> Result<OptimumReport> {
    let bracket = default_bracket(objective, model, mu)?;
    optimize_in(
        objective,
        model,
        mu,
        tol,
        bracket,
        &QuadratureSpec::default(),
    )
}

pub fn optimize_in(
    objective: Objective,
    model: &CostModel,
    mu: f64,
    tol: f64,
    bracket: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<OptimumReport> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi < 1"
        )));
    }
    let sign = match objective {
        Objective::MinCoud => 1.0,
        Objective::MaxVoiu => -1.0,
    };
    let best = golden_section_min(
        |rho| Ok(sign * objective_value(objective, model, mu, rho, spec)?),
        lo,
        hi,
        tol,
    )?;
    let value = sign * best.fx;
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "objective is not finite at rho = {}; the bracket includes invalid utilizations",
            best.x
        )));
    }
    Ok(OptimumReport {
        objective,
        model: *model,
        mu,
        rho_star: best.x,
        value_at_star: value,
        bracket,
        iterations: best.iterations,
    })
}

/// Curve sets behind the three utilization figures (μ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Linear CoUD for α ∈ {0.1, 0.5, 1} and its (α-independent) VoIU rate.
    Fig2a,
    /// Linear, exponential and logarithmic CoUD at α = 0.1.
    Fig2b,
    /// VoIU rates of all three families for α ∈ {0.1, 0.5, 1}.
    Fig2c,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig2a, Figure::Fig2b, Figure::Fig2c];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig2c => "fig2c",
        }
    }

    pub fn models(self) -> Vec<CostModel> {
        let build = |k, a| CostModel::new(k, a).expect("positive alpha");
        let alphas = [0.1, 0.5, 1.0];
        match self {
            Figure::Fig2a => alphas.iter().map(|&a| build(CostKind::Linear, a)).collect(),
            Figure::Fig2b => CostKind::ALL.iter().map(|&k| build(k, 0.1)).collect(),
            Figure::Fig2c => CostKind::ALL
                .iter()
                .flat_map(|&k| alphas.iter().map(move |&a| build(k, a)))
                .collect(),
        }
    }

    /// Analytic sweep over ρ = 0.02, 0.04, …, 0.98 with μ = 1.
    pub fn spec(self) -> SweepSpec {
        let grid = rho_grid(0.02, 0.98, 0.02).expect("static grid");
        SweepSpec::analytic(1.0, grid, self.models())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("unknown figure '{s}' (fig2a, fig2b, fig2c)"))
            })
    }
}
