//! Seeded discrete-event simulation of the M/M/1 FCFS status-update system.
//!
//! Updates are generated by a Poisson process and served first-come
//! first-served by a single exponential server. Only two clocks are needed:
//! `t_i = t_{i-1} + Y_i` and `t'_i = max(t'_{i-1}, t_i) + S_i`.
//!
//! Observation starts at `t = 0` with an empty queue and cost `C(0) = C₀`,
//! attributed to a virtual update generated at `t₀ = -f⁻¹(C₀) <= 0`.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::QueueParams;
use crate::costmodel::{CostModel, UpdateRecord};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Batches used for the within-run confidence intervals.
const BATCHES: usize = 20;

/// When a run ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Keep every update generated at or before this time.
    Horizon(f64),
    /// Deliver exactly this many updates.
    Updates(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub queue: QueueParams,
    pub model: CostModel,
    pub stop: StopRule,
    pub seed: u64,
    /// Leading share of the run excluded from the steady-state averages:
    /// a share of the updates under [`StopRule::Updates`], a share of the
    /// horizon under [`StopRule::Horizon`].
    pub warmup_fraction: f64,
    /// Cost at `t = 0`.
    pub initial_cost: f64,
}

impl SimConfig {
    pub const DEFAULT_WARMUP: f64 = 0.1;

    pub fn with_updates(queue: QueueParams, model: CostModel, updates: u64, seed: u64) -> Self {
        Self {
            queue,
            model,
            stop: StopRule::Updates(updates),
            seed,
            warmup_fraction: Self::DEFAULT_WARMUP,
            initial_cost: 0.0,
        }
    }

    pub fn with_horizon(queue: QueueParams, model: CostModel, horizon: f64, seed: u64) -> Self {
        Self {
            stop: StopRule::Horizon(horizon),
            ..Self::with_updates(queue, model, 0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.stop {
            StopRule::Horizon(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "horizon must be finite and > 0, got {h}"
                )))
            }
            StopRule::Updates(0) => {
                return Err(Error::InvalidParameter(
                    "target update count must be positive".into(),
                ))
            }
            _ => {}
        }
        if !(0.0..0.5).contains(&self.warmup_fraction) {
            return Err(Error::InvalidParameter(format!(
                "warmup_fraction must lie in [0, 0.5), got {}",
                self.warmup_fraction
            )));
        }
        if !(self.initial_cost >= 0.0 && self.initial_cost.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial cost must be finite and >= 0, got {}",
                self.initial_cost
            )));
        }
        if self.model.is_degenerate() {
            return Err(Error::DegenerateAlpha("the simulated value of information"));
        }
        Ok(())
    }

    /// Generation time `t₀ <= 0` of the virtual update that explains `C(0) = C₀`.
    pub fn virtual_origin(&self) -> Result<f64> {
        Ok(-self.model.elapsed_for_cost(self.initial_cost)?)
    }
}

/// Estimates from one run, or pooled over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub replications: usize,
    /// Delivered updates `N`.
    pub n_updates: u64,
    /// Updates after the warmup cut.
    pub n_measured: u64,
    /// Observation length: reception time of the last update.
    pub elapsed: f64,
    /// Steady-state CoUD, `ΣQ_i / ΣY_i` over measured updates.
    pub avg_coud: f64,
    /// Steady-state VoIU rate, `ΣV_i / ΣY_i` over measured updates.
    pub avg_voiu_rate: f64,
    pub mean_voiu: f64,
    pub ci_halfwidth_coud: f64,
    pub ci_halfwidth_voiu: f64,
    /// Measured updates per unit time.
    pub effective_rate: f64,
    /// Exact time average of the sawtooth over `[0, elapsed]`, leading and trailing pieces included.
    pub whole_run_coud: f64,
    /// `Σ V_i / elapsed` over all updates.
    pub whole_run_voiu_rate: f64,
    pub mean_interarrival: f64,
    pub mean_system_time: f64,
}

fn exp_variate(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // inverse CDF on an open-interval uniform so the variate is strictly positive
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}

/// Runs one replication and returns its summary with every delivered update.
pub fn run(config: &SimConfig) -> Result<(SimSummary, Vec<UpdateRecord>)> {
    let records = simulate(config)?;
    let summary = summarize(config, &records)?;
    Ok((summary, records))
}

/// Generates the update records of one run.
pub fn simulate(config: &SimConfig) -> Result<Vec<UpdateRecord>> {
    config.validate()?;
    let model = config.model;
    let lambda = config.queue.lambda();
    let mu = config.queue.mu();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let capacity = match config.stop {
        StopRule::Updates(n) => n as usize,
        StopRule::Horizon(h) => (lambda * h * 1.1) as usize + 16,
    };
    let mut records = Vec::with_capacity(capacity.min(1 << 26));
    let mut clock = 0.0f64;
    let mut server_free = 0.0f64;
    let mut first_gap = -config.virtual_origin()?;

    loop {
        let gap = exp_variate(&mut rng, lambda);
        let gen = clock + gap;
        match config.stop {
            StopRule::Horizon(h) if gen > h => break,
            StopRule::Updates(n) if records.len() as u64 >= n => break,
            _ => {}
        }
        let service = exp_variate(&mut rng, mu);
        let system_time = (server_free - gen).max(0.0) + service;
        // Y_1 is measured from the virtual origin
        let y = gap + first_gap;
        first_gap = 0.0;
        let i = records.len() as u64 + 1;
        records.push(UpdateRecord {
            i,
            t_gen: gen,
            t_recv: gen + system_time,
            interarrival: y,
            system_time,
            voiu: model.voiu(y, system_time)?,
            area: model.area(y, system_time)?,
        });
        clock = gen;
        server_free = gen + system_time;
    }
    Ok(records)
}

fn warmup_cut(config: &SimConfig, records: &[UpdateRecord]) -> usize {
    match config.stop {
        StopRule::Updates(_) => (config.warmup_fraction * records.len() as f64).floor() as usize,
        StopRule::Horizon(h) => {
            let cutoff = config.warmup_fraction * h;
            records.partition_point(|r| r.t_gen < cutoff)
        }
    }
}

fn mean_and_halfwidth(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z_95 * (var / n).sqrt())
}

/// Integral of the cost sawtooth over `[0, t'_N]` from the per-update areas:
/// `Σ Q_i - ∫₀^{-t₀} f + ∫₀^{T_N} f`.
pub fn sawtooth_integral(config: &SimConfig, records: &[UpdateRecord]) -> Result<f64> {
    let model = &config.model;
    let last = records
        .last()
        .ok_or(Error::InsufficientData { delivered: 0 })?;
    let areas: f64 = records.iter().map(|r| r.area).sum();
    let before_zero = model.cumulative_cost(-config.virtual_origin()?)?;
    let trailing = model.cumulative_cost(last.system_time)?;
    Ok(areas - before_zero + trailing)
}

/// Steady-state and whole-run estimates from a run's records.
pub fn summarize(config: &SimConfig, records: &[UpdateRecord]) -> Result<SimSummary> {
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            delivered: records.len(),
        });
    }
    let measured = &records[warmup_cut(config, records)..];
    if measured.len() < 2 {
        return Err(Error::InsufficientData {
            delivered: measured.len(),
        });
    }

    let span: f64 = measured.iter().map(|r| r.interarrival).sum();
    let area: f64 = measured.iter().map(|r| r.area).sum();
    let value: f64 = measured.iter().map(|r| r.voiu).sum();
    let system: f64 = measured.iter().map(|r| r.system_time).sum();
    let m = measured.len() as f64;

    let batches = BATCHES.min(measured.len());
    let per = measured.len() / batches;
    let (coud_batches, voiu_batches): (Vec<f64>, Vec<f64>) = (0..batches)
        .map(|b| {
            let end = if b + 1 == batches {
                measured.len()
            } else {
                (b + 1) * per
            };
            let chunk = &measured[b * per..end];
            let s: f64 = chunk.iter().map(|r| r.interarrival).sum();
            (
                chunk.iter().map(|r| r.area).sum::<f64>() / s,
                chunk.iter().map(|r| r.voiu).sum::<f64>() / s,
            )
        })
        .unzip();
    let (_, ci_coud) = mean_and_halfwidth(&coud_batches);
    let (_, ci_voiu) = mean_and_halfwidth(&voiu_batches);

    let elapsed = records.last().map(|r| r.t_recv).unwrap_or_default();
    let total_value: f64 = records.iter().map(|r| r.voiu).sum();

    Ok(SimSummary {
        replications: 1,
        n_updates: records.len() as u64,
        n_measured: measured.len() as u64,
        elapsed,
        avg_coud: area / span,
        avg_voiu_rate: value / span,
        mean_voiu: value / m,
        ci_halfwidth_coud: ci_coud,
        ci_halfwidth_voiu: ci_voiu,
        effective_rate: m / span,
        whole_run_coud: sawtooth_integral(config, records)? / elapsed,
        whole_run_voiu_rate: total_value / elapsed,
        mean_interarrival: span / m,
        mean_system_time: system / m,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `splitmix64(seed + index)`.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index))
}

/// Runs independent replications and pools them: means of the per-replication
/// estimates with 95% normal-approximation half-widths across replications.
pub fn run_replications(config: &SimConfig, replications: usize) -> Result<SimSummary> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least 2 replications are needed, got {replications}"
        )));
    }
    config.validate()?;
    let summaries = (0..replications)
        .into_par_iter()
        .map(|k| {
            let cfg = SimConfig {
                seed: replication_seed(config.seed, k as u64),
                ..*config
            };
            let records = simulate(&cfg)?;
            summarize(&cfg, &records)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(&summaries))
}

fn pool(summaries: &[SimSummary]) -> SimSummary {
    let col = |f: fn(&SimSummary) -> f64| summaries.iter().map(f).collect::<Vec<_>>();
    let mean = |f: fn(&SimSummary) -> f64| mean_and_halfwidth(&col(f)).0;
    let (avg_coud, ci_coud) = mean_and_halfwidth(&col(|s| s.avg_coud));
    let (avg_voiu_rate, ci_voiu) = mean_and_halfwidth(&col(|s| s.avg_voiu_rate));
    SimSummary {
        replications: summaries.len(),
        n_updates: summaries.iter().map(|s| s.n_updates).sum(),
        n_measured: summaries.iter().map(|s| s.n_measured).sum(),
        elapsed: summaries.iter().map(|s| s.elapsed).sum(),
        avg_coud,
        avg_voiu_rate,
        mean_voiu: mean(|s| s.mean_voiu),
        ci_halfwidth_coud: ci_coud,
        ci_halfwidth_voiu: ci_voiu,
        effective_rate: mean(|s| s.effective_rate),
        whole_run_coud: mean(|s| s.whole_run_coud),
        whole_run_voiu_rate: mean(|s| s.whole_run_voiu_rate),
        mean_interarrival: mean(|s| s.mean_interarrival),
        mean_system_time: mean(|s| s.mean_system_time),
    }
}

/// Cost process `C(t) = f(t - u(t))` reconstructed from a run's records.
#[derive(Debug, Clone, Copy)]
pub struct CoudPath<'a> {
    model: CostModel,
    origin: f64,
    records: &'a [UpdateRecord],
}

impl<'a> CoudPath<'a> {
    pub fn new(config: &SimConfig, records: &'a [UpdateRecord]) -> Result<Self> {
        Ok(Self {
            model: config.model,
            origin: config.virtual_origin()?,
            records,
        })
    }

    /// Generation time of the freshest update received by time `t`.
    pub fn freshest_generation(&self, t: f64) -> f64 {
        let received = self.records.partition_point(|r| r.t_recv <= t);
        if received == 0 {
            self.origin
        } else {
            self.records[received - 1].t_gen
        }
    }

    /// Cost at time `t >= 0`; right-continuous at receptions.
    pub fn cost_at(&self, t: f64) -> f64 {
        self.model.cost(t - self.freshest_generation(t))
    }
}

/// Samples `C(t)` every `sample_dt` from `0` to the last reception, which is
/// always included as the final point.
pub fn coud_trajectory(config: &SimConfig, sample_dt: f64) -> Result<Vec<(f64, f64)>> {
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sample_dt must be finite and > 0, got {sample_dt}"
        )));
    }
    let records = simulate(config)?;
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            delivered: records.len(),
        });
    }
    let path = CoudPath::new(config, &records)?;
    let end = records.last().map(|r| r.t_recv).unwrap_or_default();
    let steps = (end / sample_dt).floor() as usize;
    let mut out = Vec::with_capacity(steps + 2);
    for k in 0..=steps {
        let t = k as f64 * sample_dt;
        out.push((t, path.cost_at(t)));
    }
    if out.last().is_none_or(|&(t, _)| t < end) {
        out.push((end, path.cost_at(end)));
    }
    Ok(out)
}
