//! Monte Carlo sweeps over SNR and target count.
//!
//! Every trial draws its scene and noise from seeds derived from
//! `(base_seed, point, trial)`, so results do not depend on how many worker
//! threads run the trials or in which order they finish.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{match_with_gate, miss_rate, pfa, pfa_per_cell, rmse, TrialMetrics};
use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, LfmWaveform, NoiseSpec, Target, TargetScene};
use crate::pipeline::{process_capture, ProcessingConfig};
use crate::seed;
use crate::synth::{synthesize_capture, SynthOptions};

/// Default trials per sweep point.
pub const DEFAULT_TRIALS: usize = 100;

/// SNR at and above which a trial with no matched target is flagged.
pub const ANOMALY_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnglePlacement {
    /// The first `K` angles of the list, every trial.
    FixedList { angles_deg: Vec<f64> },
    /// `K` angles spaced `180/K` apart with one uniform offset per trial,
    /// wrapped into `[-90, 90)`.
    EquallySpaced,
    /// The first `K` listed angles, each jittered independently by up to
    /// `±jitter_deg` and clamped to `[-90, 90]`.
    UniformJitter { angles_deg: Vec<f64>, jitter_deg: f64 },
}

impl AnglePlacement {
    fn validate(&self, counts: &[usize]) -> Result<()> {
        let list = match self {
            AnglePlacement::EquallySpaced => return Ok(()),
            AnglePlacement::FixedList { angles_deg } => angles_deg,
            AnglePlacement::UniformJitter {
                angles_deg,
                jitter_deg,
            } => {
                if !(jitter_deg.is_finite() && *jitter_deg >= 0.0) {
                    return Err(Error::Config(format!(
                        "angle jitter must be non-negative, got {jitter_deg}"
                    )));
                }
                angles_deg
            }
        };
        if let Some(a) = list.iter().find(|a| !(a.is_finite() && (-90.0..=90.0).contains(*a))) {
            return Err(Error::Config(format!("placement angle {a} deg outside [-90, 90]")));
        }
        if let Some(k) = counts.iter().find(|&&k| k > list.len()) {
            return Err(Error::Config(format!(
                "target count {k} exceeds the {} listed angles",
                list.len()
            )));
        }
        Ok(())
    }

    pub fn draw(&self, count: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            AnglePlacement::FixedList { angles_deg } => angles_deg[..count].to_vec(),
            AnglePlacement::EquallySpaced => {
                let spacing = 180.0 / count as f64;
                let offset = rng.random::<f64>() * spacing;
                (0..count)
                    .map(|i| -90.0 + (i as f64 * spacing + offset).rem_euclid(180.0))
                    .collect()
            }
            AnglePlacement::UniformJitter {
                angles_deg,
                jitter_deg,
            } => angles_deg[..count]
                .iter()
                .map(|a| (a + jitter_deg * (2.0 * rng.random::<f64>() - 1.0)).clamp(-90.0, 90.0))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RangeModel {
    Common { range_m: f64 },
    /// Independent uniform draw per target.
    Uniform { min_m: f64, max_m: f64 },
}

impl RangeModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RangeModel::Common { range_m } => range_m.is_finite() && range_m > 0.0,
            RangeModel::Uniform { min_m, max_m } => {
                min_m.is_finite() && max_m.is_finite() && min_m > 0.0 && max_m >= min_m
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid range model {self:?}")))
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            RangeModel::Common { range_m } => range_m,
            RangeModel::Uniform { min_m, max_m } => min_m + (max_m - min_m) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReflectivityModel {
    Equal { value: f64 },
    Uniform { min: f64, max: f64 },
}

impl Default for ReflectivityModel {
    fn default() -> Self {
        ReflectivityModel::Equal { value: 1.0 }
    }
}

impl ReflectivityModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ReflectivityModel::Equal { value } => value.is_finite() && value >= 0.0,
            ReflectivityModel::Uniform { min, max } => {
                min.is_finite() && max.is_finite() && min >= 0.0 && max >= min
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid reflectivity model {self:?}")))
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ReflectivityModel::Equal { value } => value,
            ReflectivityModel::Uniform { min, max } => min + (max - min) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub geometry: ArrayGeometry,
    pub waveform: LfmWaveform,
    /// Non-finite entries disable noise for that point.
    pub snr_sweep_db: Vec<f64>,
    pub target_count_sweep: Vec<usize>,
    pub trials_per_point: usize,
    pub base_seed: u64,
    pub placement: AnglePlacement,
    pub ranges: RangeModel,
    pub reflectivity: ReflectivityModel,
    pub synth: SynthOptions,
    pub processing: ProcessingConfig,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials per point must be at least 1".into()));
        }
        if self.snr_sweep_db.is_empty() || self.target_count_sweep.is_empty() {
            return Err(Error::Config("SNR and target-count sweeps must be non-empty".into()));
        }
        if self.snr_sweep_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("SNR sweep contains NaN".into()));
        }
        if self.target_count_sweep.contains(&0) {
            return Err(Error::Config("target counts must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        self.placement.validate(&self.target_count_sweep)?;
        self.ranges.validate()?;
        self.reflectivity.validate()?;
        self.waveform.check_sample_rate(&self.geometry)
    }

    /// Sweep points in row order: target count outer, SNR inner.
    pub fn points(&self) -> Vec<(usize, f64)> {
        self.target_count_sweep
            .iter()
            .flat_map(|&k| self.snr_sweep_db.iter().map(move |&s| (k, s)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub true_angles_deg: Vec<f64>,
    pub metrics: TrialMetrics,
    pub grid_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub target_count: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub rmse_deg: Option<f64>,
    pub pfa: Option<f64>,
    pub pfa_per_cell: Option<f64>,
    pub miss_rate: Option<f64>,
    /// Trials at high SNR that matched no target at all.
    pub anomalies: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<SweepRow>,
}

/// Runs one trial of sweep point `point` (its index in [`ExperimentPlan::points`]).
pub fn run_trial(
    plan: &ExperimentPlan,
    point: usize,
    target_count: usize,
    snr_db: f64,
    trial: usize,
) -> Result<TrialOutcome> {
    let trial_seed = seed::derive(plan.base_seed, &[point as u64, trial as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(trial_seed, &[1]));
    let angles = plan.placement.draw(target_count, &mut rng);
    let targets = angles
        .iter()
        .map(|&a| {
            let range = plan.ranges.draw(&mut rng);
            let refl = plan.reflectivity.draw(&mut rng);
            Target::new(a, range, refl)
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = TargetScene::new(targets)?;
    let noise = NoiseSpec::with_snr(snr_db, seed::derive(trial_seed, &[0]));
    let capture = synthesize_capture(&plan.geometry, &plan.waveform, &scene, &noise, &plan.synth)?;
    let processed = process_capture(&capture, &plan.processing)?;
    let gate = plan.processing.gate_for(processed.fused.grid_step());
    Ok(TrialOutcome {
        metrics: match_with_gate(&processed.detections, &angles, gate),
        true_angles_deg: angles,
        grid_cells: processed.fused.len(),
    })
}

fn aggregate(target_count: usize, snr_db: f64, outcomes: &[TrialOutcome], wall_time_s: f64) -> SweepRow {
    let metrics: Vec<TrialMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let cells = outcomes.first().map_or(0, |o| o.grid_cells);
    let anomalies = if snr_db >= ANOMALY_SNR_DB {
        metrics.iter().filter(|m| m.errors_deg.is_empty()).count()
    } else {
        0
    };
    SweepRow {
        target_count,
        snr_db,
        trials: outcomes.len(),
        rmse_deg: rmse(&metrics),
        pfa: pfa(&metrics),
        pfa_per_cell: pfa_per_cell(&metrics, cells),
        miss_rate: miss_rate(&metrics),
        anomalies,
        wall_time_s,
    }
}

fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = plan.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut rows = Vec::new();
    for (point, (k, snr)) in plan.points().into_iter().enumerate() {
        let start = Instant::now();
        let outcomes = pool.install(|| {
            (0..plan.trials_per_point)
                .into_par_iter()
                .map(|trial| run_trial(plan, point, k, snr, trial))
                .collect::<Result<Vec<_>>>()
        })?;
        let row = aggregate(k, snr, &outcomes, start.elapsed().as_secs_f64());
        if row.anomalies > 0 {
            log::warn!(
                "K={k} SNR={snr} dB: {} of {} trials matched no target",
                row.anomalies,
                row.trials
            );
        }
        log::info!(
            "K={k} SNR={snr} dB: rmse={:?} pfa={:?} (per cell {:?}) miss={:?} in {:.2} s",
            row.rmse_deg,
            row.pfa,
            row.pfa_per_cell,
            row.miss_rate,
            row.wall_time_s
        );
        rows.push(row);
    }
    Ok(ExperimentResult { rows })
}

/// RMSE-vs-SNR study. Rows follow [`ExperimentPlan::points`].
pub fn run_rmse_sweep(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    run_plan(plan)
}

/// False-alarm-vs-target-count study. Rows follow [`ExperimentPlan::points`].
pub fn run_pfa_sweep(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    run_plan(plan)
}
