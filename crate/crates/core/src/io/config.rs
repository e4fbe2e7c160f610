//! Scenario files.
//!
//! A scenario is a TOML document with these sections:
//!
//! ```toml
//! [geometry]            # positions_m = [...]  or  gaps = [...] with unit_m
//! [waveform]            # f0_hz, pulse_duration_s, chirp_rate_hz_per_s or bandwidth_hz
//! [[targets]]           # angle_deg, range_m, reflectivity (default 1)
//! [noise]               # snr_db (absent: noiseless), seed
//! [synthesis]           # delay_model, edge_mode
//! [processing]          # window, zero_pad, lowpass, cutoff_scale, grid_oversample, ...
//! [experiment]          # snr_sweep_db, target_counts, trials, base_seed, placement, ...
//! ```
//!
//! [`load_scenario`] rejects unknown keys, fills in every default and checks
//! every parameter before anything is computed. Diagnostics name the offending
//! key path and its line.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::mc::{AnglePlacement, ExperimentPlan, RangeModel, ReflectivityModel, DEFAULT_TRIALS};
use crate::model::{
    centroid, positions_from_gaps, ArrayGeometry, DelayModel, LfmWaveform, NoiseSpec, Target,
    TargetScene, CUTOFF_MARGIN,
};
use crate::pipeline::ProcessingConfig;
use crate::spectrum::Window;
use crate::synth::{EdgeMode, SynthOptions};

const CONSISTENCY_RTOL: f64 = 1e-9;
const DEFAULT_EXPERIMENT_RANGE_M: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_position_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    pub f0_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirp_rate_hz_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    pub pulse_duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
}

fn unit_reflectivity() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub angle_deg: f64,
    pub range_m: f64,
    #[serde(default = "unit_reflectivity")]
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSection {
    pub delay_model: DelayModel,
    pub edge_mode: EdgeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingSection {
    pub window: Window,
    pub zero_pad: usize,
    pub lowpass: bool,
    pub cutoff_scale: f64,
    pub grid_oversample: usize,
    pub normalize: bool,
    pub rel_threshold: f64,
    pub min_separation_bins: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_deg: Option<f64>,
}

impl Default for ProcessingSection {
    fn default() -> Self {
        ProcessingSection::from(&ProcessingConfig::default())
    }
}

impl From<&ProcessingConfig> for ProcessingSection {
    fn from(p: &ProcessingConfig) -> Self {
        Self {
            window: p.window,
            zero_pad: p.zero_pad,
            lowpass: p.cutoff_scale.is_some(),
            cutoff_scale: p.cutoff_scale.unwrap_or(CUTOFF_MARGIN),
            grid_oversample: p.grid_oversample,
            normalize: p.normalize,
            rel_threshold: p.rel_threshold,
            min_separation_bins: p.min_separation_bins,
            gate_deg: p.gate_deg,
        }
    }
}

impl ProcessingSection {
    pub fn to_config(&self) -> ProcessingConfig {
        ProcessingConfig {
            window: self.window,
            zero_pad: self.zero_pad,
            cutoff_scale: self.lowpass.then_some(self.cutoff_scale),
            grid_oversample: self.grid_oversample,
            normalize: self.normalize,
            rel_threshold: self.rel_threshold,
            min_separation_bins: self.min_separation_bins,
            gate_deg: self.gate_deg,
        }
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_base_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `inf` disables noise for that point.
    pub snr_sweep_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_counts: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<AnglePlacement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<RangeModel>,
    #[serde(default)]
    pub reflectivity: ReflectivityModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometrySection,
    pub waveform: WaveformSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub processing: ProcessingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetEntry>,
}

/// A parameter problem located by key path, before line lookup.
#[derive(Debug)]
struct Invalid {
    key: String,
    message: String,
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> Invalid {
    Invalid {
        key: key.into(),
        message: message.into(),
    }
}

fn finite_positive(key: &str, v: f64) -> std::result::Result<(), Invalid> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn model_err(key: &str) -> impl Fn(Error) -> Invalid + '_ {
    move |e| invalid(key, strip_kind(&e))
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Synthesis(m) | Error::Contract(m) | Error::Format(m) => {
            m.clone()
        }
        other => other.to_string(),
    }
}

fn relatively_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_RTOL * a.abs().max(b.abs())
}

impl ScenarioConfig {
    /// Parses and resolves a scenario from TOML text. `origin` only labels
    /// diagnostics.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let raw: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let span = e.span();
            let key = span
                .as_ref()
                .and_then(|s| key_path_at(text, s.start))
                .unwrap_or_else(|| "<document>".into());
            Error::Scenario {
                path: origin.to_path_buf(),
                key,
                line: span.map(|s| line_of(text, s.start)),
                message: e.message().trim().to_string(),
            }
        })?;
        raw.resolved().map_err(|inv| Error::Scenario {
            path: origin.to_path_buf(),
            line: span_of_key(text, &inv.key).map(|s| line_of(text, s.start)),
            key: inv.key,
            message: inv.message,
        })
    }

    /// Resolves and checks a programmatically built config.
    pub fn resolve(self) -> Result<Self> {
        self.resolved()
            .map_err(|inv| Error::Config(format!("{}: {}", inv.key, inv.message)))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    fn resolved(mut self) -> std::result::Result<Self, Invalid> {
        self.resolve_geometry()?;
        self.resolve_waveform()?;
        self.check_targets()?;
        self.check_processing()?;
        self.resolve_experiment()?;
        Ok(self)
    }

    fn resolve_geometry(&mut self) -> std::result::Result<(), Invalid> {
        let g = &mut self.geometry;
        let from_gaps = match (&g.gaps, g.unit_m) {
            (Some(gaps), unit) => {
                let unit = unit.unwrap_or(1.0);
                finite_positive("geometry.unit_m", unit)?;
                if gaps.is_empty() {
                    return Err(invalid("geometry.gaps", "needs at least one gap"));
                }
                if let Some((i, gap)) = gaps.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(invalid(format!("geometry.gaps[{i}]"), format!("gaps must be positive, got {gap}")));
                }
                g.unit_m = Some(unit);
                Some(positions_from_gaps(gaps, unit))
            }
            (None, Some(_)) => return Err(invalid("geometry.unit_m", "only meaningful together with gaps")),
            (None, None) => None,
        };
        let positions = match (&g.positions_m, from_gaps) {
            (Some(p), Some(q)) => {
                let agree = p.len() == q.len() && p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
                if !agree {
                    return Err(invalid(
                        "geometry.positions_m",
                        format!("disagrees with gaps, which give {q:?}"),
                    ));
                }
                p.clone()
            }
            (Some(p), None) => p.clone(),
            (None, Some(q)) => q,
            (None, None) => return Err(invalid("geometry", "needs positions_m or gaps")),
        };
        let tx = g.tx_position_m.unwrap_or_else(|| centroid(&positions));
        ArrayGeometry::new(positions.clone(), tx).map_err(model_err("geometry.positions_m"))?;
        g.positions_m = Some(positions);
        g.tx_position_m = Some(tx);
        Ok(())
    }

    fn resolve_waveform(&mut self) -> std::result::Result<(), Invalid> {
        let geometry = self.geometry()?;
        let w = &mut self.waveform;
        finite_positive("waveform.pulse_duration_s", w.pulse_duration_s)?;
        if !(w.f0_hz.is_finite() && w.f0_hz >= 0.0) {
            return Err(invalid("waveform.f0_hz", format!("must be non-negative, got {}", w.f0_hz)));
        }
        let k = match (w.chirp_rate_hz_per_s, w.bandwidth_hz) {
            (Some(k), Some(b)) => {
                finite_positive("waveform.chirp_rate_hz_per_s", k)?;
                if !relatively_equal(k * w.pulse_duration_s, b) {
                    return Err(invalid(
                        "waveform.bandwidth_hz",
                        format!(
                            "{b} Hz disagrees with chirp rate x duration = {} Hz",
                            k * w.pulse_duration_s
                        ),
                    ));
                }
                k
            }
            (Some(k), None) => {
                finite_positive("waveform.chirp_rate_hz_per_s", k)?;
                k
            }
            (None, Some(b)) => {
                finite_positive("waveform.bandwidth_hz", b)?;
                b / w.pulse_duration_s
            }
            (None, None) => {
                return Err(invalid("waveform", "needs chirp_rate_hz_per_s or bandwidth_hz"));
            }
        };
        w.chirp_rate_hz_per_s = Some(k);
        w.bandwidth_hz = Some(k * w.pulse_duration_s);
        let fs = match w.sample_rate_hz {
            Some(fs) => {
                finite_positive("waveform.sample_rate_hz", fs)?;
                fs
            }
            None => crate::model::default_sample_rate(k, geometry.aperture_m(), w.pulse_duration_s),
        };
        w.sample_rate_hz = Some(fs);
        let waveform = LfmWaveform::new(w.f0_hz, k, w.pulse_duration_s, fs).map_err(model_err("waveform"))?;
        waveform
            .check_sample_rate(&geometry)
            .map_err(model_err("waveform.sample_rate_hz"))
    }

    fn check_targets(&self) -> std::result::Result<(), Invalid> {
        for (i, t) in self.targets.iter().enumerate() {
            if !(t.angle_deg.is_finite() && (-90.0..=90.0).contains(&t.angle_deg)) {
                return Err(invalid(
                    format!("targets[{i}].angle_deg"),
                    format!("must lie in [-90, 90], got {}", t.angle_deg),
                ));
            }
            finite_positive(&format!("targets[{i}].range_m"), t.range_m)?;
            if !(t.reflectivity.is_finite() && t.reflectivity >= 0.0) {
                return Err(invalid(
                    format!("targets[{i}].reflectivity"),
                    format!("must be non-negative, got {}", t.reflectivity),
                ));
            }
        }
        if let Some(snr) = self.noise.snr_db {
            if snr.is_nan() {
                return Err(invalid("noise.snr_db", "must be a number"));
            }
        }
        Ok(())
    }

    fn check_processing(&self) -> std::result::Result<(), Invalid> {
        let p = &self.processing;
        if p.zero_pad == 0 {
            return Err(invalid("processing.zero_pad", "must be at least 1"));
        }
        if p.grid_oversample == 0 {
            return Err(invalid("processing.grid_oversample", "must be at least 1"));
        }
        finite_positive("processing.cutoff_scale", p.cutoff_scale)?;
        if !(p.rel_threshold > 0.0 && p.rel_threshold < 1.0) {
            return Err(invalid(
                "processing.rel_threshold",
                format!("must lie in (0, 1), got {}", p.rel_threshold),
            ));
        }
        if let Some(g) = p.gate_deg {
            finite_positive("processing.gate_deg", g)?;
        }
        Ok(())
    }

    fn resolve_experiment(&mut self) -> std::result::Result<(), Invalid> {
        let target_angles: Vec<f64> = self.targets.iter().map(|t| t.angle_deg).collect();
        let first_range = self.targets.first().map(|t| t.range_m);
        let Some(e) = self.experiment.as_mut() else {
            return Ok(());
        };
        if e.snr_sweep_db.is_empty() {
            return Err(invalid("experiment.snr_sweep_db", "must not be empty"));
        }
        if let Some(i) = e.snr_sweep_db.iter().position(|s| s.is_nan()) {
            return Err(invalid(format!("experiment.snr_sweep_db[{i}]"), "must be a number"));
        }
        if e.trials == 0 {
            return Err(invalid("experiment.trials", "must be at least 1"));
        }
        let placement = match e.placement.take() {
            Some(p) => p,
            None if !target_angles.is_empty() => AnglePlacement::FixedList {
                angles_deg: target_angles,
            },
            None => AnglePlacement::EquallySpaced,
        };
        let counts = match (e.target_counts.take(), &placement) {
            (Some(c), _) => c,
            (None, AnglePlacement::FixedList { angles_deg })
            | (None, AnglePlacement::UniformJitter { angles_deg, .. }) => vec![angles_deg.len()],
            (None, AnglePlacement::EquallySpaced) => {
                return Err(invalid(
                    "experiment.target_counts",
                    "required for equally-spaced placement",
                ))
            }
        };
        e.placement = Some(placement);
        e.target_counts = Some(counts);
        e.ranges.get_or_insert(RangeModel::Common {
            range_m: first_range.unwrap_or(DEFAULT_EXPERIMENT_RANGE_M),
        });
        self.plan(None)?
            .validate().map_err(model_err("experiment"))
    }

    fn geometry(&self) -> std::result::Result<ArrayGeometry, Invalid> {
        let g = &self.geometry;
        let positions = g.positions_m.clone().ok_or_else(|| invalid("geometry", "unresolved"))?;
        let tx = g.tx_position_m.unwrap_or_else(|| centroid(&positions));
        ArrayGeometry::new(positions, tx).map_err(model_err("geometry.positions_m"))
    }

    fn waveform(&self) -> std::result::Result<LfmWaveform, Invalid> {
        let w = &self.waveform;
        let (Some(k), Some(fs)) = (w.chirp_rate_hz_per_s, w.sample_rate_hz) else {
            return Err(invalid("waveform", "unresolved"));
        };
        LfmWaveform::new(w.f0_hz, k, w.pulse_duration_s, fs).map_err(model_err("waveform"))
    }

    fn plan(&self, threads: Option<usize>) -> std::result::Result<ExperimentPlan, Invalid> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| invalid("experiment", "section missing"))?;
        Ok(ExperimentPlan {
            geometry: self.geometry()?,
            waveform: self.waveform()?,
            snr_sweep_db: e.snr_sweep_db.clone(),
            target_count_sweep: e.target_counts.clone().unwrap_or_default(),
            trials_per_point: e.trials,
            base_seed: e.base_seed,
            placement: e.placement.clone().unwrap_or(AnglePlacement::EquallySpaced),
            ranges: e.ranges.unwrap_or(RangeModel::Common {
                range_m: DEFAULT_EXPERIMENT_RANGE_M,
            }),
            reflectivity: e.reflectivity,
            synth: self.synth_options(),
            processing: self.processing.to_config(),
            threads,
        })
    }

    pub fn array_geometry(&self) -> Result<ArrayGeometry> {
        self.geometry().map_err(into_config)
    }

    pub fn lfm_waveform(&self) -> Result<LfmWaveform> {
        self.waveform().map_err(into_config)
    }

    pub fn scene(&self) -> Result<TargetScene> {
        TargetScene::new(
            self.targets
                .iter()
                .map(|t| Target::new(t.angle_deg, t.range_m, t.reflectivity))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn noise(&self) -> NoiseSpec {
        match self.noise.snr_db {
            Some(snr) => NoiseSpec::with_snr(snr, self.noise.seed),
            None => NoiseSpec {
                snr_db: None,
                seed: self.noise.seed,
            },
        }
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            delay_model: self.synthesis.delay_model,
            edge_mode: self.synthesis.edge_mode,
        }
    }

    pub fn processing_config(&self) -> ProcessingConfig {
        self.processing.to_config()
    }

    /// Experiment plan from the `[experiment]` section.
    pub fn experiment_plan(&self, threads: Option<usize>) -> Result<ExperimentPlan> {
        self.plan(threads).map_err(into_config)
    }

    /// Builds a resolved config describing a preset plan.
    pub fn from_plan(plan: &ExperimentPlan) -> Result<Self> {
        let cfg = ScenarioConfig {
            geometry: GeometrySection {
                positions_m: Some(plan.geometry.element_positions_m().to_vec()),
                gaps: None,
                unit_m: None,
                tx_position_m: Some(plan.geometry.tx_position_m()),
            },
            waveform: WaveformSection {
                f0_hz: plan.waveform.f0_hz,
                chirp_rate_hz_per_s: Some(plan.waveform.chirp_rate_hz_per_s),
                bandwidth_hz: None,
                pulse_duration_s: plan.waveform.pulse_duration_s,
                sample_rate_hz: Some(plan.waveform.sample_rate_hz),
            },
            noise: NoiseSection::default(),
            synthesis: SynthesisSection {
                delay_model: plan.synth.delay_model,
                edge_mode: plan.synth.edge_mode,
            },
            processing: ProcessingSection::from(&plan.processing),
            experiment: Some(ExperimentSection {
                snr_sweep_db: plan.snr_sweep_db.clone(),
                target_counts: Some(plan.target_count_sweep.clone()),
                trials: plan.trials_per_point,
                base_seed: plan.base_seed,
                placement: Some(plan.placement.clone()),
                ranges: Some(plan.ranges),
                reflectivity: plan.reflectivity,
            }),
            targets: Vec::new(),
        };
        cfg.resolve()
    }
}

fn into_config(inv: Invalid) -> Error {
    Error::Config(format!("{}: {}", inv.key, inv.message))
}

/// Reads, parses and resolves a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_toml_str(&text, path)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

enum Segment<'a> {
    Key(&'a str),
    Index(usize),
}

fn parse_key_path(key: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    for part in key.split('.') {
        let (name, rest) = part.split_once('[').unwrap_or((part, ""));
        if !name.is_empty() {
            out.push(Segment::Key(name));
        }
        for idx in rest.split('[') {
            if let Ok(i) = idx.trim_end_matches(']').parse() {
                out.push(Segment::Index(i));
            }
        }
    }
    out
}

/// Span of the deepest existing value along `key`.
fn span_of_key(text: &str, key: &str) -> Option<Range<usize>> {
    let root = DeTable::parse(text).ok()?;
    let mut span = None;
    let mut table: Option<&DeTable> = Some(root.get_ref());
    let mut array: Option<&[Spanned<DeValue>]> = None;
    for seg in parse_key_path(key) {
        let next: &Spanned<DeValue> = match seg {
            Segment::Key(k) => table?.iter().find(|(name, _)| name.get_ref() == k)?.1,
            Segment::Index(i) => array?.get(i)?,
        };
        span = Some(next.span());
        table = next.get_ref().as_table();
        array = next.get_ref().as_array().map(|a| &a[..]);
    }
    span
}

/// Dotted key path of the innermost key or value containing `offset`.
fn key_path_at(text: &str, offset: usize) -> Option<String> {
    let root = DeTable::parse(text).ok()?;
    let mut best: Option<(usize, String)> = None;
    visit_table(root.get_ref(), "", 0, offset, &mut best);
    best.map(|(_, p)| p)
}

fn visit_table(table: &DeTable, prefix: &str, depth: usize, offset: usize, best: &mut Option<(usize, String)>) {
    for (name, value) in table.iter() {
        let path = if prefix.is_empty() {
            name.get_ref().to_string()
        } else {
            format!("{prefix}.{}", name.get_ref())
        };
        let hit = name.span().contains(&offset) || value.span().contains(&offset);
        visit_value(value, path, depth + 1, hit, offset, best);
    }
}

fn visit_value(
    value: &Spanned<DeValue>,
    path: String,
    depth: usize,
    hit: bool,
    offset: usize,
    best: &mut Option<(usize, String)>,
) {
    if hit && best.as_ref().is_none_or(|(d, _)| depth > *d) {
        *best = Some((depth, path.clone()));
    }
    match value.get_ref() {
        DeValue::Table(t) => visit_table(t, &path, depth, offset, best),
        DeValue::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                let hit = item.span().contains(&offset);
                visit_value(item, format!("{path}[{i}]"), depth + 1, hit, offset, best);
            }
        }
        _ => {}
    }
}
