//! Received-signal synthesis on the receive array.
//!
//! Each element signal is the complex baseband echo sum
//!
//! ```text
//! v_i[k] = Σ_targets a · exp(j[φ(t_k − τ_i) − φ(t_k)]) + n_i[k]
//! ```
//!
//! where `φ(t) = 2π(f0·t + K/2·t²)` is the transmitted LFM phase. Removing the
//! common reference `φ(t)` keeps the sample rate tied to the correlator tones
//! rather than the carrier, while `v_i·conj(v_j)` equals the continuous-time
//! product of the analytic echoes at every sample instant.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::model::{
    round_trip_delay, ArrayGeometry, DelayModel, LfmWaveform, NoiseSpec, TargetScene,
};
use crate::seed;

/// Set after the first long-delay warning so Monte Carlo runs log it once.
static LONG_DELAY_WARNED: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Time of the first sample relative to the start of transmission.
    pub t0_s: f64,
}

impl ElementSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.t0_s + k as f64 / self.sample_rate_hz
    }

    pub fn same_grid(&self, other: &ElementSignal) -> bool {
        self.samples.len() == other.samples.len()
            && self.sample_rate_hz == other.sample_rate_hz
            && self.t0_s == other.t0_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneCapture {
    pub signals: Vec<ElementSignal>,
    pub geometry: ArrayGeometry,
    pub waveform: LfmWaveform,
    /// Empty for captures replayed from disk.
    pub scene: TargetScene,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// Echoes cover the whole receive window.
    #[default]
    Ignore,
    /// Samples before an echo's arrival carry nothing from that echo.
    Strict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub delay_model: DelayModel,
    pub edge_mode: EdgeMode,
}

/// Transmitted phase `2π(f0·t + K/2·t²)` in radians, valid on `[0, T]`.
pub fn lfm_phase(waveform: &LfmWaveform, t: f64) -> Result<f64> {
    if !(0.0..=waveform.pulse_duration_s).contains(&t) {
        return Err(Error::Domain(format!(
            "t = {t} s outside pulse [0, {}]",
            waveform.pulse_duration_s
        )));
    }
    Ok(TAU * lfm_phase_cycles(waveform, t))
}

/// Unreduced phase in cycles. Each term is kept separate until the final
/// sum so that callers can reduce mod 1 without losing the fractional part.
pub fn lfm_phase_cycles(waveform: &LfmWaveform, t: f64) -> f64 {
    waveform.f0_hz * t + 0.5 * waveform.chirp_rate_hz_per_s * t * t
}

/// Instantaneous frequency `f0 + K·t` in Hz.
pub fn instantaneous_frequency(waveform: &LfmWaveform, t: f64) -> f64 {
    waveform.f0_hz + waveform.chirp_rate_hz_per_s * t
}

/// Reduces a phase in radians to `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w > std::f64::consts::PI {
        w - TAU
    } else {
        w
    }
}

/// Baseband echo phase for delay `tau` as `(offset, rate)` in cycles and Hz:
/// `φ(t − τ) − φ(t) = 2π(offset + rate·t)`.
fn echo_phase(waveform: &LfmWaveform, tau: f64) -> (f64, f64) {
    let k = waveform.chirp_rate_hz_per_s;
    let offset = (-waveform.f0_hz * tau).fract() + (0.5 * k * tau * tau).fract();
    (offset, -k * tau)
}

fn add_echo(
    samples: &mut [Complex64],
    amplitude: f64,
    offset: f64,
    rate: f64,
    fs: f64,
    t0: f64,
    first: usize,
) {
    for (k, s) in samples.iter_mut().enumerate().skip(first) {
        let t = t0 + k as f64 / fs;
        let cycles = (offset + rate * t).fract();
        let (sin, cos) = (TAU * cycles).sin_cos();
        *s += Complex64::new(amplitude * cos, amplitude * sin);
    }
}

/// Complex baseband signal of one receive element.
pub fn synthesize_element(
    geometry: &ArrayGeometry,
    waveform: &LfmWaveform,
    scene: &TargetScene,
    rx_index: usize,
    noise: &NoiseSpec,
    opts: &SynthOptions,
) -> Result<ElementSignal> {
    if rx_index >= geometry.num_elements() {
        return Err(Error::Config(format!(
            "element index {rx_index} out of range for {} elements",
            geometry.num_elements()
        )));
    }
    let n = waveform.num_samples();
    let fs = waveform.sample_rate_hz;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];

    for target in &scene.targets {
        let tau = round_trip_delay(geometry, target, rx_index, opts.delay_model);
        if tau > waveform.pulse_duration_s / 10.0 && !LONG_DELAY_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!(
                "echo delay {tau:.3e} s exceeds a tenth of the {:.3e} s pulse; edge effects ignored",
                waveform.pulse_duration_s
            );
        }
        let first = match opts.edge_mode {
            EdgeMode::Ignore => 0,
            EdgeMode::Strict => ((tau * fs).ceil().max(0.0) as usize).min(n),
        };
        let (offset, rate) = echo_phase(waveform, tau);
        add_echo(&mut samples, target.reflectivity, offset, rate, fs, 0.0, first);
    }

    if let Some(var) = noise.noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(noise.seed, &[rx_index as u64]));
        let normal = Normal::new(0.0, (var / 2.0).sqrt())
            .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
        for s in samples.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *s += Complex64::new(re, im);
        }
    }

    if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::Synthesis(format!(
            "non-finite sample on element {rx_index}"
        )));
    }
    Ok(ElementSignal {
        samples,
        sample_rate_hz: fs,
        t0_s: 0.0,
    })
}

/// Signals for every receive element. Noise streams are independent per
/// element and derived from `(noise.seed, element index)`.
pub fn synthesize_capture(
    geometry: &ArrayGeometry,
    waveform: &LfmWaveform,
    scene: &TargetScene,
    noise: &NoiseSpec,
    opts: &SynthOptions,
) -> Result<SceneCapture> {
    waveform.check_sample_rate(geometry)?;
    let signals = (0..geometry.num_elements())
        .map(|i| synthesize_element(geometry, waveform, scene, i, noise, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneCapture {
        signals,
        geometry: geometry.clone(),
        waveform: *waveform,
        scene: scene.clone(),
        noise: Some(*noise),
    })
}

/// Real, in-phase passband echoes `Σ a·cos φ(t − τ)`, noiseless.
///
/// Needs a sample rate above twice `f0 + B`; meant for small validation
/// scenes only.
pub fn synthesize_element_passband(
    geometry: &ArrayGeometry,
    waveform: &LfmWaveform,
    scene: &TargetScene,
    rx_index: usize,
    opts: &SynthOptions,
) -> Vec<f64> {
    let n = waveform.num_samples();
    let fs = waveform.sample_rate_hz;
    let mut out = vec![0.0; n];
    for target in &scene.targets {
        let tau = round_trip_delay(geometry, target, rx_index, opts.delay_model);
        for (k, v) in out.iter_mut().enumerate() {
            let t = k as f64 / fs - tau;
            let cycles = (waveform.f0_hz * t).fract()
                + (0.5 * waveform.chirp_rate_hz_per_s * t * t).fract();
            *v += target.reflectivity * (TAU * cycles).cos();
        }
    }
    out
}
