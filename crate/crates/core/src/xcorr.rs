//! The correlator bank: multiply element pairs and low-pass the product.
//!
//! The low-pass is a linear-phase windowed-sinc FIR (Kaiser window, 60 dB
//! stopband) applied by FFT convolution and trimmed to the input grid, so
//! outputs stay at full rate and aligned with the inputs.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{enumerate_baselines, max_tone_hz, Baseline, CUTOFF_MARGIN};
use crate::synth::{ElementSignal, SceneCapture};

/// Stopband attenuation the low-pass is designed for, dB.
pub const STOPBAND_DB: f64 = 60.0;

/// Transition band width as a fraction of the cutoff, centred on the cutoff.
const TRANSITION_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorOutput {
    pub baseline_m: f64,
    pub pair: (usize, usize),
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub integration_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorOptions {
    /// Cutoff as a multiple of the baseline's largest legal tone `K·D/c`.
    /// `None` skips the low-pass and keeps the raw product.
    pub cutoff_scale: Option<f64>,
}

impl Default for CorrelatorOptions {
    fn default() -> Self {
        Self {
            cutoff_scale: Some(CUTOFF_MARGIN),
        }
    }
}

/// Default cutoff for a baseline: `1.25·K·D/c`.
pub fn default_cutoff_hz(chirp_rate_hz_per_s: f64, baseline_m: f64) -> f64 {
    CUTOFF_MARGIN * max_tone_hz(chirp_rate_hz_per_s, baseline_m)
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass taps with unit DC gain, or `None` when the
/// cutoff leaves nothing to reject.
pub fn lowpass_taps(cutoff_hz: f64, sample_rate_hz: f64) -> Option<Vec<f64>> {
    let nyquist = sample_rate_hz / 2.0;
    if cutoff_hz >= nyquist {
        log::warn!("low-pass cutoff {cutoff_hz} Hz at or above Nyquist {nyquist} Hz; filter bypassed");
        return None;
    }
    let fc = cutoff_hz / sample_rate_hz;
    let transition = TRANSITION_FRACTION * fc;
    // Kaiser's design formulas run ~1 dB short at the band edge.
    let atten = STOPBAND_DB + 3.0;
    let beta = 0.1102 * (atten - 8.7);
    let order = ((atten - 7.95) / (2.285 * 2.0 * PI * transition)).ceil() as usize;
    let len = order | 1;
    let mid = (len / 2) as f64;
    let i0_beta = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let m = n as f64 - mid;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m).sin() / (PI * m)
            };
            let r = m / mid.max(1.0);
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            sinc * w
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    Some(taps)
}

/// Linear convolution trimmed to the input length and compensated for the
/// `(taps − 1)/2` group delay of an odd-length symmetric filter.
fn filter_same(input: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = input.len();
    let full = n + taps.len() - 1;
    let size = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut a: Vec<Complex64> = input.to_vec();
    a.resize(size, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    b.resize(size, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);

    let delay = (taps.len() - 1) / 2;
    let scale = 1.0 / size as f64;
    a[delay..delay + n].iter().map(|z| z * scale).collect()
}

/// `LPF(first · conj(second))`.
///
/// The output tone of a target is `K(τ_second − τ_first)`.
pub fn correlate_pair(
    baseline: &Baseline,
    first: &ElementSignal,
    second: &ElementSignal,
    lowpass_cutoff_hz: Option<f64>,
) -> Result<CorrelatorOutput> {
    if !first.same_grid(second) {
        return Err(Error::Contract(format!(
            "pair {:?}: sample grids differ ({} samples @ {} Hz vs {} @ {} Hz)",
            baseline.pair,
            first.len(),
            first.sample_rate_hz,
            second.len(),
            second.sample_rate_hz
        )));
    }
    if first.is_empty() {
        return Err(Error::Contract(format!("pair {:?}: empty signals", baseline.pair)));
    }
    let product: Vec<Complex64> = first
        .samples
        .iter()
        .zip(&second.samples)
        .map(|(a, b)| a * b.conj())
        .collect();
    let samples = match lowpass_cutoff_hz.and_then(|fc| lowpass_taps(fc, first.sample_rate_hz)) {
        Some(taps) => filter_same(&product, &taps),
        None => product,
    };
    Ok(CorrelatorOutput {
        baseline_m: baseline.length_m,
        pair: baseline.pair,
        samples,
        sample_rate_hz: first.sample_rate_hz,
        integration_time_s: first.duration_s(),
    })
}

/// One correlator per baseline, ascending by length.
///
/// For a pair `(i, j)` with `x_i < x_j` the element at `x_j` is taken as
/// `first`, so a target at positive angle (towards +x) reaches it earlier and
/// produces the positive tone `+K·D·sin θ / c`.
pub fn correlate_bank(
    capture: &SceneCapture,
    opts: &CorrelatorOptions,
) -> Result<Vec<CorrelatorOutput>> {
    if capture.signals.len() != capture.geometry.num_elements() {
        return Err(Error::Contract(format!(
            "{} signals for {} elements",
            capture.signals.len(),
            capture.geometry.num_elements()
        )));
    }
    let k = capture.waveform.chirp_rate_hz_per_s;
    enumerate_baselines(&capture.geometry)
        .par_iter()
        .map(|b| {
            let cutoff = opts.cutoff_scale.map(|s| s * max_tone_hz(k, b.length_m));
            correlate_pair(
                b,
                &capture.signals[b.pair.1],
                &capture.signals[b.pair.0],
                cutoff,
            )
        })
        .collect()
}

/// Real in-phase path: `LPF(v_a · v_b)` on passband samples.
///
/// Equals half the real part of the baseband correlator output once the
/// sum-frequency term is filtered away.
pub fn correlate_real_reference(
    first: &[f64],
    second: &[f64],
    sample_rate_hz: f64,
    lowpass_cutoff_hz: f64,
) -> Result<Vec<f64>> {
    if first.len() != second.len() {
        return Err(Error::Contract(format!(
            "real inputs differ in length ({} vs {})",
            first.len(),
            second.len()
        )));
    }
    let product: Vec<Complex64> = first
        .iter()
        .zip(second)
        .map(|(a, b)| Complex64::new(a * b, 0.0))
        .collect();
    let out = match lowpass_taps(lowpass_cutoff_hz, sample_rate_hz) {
        Some(taps) => filter_same(&product, &taps),
        None => product,
    };
    Ok(out.into_iter().map(|z| z.re).collect())
}
