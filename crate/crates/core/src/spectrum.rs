//! Correlator pseudo-spectra and multi-baseline fusion.
//!
//! Each correlator output is windowed and Fourier transformed; a target at
//! angle `θ` shows up at `f = K·D·sin θ / c`. Spectra are resampled onto a
//! shared `sin θ` grid and multiplied, which keeps only responses that land on
//! the same angle for every baseline.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::SPEED_OF_LIGHT;
use crate::xcorr::CorrelatorOutput;

/// Minimum correlator length accepted by [`pseudo_spectrum`].
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rect,
    #[default]
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * (k as f64 + 0.5) / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpectrum {
    pub baseline_m: f64,
    pub pair: (usize, usize),
    /// Signed bin centres, ascending, zero frequency in the middle.
    pub freq_bins_hz: Vec<f64>,
    /// Magnitudes scaled by the window sum, so a unit tone peaks near 1.
    pub magnitudes: Vec<f64>,
    /// Native resolution `1 / integration_time`.
    pub resolution_hz: f64,
}

impl BaselineSpectrum {
    pub fn bin_spacing_hz(&self) -> f64 {
        self.freq_bins_hz[1] - self.freq_bins_hz[0]
    }

    pub fn integration_time_s(&self) -> f64 {
        1.0 / self.resolution_hz
    }
}

/// Magnitude spectrum of a correlator output, zero-padded by `zero_pad_factor`.
pub fn pseudo_spectrum(
    corr: &CorrelatorOutput,
    window: Window,
    zero_pad_factor: usize,
) -> Result<BaselineSpectrum> {
    if zero_pad_factor < 1 {
        return Err(Error::Config("zero-pad factor must be at least 1".into()));
    }
    let n = corr.samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "correlator output has {n} samples, need at least {MIN_SAMPLES}"
        )));
    }
    let nfft = n * zero_pad_factor;
    let w = window.coefficients(n);
    let wsum: f64 = w.iter().sum();
    let mut buf: Vec<Complex64> = corr
        .samples
        .iter()
        .zip(&w)
        .map(|(s, w)| s * *w)
        .collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::<f64>::new().plan_fft_forward(nfft).process(&mut buf);

    let half = nfft / 2;
    let df = corr.sample_rate_hz / nfft as f64;
    let freq_bins_hz = (0..nfft)
        .map(|k| (k as f64 - half as f64) * df)
        .collect();
    let magnitudes = (0..nfft)
        .map(|k| buf[(k + nfft - half) % nfft].norm() / wsum)
        .collect();
    Ok(BaselineSpectrum {
        baseline_m: corr.baseline_m,
        pair: corr.pair,
        freq_bins_hz,
        magnitudes,
        resolution_hz: corr.sample_rate_hz / n as f64,
    })
}

/// `f·c / (K·D)`. Not clamped: `|result| > 1` means no physical angle.
pub fn freq_to_sin_theta(f_hz: f64, chirp_rate_hz_per_s: f64, baseline_m: f64) -> f64 {
    f_hz * SPEED_OF_LIGHT / (chirp_rate_hz_per_s * baseline_m)
}

/// `K·D·sin θ / c`.
pub fn sin_theta_to_freq(sin_theta: f64, chirp_rate_hz_per_s: f64, baseline_m: f64) -> f64 {
    chirp_rate_hz_per_s * baseline_m * sin_theta / SPEED_OF_LIGHT
}

/// Uniform `sin θ` grid over `[-1, 1]` with an odd point count (so 0 is on
/// the grid) and spacing no larger than `max_step`.
pub fn sin_theta_grid(max_step: f64) -> Result<Vec<f64>> {
    if !(max_step.is_finite() && max_step > 0.0) {
        return Err(Error::Config(format!("grid step must be positive, got {max_step}")));
    }
    let intervals = ((2.0 / max_step).ceil() as usize).max(2);
    let intervals = intervals + intervals % 2;
    Ok((0..=intervals)
        .map(|k| -1.0 + 2.0 * k as f64 / intervals as f64)
        .collect())
}

/// Magnitudes of `spec` at the frequencies `K·D·s/c` of each grid point, by
/// linear interpolation; points off the computed band get 0.
pub fn to_angle_axis(spec: &BaselineSpectrum, chirp_rate_hz_per_s: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sin(theta) grid".into()));
    }
    let f_first = spec.freq_bins_hz[0];
    let df = spec.bin_spacing_hz();
    let last = (spec.magnitudes.len() - 1) as f64;
    Ok(grid
        .iter()
        .map(|&s| {
            let pos = (sin_theta_to_freq(s, chirp_rate_hz_per_s, spec.baseline_m) - f_first) / df;
            if !(0.0..=last).contains(&pos) {
                return 0.0;
            }
            let k = (pos.floor() as usize).min(spec.magnitudes.len() - 2);
            let frac = pos - k as f64;
            spec.magnitudes[k] * (1.0 - frac) + spec.magnitudes[k + 1] * frac
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedAngleSpectrum {
    pub sin_theta_grid: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub contributing_baselines: usize,
    /// Resampled (and, if enabled, unit-peak normalized) input curves, in
    /// input order.
    pub per_baseline: Vec<Vec<f64>>,
    pub baseline_m: Vec<f64>,
}

impl FusedAngleSpectrum {
    pub fn grid_step(&self) -> f64 {
        self.sin_theta_grid[1] - self.sin_theta_grid[0]
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionOptions {
    /// Grid points per native angular bin of the longest baseline.
    pub grid_oversample: usize,
    /// Scale each resampled curve to unit peak before multiplying.
    pub normalize: bool,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            grid_oversample: 4,
            normalize: true,
        }
    }
}

/// Element-wise product of all baseline spectra on a common `sin θ` grid.
///
/// The grid step is `c / (K·D_max·T) / oversample`, i.e. the native angular
/// bin of the longest baseline subdivided.
pub fn fuse(
    spectra: &[BaselineSpectrum],
    chirp_rate_hz_per_s: f64,
    opts: &FusionOptions,
) -> Result<FusedAngleSpectrum> {
    if spectra.is_empty() {
        return Err(Error::Config("nothing to fuse".into()));
    }
    if opts.grid_oversample < 1 {
        return Err(Error::Config("grid oversample must be at least 1".into()));
    }
    if spectra.len() == 1 {
        log::warn!("fusing a single baseline: no ambiguity rejection possible");
    }
    let d_max = spectra.iter().map(|s| s.baseline_m).fold(0.0, f64::max);
    let t_int = spectra.iter().map(|s| s.integration_time_s()).fold(0.0, f64::max);
    let native = SPEED_OF_LIGHT / (chirp_rate_hz_per_s * d_max * t_int);
    let grid = sin_theta_grid(native / opts.grid_oversample as f64)?;

    let per_baseline = spectra
        .iter()
        .map(|s| {
            let mut curve = to_angle_axis(s, chirp_rate_hz_per_s, &grid)?;
            if opts.normalize {
                let peak = curve.iter().cloned().fold(0.0, f64::max);
                if peak > 0.0 {
                    curve.iter_mut().for_each(|v| *v /= peak);
                }
            }
            Ok(curve)
        })
        .collect::<Result<Vec<_>>>()?;

    let magnitudes = (0..grid.len())
        .map(|k| per_baseline.iter().map(|c| c[k]).product())
        .collect();
    Ok(FusedAngleSpectrum {
        sin_theta_grid: grid,
        magnitudes,
        contributing_baselines: spectra.len(),
        per_baseline,
        baseline_m: spectra.iter().map(|s| s.baseline_m).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 4e15;

    fn corr_from(samples: Vec<Complex64>, fs: f64, d: f64) -> CorrelatorOutput {
        let n = samples.len();
        CorrelatorOutput {
            baseline_m: d,
            pair: (0, 1),
            samples,
            sample_rate_hz: fs,
            integration_time_s: n as f64 / fs,
        }
    }

    fn tone_corr(f: f64, fs: f64, n: usize, d: f64) -> CorrelatorOutput {
        let s = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 / fs))
            .collect();
        corr_from(s, fs, d)
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0
    }

    #[test]
    fn tone_peak_within_a_bin() {
        let d = 10.0;
        let fs = 1.024e9;
        let f = sin_theta_to_freq(45f64.to_radians().sin(), K, d);
        let spec = pseudo_spectrum(&tone_corr(f, fs, 1024, d), Window::Hann, 4).unwrap();
        let peak = spec.freq_bins_hz[argmax(&spec.magnitudes)];
        assert!((peak - f).abs() <= spec.resolution_hz);
        assert!((spec.magnitudes[argmax(&spec.magnitudes)] - 1.0).abs() < 0.1);
        assert!((spec.bin_spacing_hz() - spec.resolution_hz / 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_input_and_bad_params() {
        let c = corr_from(vec![Complex64::new(0.0, 0.0); 64], 1e6, 1.0);
        let s = pseudo_spectrum(&c, Window::Rect, 2).unwrap();
        assert!(s.magnitudes.iter().all(|m| *m == 0.0));
        assert_eq!(s.magnitudes.len(), 128);
        assert!(pseudo_spectrum(&c, Window::Rect, 0).is_err());
        let short = corr_from(vec![Complex64::new(0.0, 0.0); 15], 1e6, 1.0);
        assert!(pseudo_spectrum(&short, Window::Rect, 1).is_err());
    }

    #[test]
    fn experimental_resolution() {
        // 100 μs integration gives 10 kHz bins.
        let c = corr_from(vec![Complex64::new(1.0, 0.0); 64], 640e3, 0.75);
        let s = pseudo_spectrum(&c, Window::Rect, 1).unwrap();
        assert!((s.resolution_hz - 10e3).abs() < 1e-6);
        assert!((s.bin_spacing_hz() - 10e3).abs() < 1e-6);
        assert_eq!(s.freq_bins_hz[32], 0.0);
    }

    #[test]
    fn frequency_angle_mapping() {
        assert_eq!(freq_to_sin_theta(0.0, K, 10.0), 0.0);
        assert!((freq_to_sin_theta(1.33426e8, 4e15, 10.0) - 1.0).abs() < 1e-4);
        let s = freq_to_sin_theta(15.108e3, 3.5e13, 0.5);
        assert!((s - 0.25882).abs() < 1e-4);
        assert!((s.asin().to_degrees() - 15.0).abs() < 0.01);
        // Out-of-band frequencies are reported, not clamped.
        assert!(freq_to_sin_theta(2e8, 4e15, 10.0) > 1.0);
    }

    #[test]
    fn grid_shape() {
        let g = sin_theta_grid(0.01).unwrap();
        assert_eq!(g[0], -1.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(g.len() % 2, 1);
        assert_eq!(g[g.len() / 2], 0.0);
        assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.01 + 1e-15));
        assert!(sin_theta_grid(0.0).is_err());
    }

    #[test]
    fn every_baseline_peaks_at_the_same_angle() {
        let fs = 2.048e9;
        let grid = sin_theta_grid(0.0005).unwrap();
        let want = grid.iter().enumerate().min_by(|a, b| (a.1 - 0.3).abs().total_cmp(&(b.1 - 0.3).abs())).unwrap().0;
        for d in [2.0, 3.0, 5.0, 8.0, 10.0] {
            let f = sin_theta_to_freq(0.3, K, d);
            let spec = pseudo_spectrum(&tone_corr(f, fs, 2048, d), Window::Hann, 8).unwrap();
            let curve = to_angle_axis(&spec, K, &grid).unwrap();
            let got = argmax(&curve);
            assert!((got as isize - want as isize).abs() <= 1, "D={d}: {got} vs {want}");
        }
        assert!(to_angle_axis(
            &pseudo_spectrum(&tone_corr(0.0, fs, 64, 1.0), Window::Hann, 1).unwrap(),
            K,
            &[]
        )
        .is_err());
    }

    #[test]
    fn out_of_band_tone_contributes_nothing() {
        let fs = 1.024e9;
        let d = 2.0;
        // 1.6× the largest legal tone for this baseline.
        let f = 1.6 * sin_theta_to_freq(1.0, K, d);
        let spec = pseudo_spectrum(&tone_corr(f, fs, 1024, d), Window::Hann, 4).unwrap();
        let curve = to_angle_axis(&spec, K, &sin_theta_grid(0.001).unwrap()).unwrap();
        let full_peak = spec.magnitudes.iter().cloned().fold(0.0, f64::max);
        assert!(curve.iter().cloned().fold(0.0, f64::max) < 1e-2 * full_peak);
    }

    #[test]
    fn zero_spectrum_resamples_to_zero_and_annihilates() {
        let fs = 1.024e9;
        let zero = pseudo_spectrum(&corr_from(vec![Complex64::new(0.0, 0.0); 1024], fs, 5.0), Window::Hann, 2).unwrap();
        let grid = sin_theta_grid(0.01).unwrap();
        assert!(to_angle_axis(&zero, K, &grid).unwrap().iter().all(|v| *v == 0.0));
        let live = pseudo_spectrum(&tone_corr(3e7, fs, 1024, 10.0), Window::Hann, 2).unwrap();
        let fused = fuse(&[live, zero], K, &FusionOptions::default()).unwrap();
        assert!(fused.magnitudes.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fusion_narrows_the_mainlobe() {
        let fs = 2.048e9;
        let s0 = 0.4;
        let spectra: Vec<_> = [2.0, 5.0, 10.0]
            .iter()
            .map(|&d| pseudo_spectrum(&tone_corr(sin_theta_to_freq(s0, K, d), fs, 2048, d), Window::Hann, 4).unwrap())
            .collect();
        let fused = fuse(&spectra, K, &FusionOptions::default()).unwrap();
        let peak = argmax(&fused.magnitudes);
        assert!((fused.sin_theta_grid[peak] - s0).abs() <= fused.grid_step());
        let width = |v: &[f64]| {
            let m = v.iter().cloned().fold(0.0, f64::max);
            v.iter().filter(|x| **x >= 0.5 * m).count()
        };
        let narrowest = fused.per_baseline.iter().map(|c| width(c)).min().unwrap();
        assert!(width(&fused.magnitudes) <= narrowest);
        // Product of unit-peak factors never exceeds any factor.
        for (k, m) in fused.magnitudes.iter().enumerate() {
            for c in &fused.per_baseline {
                assert!(*m <= c[k] + 1e-15);
            }
        }
    }

    #[test]
    fn fusion_order_and_scale_invariance() {
        let fs = 2.048e9;
        let mk = |d: f64, s: &[f64]| {
            let samples = (0..2048)
                .map(|k| {
                    s.iter()
                        .map(|&si| Complex64::from_polar(1.0, 2.0 * PI * sin_theta_to_freq(si, K, d) * k as f64 / fs))
                        .sum()
                })
                .collect();
            pseudo_spectrum(&corr_from(samples, fs, d), Window::Hann, 2).unwrap()
        };
        let a = mk(3.0, &[-0.2, 0.5, 0.9]);
        let b = mk(7.0, &[-0.2, 0.5, 0.1]);
        let c = mk(10.0, &[-0.2, 0.5, -0.7]);
        let opts = FusionOptions::default();
        let f1 = fuse(&[a.clone(), b.clone(), c.clone()], K, &opts).unwrap();
        let f2 = fuse(&[c.clone(), a.clone(), b.clone()], K, &opts).unwrap();
        for (x, y) in f1.magnitudes.iter().zip(&f2.magnitudes) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
        let mut scaled = b.clone();
        scaled.magnitudes.iter_mut().for_each(|m| *m *= 37.5);
        let f3 = fuse(&[a, scaled, c], K, &opts).unwrap();
        for (x, y) in f1.magnitudes.iter().zip(&f3.magnitudes) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn single_baseline_passes_through() {
        let s = pseudo_spectrum(&tone_corr(1e7, 1.024e9, 1024, 4.0), Window::Hann, 2).unwrap();
        let fused = fuse(std::slice::from_ref(&s), K, &FusionOptions::default()).unwrap();
        assert_eq!(fused.contributing_baselines, 1);
        assert_eq!(fused.magnitudes, fused.per_baseline[0]);
        assert!(fuse(&[], K, &FusionOptions::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mapping_is_monotone_and_invertible(
                k in 1e12f64..1e16, d in 0.05f64..100.0, theta in -90.0f64..90.0, df in 1.0f64..1e6
            ) {
                let s = theta.to_radians().sin();
                let f = sin_theta_to_freq(s, k, d);
                let back = freq_to_sin_theta(f, k, d);
                prop_assert!((back - s).abs() <= 1e-12 * s.abs().max(1e-300) + 1e-300);
                prop_assert!(freq_to_sin_theta(f + df, k, d) > back);
            }
        }
    }
}
