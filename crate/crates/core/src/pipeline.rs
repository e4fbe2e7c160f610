//! The end-to-end processing chain shared by the CLI, the Monte Carlo engine
//! and the C ABI: correlate → pseudo-spectra → fuse → detect.

use serde::{Deserialize, Serialize};

use crate::detect::{detect_peaks, Detection, Gate};
use crate::error::Result;
use crate::model::CUTOFF_MARGIN;
use crate::spectrum::{fuse, pseudo_spectrum, BaselineSpectrum, FusedAngleSpectrum, FusionOptions, Window};
use crate::synth::SceneCapture;
use crate::xcorr::{correlate_bank, CorrelatorOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessingConfig {
    pub window: Window,
    pub zero_pad: usize,
    /// Low-pass cutoff over `K·D/c`; `None` disables the low-pass.
    pub cutoff_scale: Option<f64>,
    pub grid_oversample: usize,
    pub normalize: bool,
    pub rel_threshold: f64,
    pub min_separation_bins: usize,
    /// Truth-matching gate in degrees; `None` means one resolution cell in `sinθ`.
    pub gate_deg: Option<f64>,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            zero_pad: 4,
            cutoff_scale: Some(CUTOFF_MARGIN),
            grid_oversample: 4,
            normalize: true,
            rel_threshold: 0.1,
            min_separation_bins: 4,
            gate_deg: None,
        }
    }
}

impl ProcessingConfig {
    pub fn correlator(&self) -> CorrelatorOptions {
        CorrelatorOptions {
            cutoff_scale: self.cutoff_scale,
        }
    }

    pub fn fusion(&self) -> FusionOptions {
        FusionOptions {
            grid_oversample: self.grid_oversample,
            normalize: self.normalize,
        }
    }

    /// Matching gate for a fused spectrum with the given grid step.
    pub fn gate_for(&self, grid_step: f64) -> Gate {
        match self.gate_deg {
            Some(g) => Gate::Degrees(g),
            None => Gate::SinTheta(grid_step * self.grid_oversample.max(1) as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProcessedScene {
    pub spectra: Vec<BaselineSpectrum>,
    pub fused: FusedAngleSpectrum,
    pub detections: Vec<Detection>,
}

pub fn process_capture(capture: &SceneCapture, cfg: &ProcessingConfig) -> Result<ProcessedScene> {
    let corr = correlate_bank(capture, &cfg.correlator())?;
    let spectra = corr
        .iter()
        .map(|c| pseudo_spectrum(c, cfg.window, cfg.zero_pad))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse(&spectra, capture.waveform.chirp_rate_hz_per_s, &cfg.fusion())?;
    let detections = detect_peaks(&fused, cfg.rel_threshold, cfg.min_separation_bins)?;
    Ok(ProcessedScene {
        spectra,
        fused,
        detections,
    })
}
