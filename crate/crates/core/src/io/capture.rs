//! Multichannel IQ captures on disk.
//!
//! A capture is a TOML sidecar plus a raw payload of little-endian `f32`
//! values. Each time index holds one frame `[ch0_re, ch0_im, ch1_re, ch1_im, ...]`,
//! so the payload is exactly `channels × samples × 8` bytes. Physical sample
//! values are the stored values times `scale`.
//!
//! ```toml
//! format = "chirp-capture"
//! version = 1
//! sample_rate_hz = 640000.0
//! f0_hz = 36000000000.0
//! chirp_rate_hz_per_s = 35000000000000.0
//! element_positions_m = [0.0, 0.25, 0.75]
//! tx_position_m = 0.3333333333333333
//! num_samples = 64
//! num_channels = 3
//! scale = 1.0
//! t0_s = 0.0
//! payload = "capture.bin"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, LfmWaveform, TargetScene};
use crate::synth::{ElementSignal, SceneCapture};

pub const FORMAT_NAME: &str = "chirp-capture";
pub const FORMAT_VERSION: u32 = 1;
const BYTES_PER_SAMPLE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureMeta {
    pub format: String,
    pub version: u32,
    pub sample_rate_hz: f64,
    pub f0_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    pub element_positions_m: Vec<f64>,
    pub tx_position_m: f64,
    pub num_samples: usize,
    pub num_channels: usize,
    pub scale: f64,
    #[serde(default)]
    pub t0_s: f64,
    /// Payload file name, relative to the sidecar.
    pub payload: String,
}

impl CaptureMeta {
    pub fn payload_len(&self) -> usize {
        self.num_channels * self.num_samples * BYTES_PER_SAMPLE
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT_NAME {
            return Err(Error::Format(format!(
                "sidecar format is \"{}\", expected \"{FORMAT_NAME}\"",
                self.format
            )));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported capture version {} (this build reads {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.num_channels != self.element_positions_m.len() {
            return Err(Error::Format(format!(
                "sidecar declares {} channels but {} element positions",
                self.num_channels,
                self.element_positions_m.len()
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Format(format!("scale must be positive, got {}", self.scale)));
        }
        if self.num_samples == 0 {
            return Err(Error::Format("capture holds no samples".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.element_positions_m.clone(), self.tx_position_m)
    }

    /// Waveform whose pulse spans the captured window.
    pub fn waveform(&self) -> Result<LfmWaveform> {
        LfmWaveform::new(
            self.f0_hz,
            self.chirp_rate_hz_per_s,
            self.num_samples as f64 / self.sample_rate_hz,
            self.sample_rate_hz,
        )
    }
}

/// Sidecar metadata plus the stored payload values, frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFile {
    pub meta: CaptureMeta,
    pub payload: Vec<f32>,
}

impl CaptureFile {
    /// Quantizes a capture to `f32` with unit scale.
    pub fn from_capture(capture: &SceneCapture, payload_name: &str) -> Result<Self> {
        let first = capture
            .signals
            .first()
            .ok_or_else(|| Error::Format("capture has no channels".into()))?;
        if let Some(bad) = capture.signals.iter().position(|s| !s.same_grid(first)) {
            return Err(Error::Contract(format!(
                "channel {bad} is not on the same time grid as channel 0"
            )));
        }
        let n = first.len();
        let mut payload = Vec::with_capacity(n * capture.signals.len() * 2);
        for k in 0..n {
            for s in &capture.signals {
                payload.push(s.samples[k].re as f32);
                payload.push(s.samples[k].im as f32);
            }
        }
        Ok(Self {
            meta: CaptureMeta {
                format: FORMAT_NAME.into(),
                version: FORMAT_VERSION,
                sample_rate_hz: first.sample_rate_hz,
                f0_hz: capture.waveform.f0_hz,
                chirp_rate_hz_per_s: capture.waveform.chirp_rate_hz_per_s,
                element_positions_m: capture.geometry.element_positions_m().to_vec(),
                tx_position_m: capture.geometry.tx_position_m(),
                num_samples: n,
                num_channels: capture.signals.len(),
                scale: 1.0,
                t0_s: first.t0_s,
                payload: payload_name.into(),
            },
            payload,
        })
    }

    pub fn to_capture(&self) -> Result<SceneCapture> {
        self.meta.validate()?;
        let m = &self.meta;
        let signals = (0..m.num_channels)
            .map(|c| ElementSignal {
                samples: (0..m.num_samples)
                    .map(|k| {
                        let at = 2 * (k * m.num_channels + c);
                        Complex64::new(
                            f64::from(self.payload[at]) * m.scale,
                            f64::from(self.payload[at + 1]) * m.scale,
                        )
                    })
                    .collect(),
                sample_rate_hz: m.sample_rate_hz,
                t0_s: m.t0_s,
            })
            .collect();
        Ok(SceneCapture {
            signals,
            geometry: m.geometry()?,
            waveform: m.waveform()?,
            scene: TargetScene::default(),
            noise: None,
        })
    }

    pub fn payload_bytes(&self) -> Vec<u8> {
        self.payload.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Writes the sidecar and its payload next to it.
    pub fn save(&self, sidecar: &Path) -> Result<()> {
        self.meta.validate()?;
        let text = toml::to_string(&self.meta)
            .map_err(|e| Error::Format(format!("cannot serialize sidecar: {e}")))?;
        std::fs::write(sidecar, text)?;
        std::fs::write(payload_path(sidecar, &self.meta), self.payload_bytes())?;
        Ok(())
    }

    /// Reads a sidecar and its payload. `payload` overrides the file named in
    /// the sidecar.
    pub fn load(sidecar: &Path, payload: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(sidecar)?;
        let meta: CaptureMeta = toml::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {}", sidecar.display(), e.message().trim())))?;
        meta.validate()?;
        let path = payload.map_or_else(|| payload_path(sidecar, &meta), Path::to_path_buf);
        let bytes = std::fs::read(&path)?;
        let expected = meta.payload_len();
        if bytes.len() != expected {
            let frame = meta.num_channels * BYTES_PER_SAMPLE;
            return Err(Error::Format(format!(
                "{}: expected {expected} bytes ({} channels x {} samples x {BYTES_PER_SAMPLE}), found {}; \
                 data ends at byte offset {} inside frame {}",
                path.display(),
                meta.num_channels,
                meta.num_samples,
                bytes.len(),
                bytes.len(),
                bytes.len() / frame,
            )));
        }
        let payload = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self { meta, payload })
    }
}

fn payload_path(sidecar: &Path, meta: &CaptureMeta) -> PathBuf {
    sidecar
        .parent()
        .map_or_else(|| PathBuf::from(&meta.payload), |dir| dir.join(&meta.payload))
}

pub fn save_capture(capture: &SceneCapture, sidecar: &Path) -> Result<()> {
    let name = sidecar
        .with_extension("bin")
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Format(format!("bad sidecar path {}", sidecar.display())))?;
    CaptureFile::from_capture(capture, &name)?.save(sidecar)
}

pub fn load_capture(sidecar: &Path, payload: Option<&Path>) -> Result<SceneCapture> {
    CaptureFile::load(sidecar, payload)?.to_capture()
}
