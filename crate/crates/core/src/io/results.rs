//! CSV output. Floats use the shortest representation that parses back to
//! the same `f64`; missing statistics are empty fields.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::detect::Detection;
use crate::error::Result;
use crate::mc::ExperimentResult;
use crate::spectrum::{BaselineSpectrum, FusedAngleSpectrum};

#[derive(Serialize)]
struct FusedRow {
    sin_theta: f64,
    angle_deg: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    freq_hz: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct DetectionRow {
    angle_deg: f64,
    sin_theta: f64,
    magnitude: f64,
    baseline_support: usize,
}

#[derive(Serialize)]
struct ExperimentRow {
    target_count: usize,
    snr_db: f64,
    rmse_deg: Option<f64>,
    pfa: Option<f64>,
    miss_rate: Option<f64>,
    trials: usize,
    pfa_per_cell: Option<f64>,
    anomalies: usize,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fused_csv(fused: &FusedAngleSpectrum, path: &Path) -> Result<()> {
    write_rows(
        path,
        fused
            .sin_theta_grid
            .iter()
            .zip(&fused.magnitudes)
            .map(|(&s, &m)| FusedRow {
                sin_theta: s,
                angle_deg: s.asin().to_degrees(),
                magnitude: m,
            }),
    )
}

pub fn write_baseline_csv(spectrum: &BaselineSpectrum, path: &Path) -> Result<()> {
    write_rows(
        path,
        spectrum
            .freq_bins_hz
            .iter()
            .zip(&spectrum.magnitudes)
            .map(|(&f, &m)| SpectrumRow {
                freq_hz: f,
                magnitude: m,
            }),
    )
}

pub fn write_detections_csv(detections: &[Detection], path: &Path) -> Result<()> {
    write_rows(
        path,
        detections.iter().map(|d| DetectionRow {
            angle_deg: d.angle_deg,
            sin_theta: d.sin_theta,
            magnitude: d.magnitude,
            baseline_support: d.baseline_support,
        }),
    )
}

pub fn write_experiment_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    write_rows(
        path,
        result.rows.iter().map(|r| ExperimentRow {
            target_count: r.target_count,
            snr_db: r.snr_db,
            rmse_deg: r.rmse_deg,
            pfa: r.pfa,
            miss_rate: r.miss_rate,
            trials: r.trials,
            pfa_per_cell: r.pfa_per_cell,
            anomalies: r.anomalies,
        }),
    )
}

/// File name for one baseline's spectrum, e.g. `baseline_0-2_D5m.csv`.
pub fn baseline_file_name(spectrum: &BaselineSpectrum) -> String {
    format!(
        "baseline_{}-{}_D{}m.csv",
        spectrum.pair.0, spectrum.pair.1, spectrum.baseline_m
    )
}

/// Writes every baseline spectrum, the fused spectrum and the detections
/// into `dir`, returning the paths written.
pub fn write_spectra(
    dir: &Path,
    spectra: &[BaselineSpectrum],
    fused: &FusedAngleSpectrum,
    detections: &[Detection],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for s in spectra {
        let p = dir.join(baseline_file_name(s));
        write_baseline_csv(s, &p)?;
        written.push(p);
    }
    let p = dir.join("fused.csv");
    write_fused_csv(fused, &p)?;
    written.push(p);
    let p = dir.join("detections.csv");
    write_detections_csv(detections, &p)?;
    written.push(p);
    Ok(written)
}
