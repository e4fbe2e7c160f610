//! Domain types and geometry shared by the rest of the crate.
//!
//! Everything lives on a single axis: receive elements and the transmitter sit
//! on the x-axis and a target at angle `θ` (from broadside, positive towards
//! +x) and range `R` sits at `(R sin θ, R cos θ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance below which two baselines count as the same length.
const DUPLICATE_BASELINE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    element_positions_m: Vec<f64>,
    tx_position_m: f64,
}

impl ArrayGeometry {
    pub fn new(element_positions_m: Vec<f64>, tx_position_m: f64) -> Result<Self> {
        if element_positions_m.len() < 2 {
            return Err(Error::Config(format!(
                "array needs at least 2 receive elements, got {}",
                element_positions_m.len()
            )));
        }
        if let Some(bad) = element_positions_m.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("non-finite element position {bad}")));
        }
        if !tx_position_m.is_finite() {
            return Err(Error::Config("non-finite transmitter position".into()));
        }
        if let Some(w) = element_positions_m.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "element positions must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            element_positions_m,
            tx_position_m,
        })
    }

    /// Builds positions as the cumulative sum of consecutive `gaps`, scaled by
    /// `unit_m`, starting at zero. `gaps = [2, 3, 5]` gives `[0, 2, 5, 10]·unit`.
    ///
    /// Without an explicit transmitter position the element centroid is used.
    pub fn from_gaps(gaps: &[f64], unit_m: f64, tx_position_m: Option<f64>) -> Result<Self> {
        if !(unit_m.is_finite() && unit_m > 0.0) {
            return Err(Error::Config(format!("gap unit must be positive, got {unit_m}")));
        }
        let positions = positions_from_gaps(gaps, unit_m);
        let tx = tx_position_m.unwrap_or_else(|| centroid(&positions));
        Self::new(positions, tx)
    }

    pub fn element_positions_m(&self) -> &[f64] {
        &self.element_positions_m
    }

    pub fn tx_position_m(&self) -> f64 {
        self.tx_position_m
    }

    pub fn num_elements(&self) -> usize {
        self.element_positions_m.len()
    }

    pub fn num_baselines(&self) -> usize {
        let n = self.num_elements();
        n * (n - 1) / 2
    }

    /// Distance between the outermost elements, which is also the longest baseline.
    pub fn aperture_m(&self) -> f64 {
        self.element_positions_m[self.num_elements() - 1] - self.element_positions_m[0]
    }
}

pub fn positions_from_gaps(gaps: &[f64], unit_m: f64) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(gaps.iter().scan(0.0, |acc, g| {
            *acc += g * unit_m;
            Some(*acc)
        }))
        .collect()
}

pub fn centroid(positions: &[f64]) -> f64 {
    positions.iter().sum::<f64>() / positions.len() as f64
}

/// One correlation interferometer: an unordered element pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub pair: (usize, usize),
    pub length_m: f64,
    /// Another pair in the array has the same length.
    pub duplicate: bool,
}

/// All `n(n-1)/2` element pairs, sorted ascending by length (ties keep pair order).
pub fn enumerate_baselines(geometry: &ArrayGeometry) -> Vec<Baseline> {
    let pos = geometry.element_positions_m();
    let mut out: Vec<Baseline> = (0..pos.len())
        .flat_map(|i| {
            (i + 1..pos.len()).map(move |j| Baseline {
                pair: (i, j),
                length_m: pos[j] - pos[i],
                duplicate: false,
            })
        })
        .collect();
    out.sort_by(|a, b| a.length_m.total_cmp(&b.length_m).then(a.pair.cmp(&b.pair)));
    for k in 0..out.len() {
        let len = out[k].length_m;
        let dup = out
            .iter()
            .enumerate()
            .any(|(m, b)| m != k && (b.length_m - len).abs() <= DUPLICATE_BASELINE_RTOL * len);
        out[k].duplicate = dup;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfmWaveform {
    pub f0_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    pub pulse_duration_s: f64,
    pub sample_rate_hz: f64,
}

impl LfmWaveform {
    pub fn new(
        f0_hz: f64,
        chirp_rate_hz_per_s: f64,
        pulse_duration_s: f64,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let all_finite = [f0_hz, chirp_rate_hz_per_s, pulse_duration_s, sample_rate_hz]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("waveform parameters must be finite".into()));
        }
        if f0_hz < 0.0 {
            return Err(Error::Config(format!("carrier must be non-negative, got {f0_hz}")));
        }
        if pulse_duration_s <= 0.0 {
            return Err(Error::Config(format!(
                "pulse duration must be positive, got {pulse_duration_s}"
            )));
        }
        if chirp_rate_hz_per_s * pulse_duration_s <= 0.0 {
            return Err(Error::Config(format!(
                "swept bandwidth must be positive, got K={chirp_rate_hz_per_s} T={pulse_duration_s}"
            )));
        }
        if sample_rate_hz <= 0.0 {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            f0_hz,
            chirp_rate_hz_per_s,
            pulse_duration_s,
            sample_rate_hz,
        })
    }

    /// Waveform whose sample rate follows [`default_sample_rate`] for `geometry`.
    pub fn with_default_rate(
        f0_hz: f64,
        chirp_rate_hz_per_s: f64,
        pulse_duration_s: f64,
        geometry: &ArrayGeometry,
    ) -> Result<Self> {
        let fs = default_sample_rate(chirp_rate_hz_per_s, geometry.aperture_m(), pulse_duration_s);
        Self::new(f0_hz, chirp_rate_hz_per_s, pulse_duration_s, fs)
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.chirp_rate_hz_per_s * self.pulse_duration_s
    }

    pub fn num_samples(&self) -> usize {
        (self.pulse_duration_s * self.sample_rate_hz).round() as usize
    }

    /// Checks that every legal correlator tone (|f| ≤ K·D/c) plus the 25 %
    /// low-pass margin fits below Nyquist for the longest baseline.
    pub fn check_sample_rate(&self, geometry: &ArrayGeometry) -> Result<()> {
        let min_fs = 2.0 * CUTOFF_MARGIN * max_tone_hz(self.chirp_rate_hz_per_s, geometry.aperture_m());
        if self.sample_rate_hz < min_fs {
            return Err(Error::Config(format!(
                "sample rate {} Hz is below {} Hz required for the {} m baseline",
                self.sample_rate_hz,
                min_fs,
                geometry.aperture_m()
            )));
        }
        if self.num_samples() < 2 {
            return Err(Error::Config("pulse holds fewer than 2 samples".into()));
        }
        Ok(())
    }
}

/// Ratio of the correlator low-pass cutoff to the largest legal tone `K·D/c`.
pub const CUTOFF_MARGIN: f64 = 1.25;

/// Largest correlator tone a real target can produce on a baseline of length `d_m`.
pub fn max_tone_hz(chirp_rate_hz_per_s: f64, d_m: f64) -> f64 {
    chirp_rate_hz_per_s.abs() * d_m / SPEED_OF_LIGHT
}

/// `4·K·D_max/c`, raised so the pulse holds a power-of-two sample count.
pub fn default_sample_rate(chirp_rate_hz_per_s: f64, d_max_m: f64, pulse_duration_s: f64) -> f64 {
    let min_fs = 4.0 * max_tone_hz(chirp_rate_hz_per_s, d_max_m);
    let n = ((min_fs * pulse_duration_s).ceil() as usize).max(16).next_power_of_two();
    n as f64 / pulse_duration_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub angle_deg: f64,
    pub range_m: f64,
    /// Echo amplitude relative to a unit reference target.
    pub reflectivity: f64,
}

impl Target {
    pub fn new(angle_deg: f64, range_m: f64, reflectivity: f64) -> Result<Self> {
        let t = Self {
            angle_deg,
            range_m,
            reflectivity,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.angle_deg.is_finite() && (-90.0..=90.0).contains(&self.angle_deg)) {
            return Err(Error::Config(format!(
                "target angle {} deg outside [-90, 90]",
                self.angle_deg
            )));
        }
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(Error::Config(format!(
                "target range must be positive and finite, got {}",
                self.range_m
            )));
        }
        if !(self.reflectivity.is_finite() && self.reflectivity >= 0.0) {
            return Err(Error::Config(format!(
                "target reflectivity must be non-negative, got {}",
                self.reflectivity
            )));
        }
        Ok(())
    }

    pub fn sin_theta(&self) -> f64 {
        self.angle_deg.to_radians().sin()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        for t in &targets {
            t.validate()?;
        }
        Ok(Self { targets })
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.angle_deg).collect()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Receiver noise. `snr_db = None` disables noise entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            snr_db: None,
            seed: 0,
        }
    }

    pub fn with_snr(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db: if snr_db.is_finite() { Some(snr_db) } else { None },
            seed,
        }
    }

    /// Complex noise variance per sample relative to a unit-amplitude echo.
    pub fn noise_variance(&self) -> Option<f64> {
        self.snr_db.map(|snr| 10f64.powf(-snr / 10.0))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayModel {
    /// Spherical wavefronts, exact Euclidean path lengths.
    #[default]
    Exact,
    /// Plane wavefronts: path length from a point at `x` is `R - x sin θ`.
    FarField,
}

/// Transmitter → target → element propagation time in seconds.
pub fn round_trip_delay(
    geometry: &ArrayGeometry,
    target: &Target,
    rx_index: usize,
    model: DelayModel,
) -> f64 {
    let x_rx = geometry.element_positions_m()[rx_index];
    let x_tx = geometry.tx_position_m();
    let (s, c) = target.angle_deg.to_radians().sin_cos();
    let r = target.range_m;
    match model {
        DelayModel::Exact => {
            let (px, py) = (r * s, r * c);
            let d_tx = (px - x_tx).hypot(py);
            let d_rx = (px - x_rx).hypot(py);
            (d_tx + d_rx) / SPEED_OF_LIGHT
        }
        DelayModel::FarField => (2.0 * r - (x_tx + x_rx) * s) / SPEED_OF_LIGHT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lengths(g: &ArrayGeometry) -> Vec<f64> {
        enumerate_baselines(g).iter().map(|b| b.length_m).collect()
    }

    #[test]
    fn experimental_array_baselines() {
        let g = ArrayGeometry::new(vec![0.0, 0.25, 0.75], 0.375).unwrap();
        assert_eq!(lengths(&g), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn sparse_array_flags_duplicate_lengths() {
        let g = ArrayGeometry::from_gaps(&[2.0, 3.0, 5.0], 1.0, None).unwrap();
        assert_eq!(g.element_positions_m(), &[0.0, 2.0, 5.0, 10.0]);
        let b = enumerate_baselines(&g);
        assert_eq!(lengths(&g), vec![2.0, 3.0, 5.0, 5.0, 8.0, 10.0]);
        let dups: Vec<_> = b.iter().filter(|b| b.duplicate).map(|b| b.pair).collect();
        assert_eq!(dups, vec![(0, 2), (2, 3)]);
    }

    #[test]
    fn minimal_array() {
        let g = ArrayGeometry::new(vec![0.0, 1.0], 0.0).unwrap();
        let b = enumerate_baselines(&g);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].pair, (0, 1));
        assert_eq!(b[0].length_m, 1.0);
        assert!(!b[0].duplicate);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ArrayGeometry::new(vec![0.0], 0.0).is_err());
        assert!(ArrayGeometry::new(vec![0.0, 0.0], 0.0).is_err());
        assert!(ArrayGeometry::new(vec![1.0, 0.0], 0.0).is_err());
        assert!(ArrayGeometry::new(vec![0.0, f64::NAN], 0.0).is_err());
    }

    #[test]
    fn boresight_colinear_delay() {
        let g = ArrayGeometry::new(vec![0.0, 1.0], 0.0).unwrap();
        let t = Target::new(0.0, 30.0, 1.0).unwrap();
        let tau = round_trip_delay(&g, &t, 0, DelayModel::Exact);
        assert_eq!(tau, 60.0 / SPEED_OF_LIGHT);
    }

    #[test]
    fn near_field_delay_matches_expansion() {
        // Element at 0.25 m, target at 7 m. The first-order plane-wave
        // expansion misses the x²cos²θ/2R curvature term (~4.4 mm here); the
        // second-order expansion is good to well below a picosecond.
        let g = ArrayGeometry::new(vec![0.0, 0.25], 0.0).unwrap();
        let t = Target::new(8.0, 7.0, 1.0).unwrap();
        let tau = round_trip_delay(&g, &t, 1, DelayModel::Exact);
        let (s, c) = 8f64.to_radians().sin_cos();
        let r = 7.0;
        let tau_tx = r / SPEED_OF_LIGHT;
        let first = tau_tx + (r - 0.25 * s) / SPEED_OF_LIGHT;
        let second = first + 0.25f64.powi(2) * c * c / (2.0 * r) / SPEED_OF_LIGHT;
        assert!((tau - second).abs() < 1e-12, "{}", (tau - second).abs());
        assert!((tau - first).abs() < 1.5e-11);
    }

    #[test]
    fn far_range_delay_difference() {
        let g = ArrayGeometry::new(vec![0.0, 0.25], 0.0).unwrap();
        let t = Target::new(8.0, 1e6, 1.0).unwrap();
        let d = round_trip_delay(&g, &t, 0, DelayModel::Exact)
            - round_trip_delay(&g, &t, 1, DelayModel::Exact);
        assert!((d - 1.1606e-10).abs() < 1e-14, "{d}");
    }

    #[test]
    fn default_rate_is_power_of_two_samples() {
        let g = ArrayGeometry::from_gaps(&[2.0, 3.0, 5.0], 1.0, None).unwrap();
        let w = LfmWaveform::with_default_rate(36e9, 4e15, 1e-6, &g).unwrap();
        assert_eq!(w.num_samples(), 1024);
        assert!(w.sample_rate_hz >= 4.0 * max_tone_hz(4e15, 10.0));
        w.check_sample_rate(&g).unwrap();
        let slow = LfmWaveform::new(36e9, 4e15, 1e-6, 100e6).unwrap();
        assert!(slow.check_sample_rate(&g).is_err());
    }

    #[test]
    fn noise_variance_from_snr() {
        assert_eq!(NoiseSpec::noiseless().noise_variance(), None);
        let v = NoiseSpec::with_snr(10.0, 1).noise_variance().unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        assert_eq!(NoiseSpec::with_snr(f64::INFINITY, 1).snr_db, None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn baseline_count(gaps in prop::collection::vec(0.1f64..10.0, 1..10)) {
                let g = ArrayGeometry::from_gaps(&gaps, 1.0, None).unwrap();
                let n = g.num_elements();
                let b = enumerate_baselines(&g);
                prop_assert_eq!(b.len(), n * (n - 1) / 2);
                prop_assert!(b.windows(2).all(|w| w[0].length_m <= w[1].length_m));
                prop_assert!(b.iter().all(|b| b.length_m > 0.0 && b.pair.0 < b.pair.1));
            }

            #[test]
            fn far_field_limit(theta in -89.0f64..89.0, d in 0.1f64..20.0) {
                // Converges monotonically; what is left is the wavefront
                // curvature term, relative size D·cos²θ / (2R·|sin θ|).
                let g = ArrayGeometry::new(vec![0.0, d], 0.0).unwrap();
                let (s, c) = theta.to_radians().sin_cos();
                let ideal = d / SPEED_OF_LIGHT * s;
                prop_assume!(s.abs() > 1e-3);
                let mut prev = f64::INFINITY;
                for scale in [1e4, 1e5, 1e6] {
                    let t = Target::new(theta, scale * d, 1.0).unwrap();
                    let diff = round_trip_delay(&g, &t, 0, DelayModel::Exact)
                        - round_trip_delay(&g, &t, 1, DelayModel::Exact);
                    let rel = ((diff - ideal) / ideal).abs();
                    prop_assert!(rel <= prev);
                    let bound = c * c / (2.0 * scale * s.abs());
                    prop_assert!(rel <= 1.01 * bound + 1e-6, "{} > {}", rel, bound);
                    prev = rel;
                }
            }

            #[test]
            fn translation_invariance(theta in -80.0f64..80.0, range in 5.0f64..50.0, shift in -20.0f64..20.0) {
                let g = ArrayGeometry::new(vec![0.0, 1.5, 4.0], 0.7).unwrap();
                let t = Target::new(theta, range, 1.0).unwrap();
                let moved = ArrayGeometry::new(
                    g.element_positions_m().iter().map(|x| x + shift).collect(),
                    g.tx_position_m() + shift,
                ).unwrap();
                // Same physical target, expressed relative to the shifted origin.
                let (px, py) = (range * t.sin_theta() + shift, range * theta.to_radians().cos());
                let t2 = Target::new(px.atan2(py).to_degrees(), px.hypot(py), 1.0).unwrap();
                for i in 0..3 {
                    let a = round_trip_delay(&g, &t, i, DelayModel::Exact);
                    let b = round_trip_delay(&moved, &t2, i, DelayModel::Exact);
                    prop_assert!((a - b).abs() < 1e-15);
                }
            }
        }
    }
}
