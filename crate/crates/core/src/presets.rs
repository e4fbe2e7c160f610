//! Ready-made scenarios: the six-target reconstruction, the RMSE and
//! false-alarm studies, and a three-element bench setup.

use crate::mc::{AnglePlacement, ExperimentPlan, RangeModel, ReflectivityModel, DEFAULT_TRIALS};
use crate::model::{ArrayGeometry, DelayModel, LfmWaveform, Target, TargetScene};
use crate::pipeline::ProcessingConfig;
use crate::spectrum::Window;
use crate::synth::{EdgeMode, SynthOptions};

pub const SIX_TARGET_ANGLES_DEG: [f64; 6] = [-63.0, -36.0, -9.0, 18.0, 45.0, 72.0];
pub const CARRIER_HZ: f64 = 36e9;
pub const CHIRP_RATE_HZ_PER_S: f64 = 4e15;
pub const PULSE_S: f64 = 1e-6;
pub const SCENE_RANGE_M: f64 = 10.0;

pub const BENCH_POSITIONS_M: [f64; 3] = [0.0, 0.25, 0.75];
pub const BENCH_CHIRP_RATE_HZ_PER_S: f64 = 3.5e13;
pub const BENCH_INTEGRATION_S: f64 = 100e-6;
pub const BENCH_ANGLES_DEG: [f64; 2] = [8.0, 15.0];
pub const BENCH_RANGE_M: f64 = 5.0;

fn far_field() -> SynthOptions {
    SynthOptions {
        delay_model: DelayModel::FarField,
        edge_mode: EdgeMode::Ignore,
    }
}

/// Four elements with gaps of 2, 3 and 5 m.
pub fn four_element_geometry() -> ArrayGeometry {
    ArrayGeometry::from_gaps(&[2.0, 3.0, 5.0], 1.0, None).expect("valid preset geometry")
}

/// Five elements with gaps of 10, 15, 25 and 35 m.
pub fn five_element_geometry() -> ArrayGeometry {
    ArrayGeometry::from_gaps(&[2.0, 3.0, 5.0, 7.0], 5.0, None).expect("valid preset geometry")
}

pub fn chirp_for(geometry: &ArrayGeometry) -> LfmWaveform {
    LfmWaveform::with_default_rate(CARRIER_HZ, CHIRP_RATE_HZ_PER_S, PULSE_S, geometry)
        .expect("valid preset waveform")
}

pub fn six_target_scene() -> TargetScene {
    TargetScene::new(
        SIX_TARGET_ANGLES_DEG
            .iter()
            .map(|&a| Target::new(a, SCENE_RANGE_M, 1.0).expect("valid preset target"))
            .collect(),
    )
    .expect("valid preset scene")
}

pub fn scene_synth_options() -> SynthOptions {
    far_field()
}

/// Six fixed targets on the four-element array, SNR from -5 to 15 dB.
pub fn rmse_plan() -> ExperimentPlan {
    let geometry = four_element_geometry();
    ExperimentPlan {
        waveform: chirp_for(&geometry),
        geometry,
        snr_sweep_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
        target_count_sweep: vec![SIX_TARGET_ANGLES_DEG.len()],
        trials_per_point: DEFAULT_TRIALS,
        base_seed: 1,
        placement: AnglePlacement::FixedList {
            angles_deg: SIX_TARGET_ANGLES_DEG.to_vec(),
        },
        ranges: RangeModel::Common {
            range_m: SCENE_RANGE_M,
        },
        reflectivity: ReflectivityModel::default(),
        synth: far_field(),
        processing: ProcessingConfig::default(),
        threads: None,
    }
}

/// Equally spaced targets with a random common offset on the five-element
/// array, 8 to 16 targets at -10, 0 and 10 dB.
pub fn pfa_plan() -> ExperimentPlan {
    let geometry = five_element_geometry();
    ExperimentPlan {
        waveform: chirp_for(&geometry),
        geometry,
        snr_sweep_db: vec![-10.0, 0.0, 10.0],
        target_count_sweep: (8..=16).collect(),
        trials_per_point: DEFAULT_TRIALS,
        base_seed: 2,
        placement: AnglePlacement::EquallySpaced,
        ranges: RangeModel::Common {
            range_m: SCENE_RANGE_M,
        },
        reflectivity: ReflectivityModel::default(),
        synth: far_field(),
        processing: ProcessingConfig::default(),
        threads: None,
    }
}

pub fn bench_geometry() -> ArrayGeometry {
    ArrayGeometry::new(BENCH_POSITIONS_M.to_vec(), crate::model::centroid(&BENCH_POSITIONS_M))
        .expect("valid preset geometry")
}

/// 36 GHz carrier sweeping 3.5 GHz over a 100 us integration window.
pub fn bench_waveform(geometry: &ArrayGeometry) -> LfmWaveform {
    LfmWaveform::with_default_rate(
        CARRIER_HZ,
        BENCH_CHIRP_RATE_HZ_PER_S,
        BENCH_INTEGRATION_S,
        geometry,
    )
    .expect("valid preset waveform")
}

pub fn bench_scene() -> TargetScene {
    TargetScene::new(
        BENCH_ANGLES_DEG
            .iter()
            .map(|&a| Target::new(a, BENCH_RANGE_M, 1.0).expect("valid preset target"))
            .collect(),
    )
    .expect("valid preset scene")
}

/// Rectangular window: the two bench targets sit about one bin apart.
pub fn bench_processing() -> ProcessingConfig {
    ProcessingConfig {
        window: Window::Rect,
        ..ProcessingConfig::default()
    }
}
