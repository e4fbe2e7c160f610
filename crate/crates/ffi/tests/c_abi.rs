use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use chirp_interferometry_ffi::*;

const SCENE: &str = r#"
[geometry]
gaps = [2.0, 3.0, 5.0]

[waveform]
f0_hz = 36e9
bandwidth_hz = 4e9
pulse_duration_s = 1e-6

[noise]
snr_db = 10.0
seed = 4

[synthesis]
delay_model = "far-field"

[[targets]]
angle_deg = -20.0
range_m = 10.0

[[targets]]
angle_deg = 35.0
range_m = 10.0
"#;

fn last_error() -> String {
    let p = chirp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> (ChirpStatus, *mut ChirpScenario) {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { chirp_scenario_parse(c.as_ptr(), &mut out) };
    (status, out)
}

#[test]
fn simulate_and_read_back() {
    let (status, scenario) = parse(SCENE);
    assert_eq!(status, ChirpStatus::Ok);
    assert_eq!(unsafe { chirp_scenario_num_elements(scenario) }, 4);

    let mut result = ptr::null_mut();
    assert_eq!(unsafe { chirp_scenario_simulate(scenario, &mut result) }, ChirpStatus::Ok);
    let n = unsafe { chirp_result_num_detections(result) };
    assert_eq!(n, 2);

    let mut angles = vec![0.0; n];
    let mut written = 0;
    let s = unsafe { chirp_result_detection_angles(result, angles.as_mut_ptr(), n, &mut written) };
    assert_eq!(s, ChirpStatus::Ok);
    assert_eq!(written, 2);
    angles.sort_by(f64::total_cmp);
    assert!((angles[0] + 20.0).abs() < 0.5 && (angles[1] - 35.0).abs() < 0.5, "{angles:?}");

    let len = unsafe { chirp_result_fused_len(result) };
    let mut grid = vec![0.0; len];
    let mut mags = vec![0.0; len];
    let s = unsafe { chirp_result_fused(result, grid.as_mut_ptr(), mags.as_mut_ptr(), len, &mut written) };
    assert_eq!(s, ChirpStatus::Ok);
    assert_eq!(grid[0], -1.0);
    assert_eq!(grid[len - 1], 1.0);

    assert_eq!(unsafe { chirp_result_num_baselines(result) }, 6);
    let mut d = 0.0;
    let s = unsafe {
        chirp_result_baseline_spectrum(result, 5, &mut d, ptr::null_mut(), ptr::null_mut(), 0, ptr::null_mut())
    };
    assert_eq!(s, ChirpStatus::Ok);
    assert_eq!(d, 10.0);

    unsafe {
        chirp_result_free(result);
        chirp_scenario_free(scenario);
    }
}

#[test]
fn short_buffer_reports_needed_length() {
    let (_, scenario) = parse(SCENE);
    let mut result = ptr::null_mut();
    unsafe { chirp_scenario_simulate(scenario, &mut result) };
    let mut one = [0.0];
    let mut needed = 0;
    let s = unsafe { chirp_result_detection_angles(result, one.as_mut_ptr(), 1, &mut needed) };
    assert_eq!(s, ChirpStatus::BufferTooSmall);
    assert_eq!(needed, 2);
    assert!(last_error().contains("2 needed"));
    let s = unsafe {
        chirp_result_baseline_spectrum(result, 99, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 0, ptr::null_mut())
    };
    assert_eq!(s, ChirpStatus::Invalid);
    unsafe {
        chirp_result_free(result);
        chirp_scenario_free(scenario);
    }
}

#[test]
fn invalid_scenario_sets_message() {
    let (status, scenario) = parse(&SCENE.replacen("range_m = 10.0", "range_m = -1.0", 1));
    assert_eq!(status, ChirpStatus::Invalid);
    assert!(scenario.is_null());
    assert!(last_error().contains("targets[0].range_m"));
}

#[test]
fn null_arguments_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { chirp_scenario_parse(ptr::null(), &mut out) }, ChirpStatus::NullArgument);
    assert_eq!(unsafe { chirp_scenario_parse(ptr::null(), ptr::null_mut()) }, ChirpStatus::NullArgument);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { chirp_scenario_simulate(ptr::null(), &mut r) }, ChirpStatus::NullArgument);
    assert_eq!(unsafe { chirp_result_num_detections(ptr::null()) }, 0);
    unsafe {
        chirp_scenario_free(ptr::null_mut());
        chirp_result_free(ptr::null_mut());
    }
}

#[test]
fn missing_capture_is_io_error() {
    let side = CString::new("/nonexistent/capture.toml").unwrap();
    let mut r = ptr::null_mut();
    let s = unsafe { chirp_capture_process(side.as_ptr(), ptr::null(), ptr::null(), &mut r) };
    assert_eq!(s, ChirpStatus::Io);
    assert!(r.is_null());
}

#[test]
fn capture_round_trip_through_abi() {
    use chirp_interferometry::io::{save_capture, ScenarioConfig};
    use chirp_interferometry::synth::synthesize_capture;

    let cfg = ScenarioConfig::from_toml_str(SCENE, std::path::Path::new("scene")).unwrap();
    let cap = synthesize_capture(
        &cfg.array_geometry().unwrap(),
        &cfg.lfm_waveform().unwrap(),
        &cfg.scene().unwrap(),
        &cfg.noise(),
        &cfg.synth_options(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let side = dir.path().join("cap.toml");
    save_capture(&cap, &side).unwrap();

    let side_c = CString::new(side.to_str().unwrap()).unwrap();
    let mut r = ptr::null_mut();
    let s = unsafe { chirp_capture_process(side_c.as_ptr(), ptr::null(), ptr::null(), &mut r) };
    assert_eq!(s, ChirpStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { chirp_result_num_detections(r) }, 2);
    unsafe { chirp_result_free(r) };
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(chirp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = include.join("chirp_interferometry.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["chirp_scenario_parse", "chirp_result_fused", "chirp_last_error", "CHIRP_STATUS_OK"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"chirp_interferometry.h\"\nint main(void) { ChirpScenario *s = 0; return (int)chirp_scenario_parse(\"\", &s); }\n",
    )
    .unwrap();
    match std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    {
        Ok(st) => assert!(st.success(), "C compiler rejected the header"),
        Err(e) => eprintln!("no C compiler ({cc}): {e}; header syntax not checked"),
    }
}
