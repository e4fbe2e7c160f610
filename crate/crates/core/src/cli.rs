//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the arguments or inputs fail validation,
//! 2 when a run fails after validation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::config::{load_scenario, ScenarioConfig};
use crate::io::{load_capture, results, save_capture};
use crate::mc::{run_pfa_sweep, run_rmse_sweep};
use crate::pipeline::{process_capture, ProcessingConfig};
use crate::presets;
use crate::synth::synthesize_capture;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const DEFAULT_SCENE: &str = include_str!("../scenarios/six_targets.toml");

#[derive(Debug, Parser)]
#[command(name = "chirp-interferometry", version, about = "LFM correlation-interferometer angle estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a scene and write per-baseline, fused and detection CSVs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also save the synthesized capture (sidecar path; payload goes next to it).
        #[arg(long)]
        capture_out: Option<PathBuf>,
    },
    /// Angle RMSE against SNR.
    Rmse {
        #[command(flatten)]
        common: Common,
        /// Trials per sweep point.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// False-alarm probability against target count.
    Pfa {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Process a recorded capture.
    Process {
        #[command(flatten)]
        common: Common,
        /// Capture sidecar (TOML).
        #[arg(long)]
        capture: PathBuf,
        /// Payload file, overriding the one named in the sidecar.
        #[arg(long)]
        payload: Option<PathBuf>,
    },
    /// Check a scenario file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file; each command has a built-in default.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Noise seed (simulate) or base seed (rmse, pfa).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Sample rate in Hz, replacing the configured or default one.
    #[arg(long)]
    fs_override: Option<f64>,
}

fn load_or_default(config: Option<&Path>, default: impl FnOnce() -> Result<ScenarioConfig>) -> Result<ScenarioConfig> {
    match config {
        Some(p) => load_scenario(p),
        None => default(),
    }
}

fn apply_overrides(mut cfg: ScenarioConfig, common: &Common, trials: Option<usize>) -> Result<ScenarioConfig> {
    if let Some(fs) = common.fs_override {
        cfg.waveform.sample_rate_hz = Some(fs);
    }
    if let Some(seed) = common.seed {
        cfg.noise.seed = seed;
        if let Some(e) = cfg.experiment.as_mut() {
            e.base_seed = seed;
        }
    }
    if let Some(t) = trials {
        match cfg.experiment.as_mut() {
            Some(e) => e.trials = t,
            None => return Err(Error::Config("--trials needs an [experiment] section".into())),
        }
    }
    if common.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    cfg.resolve()
}

/// Creates the output directory and records the resolved configuration.
fn prepare_out_dir(dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
    let text = cfg.to_toml_string()?;
    log::info!("resolved configuration:\n{text}");
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved_config.toml"), text)?;
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(f),
    }
}

fn simulate(common: &Common, capture_out: Option<&Path>) -> Result<()> {
    let cfg = load_or_default(common.config.as_deref(), || {
        ScenarioConfig::from_toml_str(DEFAULT_SCENE, Path::new("<built-in six-target scene>"))
    })?;
    let cfg = apply_overrides(cfg, common, None)?;
    let geometry = cfg.array_geometry()?;
    let waveform = cfg.lfm_waveform()?;
    let scene = cfg.scene()?;
    let processing = cfg.processing_config();
    prepare_out_dir(&common.out_dir, &cfg)?;

    let (capture, processed) = with_threads(common.threads, || {
        let capture = synthesize_capture(&geometry, &waveform, &scene, &cfg.noise(), &cfg.synth_options())?;
        let processed = process_capture(&capture, &processing)?;
        Ok((capture, processed))
    })?;
    if let Some(side) = capture_out {
        save_capture(&capture, side)?;
        log::info!("capture written to {}", side.display());
    }
    let written = results::write_spectra(&common.out_dir, &processed.spectra, &processed.fused, &processed.detections)?;
    for d in &processed.detections {
        log::info!(
            "detection at {:.3} deg (magnitude {:.4}, {} baselines)",
            d.angle_deg,
            d.magnitude,
            d.baseline_support
        );
    }
    log::info!("wrote {} files to {}", written.len(), common.out_dir.display());
    Ok(())
}

fn sweep(common: &Common, trials: Option<usize>, pfa: bool) -> Result<()> {
    let cfg = load_or_default(common.config.as_deref(), || {
        ScenarioConfig::from_plan(&if pfa { presets::pfa_plan() } else { presets::rmse_plan() })
    })?;
    let cfg = apply_overrides(cfg, common, trials)?;
    let plan = cfg.experiment_plan(common.threads)?;
    prepare_out_dir(&common.out_dir, &cfg)?;
    let (result, name) = if pfa {
        (run_pfa_sweep(&plan)?, "pfa.csv")
    } else {
        (run_rmse_sweep(&plan)?, "rmse.csv")
    };
    let path = common.out_dir.join(name);
    results::write_experiment_csv(&result, &path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn process(common: &Common, capture: &Path, payload: Option<&Path>) -> Result<()> {
    let processing = match &common.config {
        Some(p) => load_scenario(p)?.processing_config(),
        None => ProcessingConfig::default(),
    };
    if common.fs_override.is_some() {
        return Err(Error::Config("--fs-override does not apply to recorded captures".into()));
    }
    let capture = load_capture(capture, payload)?;
    capture.waveform.check_sample_rate(&capture.geometry)?;
    log::info!("processing configuration: {processing:?}");
    std::fs::create_dir_all(&common.out_dir)?;
    let processed = with_threads(common.threads, || process_capture(&capture, &processing))?;
    results::write_spectra(&common.out_dir, &processed.spectra, &processed.fused, &processed.detections)?;
    for d in &processed.detections {
        log::info!("detection at {:.3} deg", d.angle_deg);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, capture_out } => simulate(&common, capture_out.as_deref()),
        Command::Rmse { common, trials } => sweep(&common, trials, false),
        Command::Pfa { common, trials } => sweep(&common, trials, true),
        Command::Process {
            common,
            capture,
            payload,
        } => process(&common, &capture, payload.as_deref()),
        Command::Validate { config } => {
            let cfg = load_scenario(&config)?;
            log::info!("resolved configuration:\n{}", cfg.to_toml_string()?);
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
