//! Scenario files, IQ captures and CSV results.

pub mod capture;
pub mod config;
pub mod results;

pub use capture::{load_capture, save_capture, CaptureFile, CaptureMeta};
pub use config::{load_scenario, ScenarioConfig};
