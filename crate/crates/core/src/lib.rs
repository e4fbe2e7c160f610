//! Angle-of-arrival estimation with an LFM transmitter and a sparse
//! correlation-interferometer receive array.
//!
//! Pairwise correlation of the received chirps turns each target angle into a
//! tone at `K·D·sin θ / c`. Multiplying the per-baseline angle pseudo-spectra
//! keeps the responses that agree across baselines (true targets) and
//! suppresses cross-target products that do not.

pub mod cli;
pub mod detect;
pub mod error;
pub mod io;
pub mod mc;
pub mod model;
pub mod pipeline;
pub mod presets;
pub mod seed;
pub mod spectrum;
pub mod synth;
pub mod xcorr;

pub use error::{Error, Result};
