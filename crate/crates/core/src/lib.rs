//! Simulation of four-wave-mixing photon-pair sources in photonic crystal
//! fibre: fibre dispersion, pump pulses, phasematching, joint spectra, pair
//! statistics and a coincidence-counting Monte Carlo.

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coincidence;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod jsa;
pub mod output;
pub mod phasematch;
pub mod pump;
pub mod reproduce;
pub mod stats;
pub mod units;

pub use dispersion::{Dispersion, DispersionModel, FibreGeometry, FitSettings};
pub use config::{parse_config, ExperimentConfig};
pub use error::{ConfigError, Error, Result};
pub use phasematch::{PhasematchPoint, SolverSettings};
pub use pump::{PulseShape, PumpPulse};
