use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{quantity} = {value} is outside the valid interval [{min}, {max}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("empirical PCF model invalid for {parameter} = {value} (accepted range [{min}, {max}])")]
    ModelValidity {
        parameter: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no zero-dispersion wavelength in [{min_nm}, {max_nm}] nm: beta2 does not change sign")]
    NoZeroDispersion { min_nm: f64, max_nm: f64 },

    #[error(
        "pitch calibration failed for target ZDW {target_nm} nm: bracket [{pitch_lo_um}, {pitch_hi_um}] um gives {detail}"
    )]
    CalibrationFailure {
        target_nm: f64,
        pitch_lo_um: f64,
        pitch_hi_um: f64,
        detail: String,
    },

    #[error("wavelengths coincide ({wavelength_nm} nm); walk-off length is undefined")]
    DegenerateWavelengths { wavelength_nm: f64 },

    #[error("pump tuned to {requested_nm} nm, outside the laser tuning range [{min_nm}, {max_nm}] nm")]
    TuningRange {
        requested_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error(
        "no widely-detuned phasematching for pump {pump_nm} nm: scanned signal in [{scan_lo_nm}, {scan_hi_nm}] nm, {near_degenerate} near-degenerate root(s)"
    )]
    NoPhasematch {
        pump_nm: f64,
        scan_lo_nm: f64,
        scan_hi_nm: f64,
        near_degenerate: usize,
    },

    #[error("JSA grid too small: {clipped_fraction:.3e} of the norm sits on the grid border")]
    GridTooSmall { clipped_fraction: f64 },

    #[error("over-pumped source: |lambda| = {lam} must be < 1")]
    OverPumped { lam: f64 },

    #[error("histogram has no coincidence peak above background (peak {peak}, background {background:.3})")]
    NoPeak { peak: u64, background: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("source calibration did not converge after {iterations} iterations (best relative residual {residual:.3e})")]
    SourceCalibration { iterations: usize, residual: f64 },

    #[error("division guard: {0}")]
    ZeroEfficiency(&'static str),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Problems found while reading an experiment configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: PathBuf, message: String },

    #[error("missing section [{0}]")]
    MissingSection(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("`{key}` violates its invariant: {reason}")]
    Invariant { key: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
