//! Physical constants and wavelength/frequency conversions.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of a vacuum wavelength in nm.
pub fn omega_from_nm(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Vacuum wavelength in nm of an angular frequency (rad/s).
pub fn nm_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Idler wavelength fixed by energy conservation `2/pump = 1/signal + 1/idler`.
pub fn idler_nm(pump_nm: f64, signal_nm: f64) -> f64 {
    1.0 / (2.0 / pump_nm - 1.0 / signal_nm)
}
