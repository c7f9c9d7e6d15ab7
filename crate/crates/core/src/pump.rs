//! Pulsed pump laser described by its output parameters.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{omega_from_nm, SPEED_OF_LIGHT};

/// Tuning window of the modelocked laser: centre 1027 nm, +/- 4.5 nm.
pub const VECSEL_TUNING_NM: (f64, f64) = (1022.5, 1031.5);

/// Temporal intensity profile of the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    #[default]
    Gaussian,
    Sech2,
    /// Flat-top reference pulse, used to express P_avg / (f_rep tau).
    Rectangular,
}

// acosh(sqrt 2): half-width of sech^2 at half maximum in units of T0.
const SECH_HALF_WIDTH: f64 = 0.881_373_587_019_543;

impl PulseShape {
    /// Peak power times FWHM duration over pulse energy.
    pub fn shape_factor(self) -> f64 {
        match self {
            PulseShape::Gaussian => 2.0 * (LN_2 / PI).sqrt(),
            PulseShape::Sech2 => SECH_HALF_WIDTH,
            PulseShape::Rectangular => 1.0,
        }
    }

    /// Transform-limited time-bandwidth product (FWHM, intensity).
    pub fn time_bandwidth_product(self) -> f64 {
        match self {
            PulseShape::Gaussian => 2.0 * LN_2 / PI,
            PulseShape::Sech2 => (2.0 * SECH_HALF_WIDTH / PI).powi(2),
            PulseShape::Rectangular => 0.885_893_8,
        }
    }
}

impl fmt::Display for PulseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseShape::Gaussian => "gaussian",
            PulseShape::Sech2 => "sech2",
            PulseShape::Rectangular => "rectangular",
        })
    }
}

impl FromStr for PulseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(PulseShape::Gaussian),
            "sech2" => Ok(PulseShape::Sech2),
            "rectangular" => Ok(PulseShape::Rectangular),
            other => Err(Error::InvalidParameter {
                name: "shape",
                reason: format!("unknown pulse shape `{other}`"),
            }),
        }
    }
}

/// Transform-limited pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    pub center_wavelength_nm: f64,
    pub duration_fwhm_s: f64,
    pub shape: PulseShape,
    pub average_power_w: f64,
    pub repetition_rate_hz: f64,
    /// Reserved; pulses are treated as transform limited so this stays zero.
    pub chirp: f64,
}

impl PumpPulse {
    pub fn new(
        center_wavelength_nm: f64,
        duration_fwhm_s: f64,
        shape: PulseShape,
        average_power_w: f64,
        repetition_rate_hz: f64,
    ) -> Result<Self> {
        let p = Self {
            center_wavelength_nm,
            duration_fwhm_s,
            shape,
            average_power_w,
            repetition_rate_hz,
            chirp: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// 1029 nm, 4.5 ps Gaussian pulses at 1.5 GHz and 1 W average power.
    pub fn paper_default() -> Self {
        Self::new(1029.0, 4.5e-12, PulseShape::Gaussian, 1.0, 1.5e9).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("center_wavelength_nm", self.center_wavelength_nm),
            ("duration_fwhm_s", self.duration_fwhm_s),
            ("average_power_w", self.average_power_w),
            ("repetition_rate_hz", self.repetition_rate_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.chirp != 0.0 {
            return Err(Error::InvalidParameter {
                name: "chirp",
                reason: "chirped pulses are not modelled".into(),
            });
        }
        Ok(())
    }

    pub fn with_average_power(mut self, watts: f64) -> Self {
        self.average_power_w = watts;
        self
    }

    pub fn center_omega(&self) -> f64 {
        omega_from_nm(self.center_wavelength_nm)
    }

    /// Peak power P0 = shape_factor * P_avg / (f_rep * tau).
    pub fn peak_power(&self) -> f64 {
        self.shape.shape_factor() * self.average_power_w / (self.repetition_rate_hz * self.duration_fwhm_s)
    }

    pub fn pulse_energy(&self) -> f64 {
        self.average_power_w / self.repetition_rate_hz
    }

    /// Transform-limited intensity FWHM in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.shape.time_bandwidth_product() / self.duration_fwhm_s
    }

    /// Transform-limited intensity FWHM in nm, `lambda^2 dnu / c`.
    pub fn transform_limited_bandwidth(&self) -> f64 {
        let l = self.center_wavelength_nm * 1e-9;
        l * l * self.bandwidth_hz() / SPEED_OF_LIGHT * 1e9
    }

    /// Spectral intensity FWHM in rad/s.
    pub fn bandwidth_omega(&self) -> f64 {
        2.0 * PI * self.bandwidth_hz()
    }

    /// Peak-normalised complex spectral amplitude at angular frequency `omega`.
    pub fn spectral_envelope(&self, omega: f64) -> Complex64 {
        let f = self.bandwidth_omega();
        let d = omega - self.center_omega();
        let a = match self.shape {
            PulseShape::Gaussian => (-2.0 * LN_2 * d * d / (f * f)).exp(),
            PulseShape::Sech2 => 1.0 / (2.0 * SECH_HALF_WIDTH * d / f).cosh(),
            PulseShape::Rectangular => sinc(d * self.duration_fwhm_s / 2.0),
        };
        Complex64::new(a, 0.0)
    }

    /// Peak-normalised two-pump-photon amplitude at total frequency
    /// `omega_sum = omega_s + omega_i`: the self-convolution of the spectral
    /// envelope, equivalently the spectrum of the squared field.
    pub fn sum_frequency_envelope(&self, omega_sum: f64) -> f64 {
        let f = self.bandwidth_omega();
        let d = omega_sum - 2.0 * self.center_omega();
        match self.shape {
            PulseShape::Gaussian => (-LN_2 * d * d / (f * f)).exp(),
            PulseShape::Sech2 => {
                let y = 2.0 * SECH_HALF_WIDTH * d / f;
                if y.abs() < 1e-8 {
                    1.0
                } else {
                    y / y.sinh()
                }
            }
            PulseShape::Rectangular => sinc(d * self.duration_fwhm_s / 2.0),
        }
    }

    /// Intensity FWHM (rad/s) of [`Self::sum_frequency_envelope`].
    pub fn sum_frequency_bandwidth(&self) -> f64 {
        let f = self.bandwidth_omega();
        match self.shape {
            PulseShape::Gaussian => 2f64.sqrt() * f,
            // y / sinh(y) = 1/sqrt(2) at y = 1.4914
            PulseShape::Sech2 => 2.0 * 1.491_433_568 * f / (2.0 * SECH_HALF_WIDTH),
            PulseShape::Rectangular => f,
        }
    }

    /// Copy of the pulse re-centred at `new_center_nm`. With
    /// `emulate_vecsel_limits`, the laser's tuning window is enforced.
    pub fn tune(&self, new_center_nm: f64, emulate_vecsel_limits: bool) -> Result<Self> {
        let (min, max) = VECSEL_TUNING_NM;
        if emulate_vecsel_limits && !(min..=max).contains(&new_center_nm) {
            return Err(Error::TuningRange {
                requested_nm: new_center_nm,
                min_nm: min,
                max_nm: max,
            });
        }
        let mut p = *self;
        p.center_wavelength_nm = new_center_nm;
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse(shape: PulseShape) -> PumpPulse {
        PumpPulse::new(1029.0, 4.5e-12, shape, 1.0, 1.5e9).unwrap()
    }

    #[test]
    fn peak_power_matches_reported_value() {
        let p0 = pulse(PulseShape::Gaussian).peak_power();
        assert!((p0 - 139.0).abs() < 2.0, "{p0}");
        assert!((pulse(PulseShape::Rectangular).peak_power() - 148.148).abs() < 0.01);
        assert!((pulse(PulseShape::Sech2).peak_power() - 130.6).abs() < 0.1);
    }

    #[test]
    fn peak_power_is_linear_in_average_power() {
        let p = pulse(PulseShape::Gaussian);
        let low = p.with_average_power(0.05).peak_power();
        assert!((low * 20.0 - p.peak_power()).abs() < 1e-12 * p.peak_power());
    }

    #[test]
    fn energy_identity_closes() {
        for shape in [PulseShape::Gaussian, PulseShape::Sech2, PulseShape::Rectangular] {
            let p = pulse(shape);
            let back = p.peak_power() * p.duration_fwhm_s * p.repetition_rate_hz / shape.shape_factor();
            assert!((back - p.average_power_w).abs() < 1e-14);
        }
    }

    // Oracle: dnu = TBP / tau, dlambda = lambda^2 dnu / c.
    #[test]
    fn transform_limited_bandwidths() {
        let g = pulse(PulseShape::Gaussian);
        assert!((g.bandwidth_hz() - 98.0e9).abs() < 0.5e9);
        assert!((g.transform_limited_bandwidth() - 0.347).abs() < 0.005);
        let s = pulse(PulseShape::Sech2);
        assert!((s.bandwidth_hz() - 70.0e9).abs() < 0.5e9);
        let mut long = g;
        long.duration_fwhm_s *= 2.0;
        assert!((long.transform_limited_bandwidth() * 2.0 - g.transform_limited_bandwidth()).abs() < 1e-15);
    }

    #[test]
    fn envelope_normalisation_and_half_width() {
        for shape in [PulseShape::Gaussian, PulseShape::Sech2] {
            let p = pulse(shape);
            let w0 = p.center_omega();
            assert!((p.spectral_envelope(w0).norm() - 1.0).abs() < 1e-15);
            let half = 0.5 * p.bandwidth_omega();
            for w in [w0 + half, w0 - half] {
                assert!((p.spectral_envelope(w).norm() - 0.5f64.sqrt()).abs() < 1e-9, "{shape}");
            }
            let d = 0.37 * p.bandwidth_omega();
            assert_eq!(p.spectral_envelope(w0 + d).norm(), p.spectral_envelope(w0 - d).norm());
        }
    }

    #[test]
    fn gaussian_envelope_integral() {
        let p = pulse(PulseShape::Gaussian);
        let f = p.bandwidth_omega();
        let w0 = p.center_omega();
        // closed form: int exp(-4 ln2 d^2 / f^2) dd = f sqrt(pi / (4 ln 2))
        let exact = f * (PI / (4.0 * LN_2)).sqrt();
        let n = 20_000;
        let h = 16.0 * f / n as f64;
        let sum: f64 = (0..=n)
            .map(|k| {
                let w = w0 - 8.0 * f + k as f64 * h;
                let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
                wt * p.spectral_envelope(w).norm_sqr()
            })
            .sum::<f64>()
            * h;
        assert!(((sum - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn sum_frequency_envelope_is_self_convolution() {
        for shape in [PulseShape::Gaussian, PulseShape::Sech2] {
            let p = pulse(shape);
            let f = p.bandwidth_omega();
            let w0 = p.center_omega();
            let conv = |sum: f64| -> f64 {
                let n = 8000;
                let h = 40.0 * f / n as f64;
                (0..=n)
                    .map(|k| {
                        let w = w0 - 20.0 * f + k as f64 * h;
                        p.spectral_envelope(w).re * p.spectral_envelope(sum - w).re
                    })
                    .sum::<f64>()
                    * h
            };
            let c0 = conv(2.0 * w0);
            for x in [0.3, 1.0, 2.2] {
                let expect = conv(2.0 * w0 + x * f) / c0;
                let got = p.sum_frequency_envelope(2.0 * w0 + x * f);
                assert!((expect - got).abs() < 1e-6, "{shape} {x}: {expect} vs {got}");
            }
            let half = 0.5 * p.sum_frequency_bandwidth();
            let v = p.sum_frequency_envelope(2.0 * w0 + half).powi(2);
            assert!((v - 0.5).abs() < 1e-6, "{shape}: {v}");
        }
    }

    #[test]
    fn tuning_within_and_beyond_laser_range() {
        let p = pulse(PulseShape::Gaussian).tune(1027.0, true).unwrap();
        let q = p.tune(1029.0, true).unwrap();
        assert_eq!(q.center_wavelength_nm, 1029.0);
        assert_eq!(q.duration_fwhm_s, 4.5e-12);
        assert_eq!(p.tune(1027.0, true).unwrap(), p);
        assert!(matches!(p.tune(1040.0, true), Err(Error::TuningRange { .. })));
        assert!(p.tune(1040.0, false).is_ok());
    }
}
