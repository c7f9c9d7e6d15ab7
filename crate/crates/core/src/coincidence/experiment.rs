use serde::{Deserialize, Serialize};

use super::{expected_rates, simulate_point, CoincidenceHistogram, DetectionChain, RamanModel, SourcePoint};
use crate::config::{ExperimentConfig, LengthScaling};
use crate::dispersion::{DispersionModel, FibreGeometry};
use crate::error::{Error, Result};
use crate::jsa::phasematched_fraction;
use crate::phasematch::{solve_at, PhasematchPoint};
use crate::pump::PumpPulse;
use crate::stats::squeeze_parameter_for;

/// Fibre, pump and detection resolved from a config, with the pitch
/// calibrated and the phasematched pair located at the configured power.
#[derive(Debug, Clone)]
pub struct PreparedSource {
    pub config: ExperimentConfig,
    pub geometry: FibreGeometry,
    pub model: DispersionModel,
    pub pump: PumpPulse,
    /// Filter centres; fixed when power or length change.
    pub point: PhasematchPoint,
    pub chain: DetectionChain,
}

impl PreparedSource {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let nominal = config.geometry();
        let model = match config.fibre.target_zdw_nm {
            Some(z) => DispersionModel::calibrated(nominal, z, config.dispersion)?,
            None => DispersionModel::new(nominal, config.dispersion)?,
        };
        let geometry = *model.geometry();
        let pump = config.pump();
        let point = solve_at(
            pump.center_wavelength_nm,
            &model,
            geometry.gamma * pump.peak_power(),
            &config.solver,
        )?;
        Ok(Self {
            config: config.clone(),
            geometry,
            model,
            pump,
            point,
            chain: config.chain(),
        })
    }

    /// Length entering `lam` under the configured scaling.
    pub fn effective_length(&self, length_m: f64, average_power_w: f64) -> Result<f64> {
        for (name, v) in [("length_m", length_m), ("average_power_w", average_power_w)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        match self.config.source.length_scaling {
            LengthScaling::Linear => Ok(length_m),
            LengthScaling::Phasematched => {
                let (fs, fi) = self.config.filters(&self.point);
                let eta = phasematched_fraction(
                    &self.pump.with_average_power(average_power_w),
                    &self.geometry.with_length(length_m),
                    &self.model,
                    &self.point,
                    &fs,
                    &fi,
                )?;
                Ok(length_m * eta.sqrt())
            }
        }
    }

    /// `(kappa, raman_coefficient)` from the `[calibration]` section.
    pub fn calibration(&self) -> Result<(f64, f64)> {
        self.config
            .calibration
            .as_ref()
            .map(|c| (c.kappa, c.raman_coefficient))
            .ok_or(Error::InvalidParameter {
                name: "calibration.kappa",
                reason: "config has no [calibration] section; run `calibrate` first".into(),
            })
    }

    pub fn source_point(
        &self,
        length_m: f64,
        average_power_w: f64,
        kappa: f64,
        raman_coefficient: f64,
    ) -> Result<SourcePoint> {
        let pump = self.pump.with_average_power(average_power_w);
        let l_eff = self.effective_length(length_m, average_power_w)?;
        let lam = squeeze_parameter_for(kappa, self.geometry.gamma, pump.peak_power(), l_eff)?;
        let raman = RamanModel {
            coefficient: raman_coefficient,
        };
        raman.validate()?;
        Ok(SourcePoint {
            lam,
            raman_mean: raman.mean_per_pulse(pump.peak_power(), length_m),
            repetition_rate_hz: pump.repetition_rate_hz,
        })
    }

    /// Pulses needed for about `target_triggers` heralds, clamped to the
    /// configured `[min_pulses, max_pulses]`.
    pub fn pulses_for(&self, source: &SourcePoint) -> Result<u64> {
        let s = &self.config.simulation;
        let e = expected_rates(source, &self.chain)?;
        let per_pulse = e.trigger_rate / source.repetition_rate_hz;
        let wanted = if per_pulse > 0.0 {
            (s.target_triggers as f64 / per_pulse).ceil()
        } else {
            f64::INFINITY
        };
        Ok(wanted.clamp(s.min_pulses as f64, s.max_pulses as f64) as u64)
    }

    /// Histogram at one length and power with the calibrated constants.
    /// `n_pulses = None` selects the adaptive count.
    pub fn simulate_at(
        &self,
        length_m: f64,
        average_power_w: f64,
        seed: u64,
        n_pulses: Option<u64>,
    ) -> Result<CoincidenceHistogram> {
        let (kappa, raman) = self.calibration()?;
        let source = self.source_point(length_m, average_power_w, kappa, raman)?;
        let n = match n_pulses {
            Some(n) => n,
            None => self.pulses_for(&source)?,
        };
        simulate_point(&source, &self.chain, seed, n)
    }
}

/// Histogram at the configured length and power.
pub fn simulate(config: &ExperimentConfig, seed: u64, n_pulses: Option<u64>) -> Result<CoincidenceHistogram> {
    let p = PreparedSource::new(config)?;
    p.simulate_at(config.fibre.length_m, p.pump.average_power_w, seed, n_pulses)
}

/// One cell of a length/power sweep. Failed cells keep their error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length_m: f64,
    pub avg_power_mw: f64,
    pub coincidence_rate_hz: Option<f64>,
    pub accidental_rate_hz: Option<f64>,
    pub car: Option<f64>,
    pub n_pulses: Option<u64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub const HEADER: [&'static str; 5] = [
        "length_m",
        "avg_power_mw",
        "coincidence_rate_hz",
        "accidental_rate_hz",
        "car",
    ];
}

/// CAR over every `(power, length)` pair, powers outermost. All cells share
/// `seed`.
pub fn car_vs_length(config: &ExperimentConfig, lengths: &[f64], powers_mw: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    let p = PreparedSource::new(config)?;
    p.calibration()?;
    let mut rows = Vec::with_capacity(lengths.len() * powers_mw.len());
    for &power in powers_mw {
        for &length in lengths {
            let cell = p.simulate_at(length, power / 1e3, seed, None);
            rows.push(match cell {
                Ok(h) => SweepRow {
                    length_m: length,
                    avg_power_mw: power,
                    coincidence_rate_hz: Some(h.coincidence_rate),
                    accidental_rate_hz: Some(h.accidental_rate),
                    car: Some(h.car),
                    n_pulses: Some(h.n_pulses),
                    error: None,
                },
                Err(e) => SweepRow {
                    length_m: length,
                    avg_power_mw: power,
                    coincidence_rate_hz: None,
                    accidental_rate_hz: None,
                    car: None,
                    n_pulses: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    Ok(rows)
}

/// Observed rates at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub length_m: f64,
    pub average_power_w: f64,
    pub coincidence_rate: f64,
    pub accidental_rate: f64,
}

impl CalibrationTargets {
    /// 9600/s coincidences over 480/s accidentals at 150 mW in 1.15 m.
    pub fn paper() -> Self {
        Self {
            length_m: 1.15,
            average_power_w: 0.150,
            coincidence_rate: 9600.0,
            accidental_rate: 480.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub kappa: f64,
    pub raman_coefficient: f64,
    /// Simulated rates at the calibrated constants.
    pub coincidence_rate: f64,
    pub accidental_rate: f64,
    /// Largest relative deviation over the fitted observables.
    pub residual: f64,
    pub iterations: usize,
    pub raman_fixed_at_zero: bool,
}

impl CalibrationOutcome {
    pub fn apply(&self, config: &ExperimentConfig, seed: u64) -> ExperimentConfig {
        config
            .clone()
            .with_calibration(self.kappa, self.raman_coefficient, Some(seed))
    }
}

const CAL_MAX_ITER: usize = 10;
const CAL_TOLERANCE: f64 = 0.01;
/// Calibrations whose best residual exceeds this are reported as failures.
const CAL_ACCEPT: f64 = 0.05;

/// Fit `kappa` and the Raman coefficient so that simulated coincidence and
/// accidental rates match `targets`.
///
/// The closed-form rate model supplies the starting point and the Jacobian
/// in log space; Monte Carlo residuals then drive the updates. With
/// `fix_raman_zero` only `kappa` is fitted, to the coincidence rate alone.
pub fn calibrate_source(
    config: &ExperimentConfig,
    targets: &CalibrationTargets,
    seed: u64,
    fix_raman_zero: bool,
) -> Result<CalibrationOutcome> {
    if !(targets.coincidence_rate > targets.accidental_rate && targets.accidental_rate > 0.0) {
        return Err(Error::InvalidParameter {
            name: "targets",
            reason: "need coincidence rate > accidental rate > 0".into(),
        });
    }
    let p = PreparedSource::new(config)?;
    let l_eff = p.effective_length(targets.length_m, targets.average_power_w)?;
    let pump = p.pump.with_average_power(targets.average_power_w);
    let drive = p.geometry.gamma * pump.peak_power();
    // Raman enters per unit of peak power and length
    let raman_scale = pump.peak_power() * targets.length_m;
    let point = |u: [f64; 2]| -> Result<SourcePoint> {
        let lam = u[0].exp() * drive * l_eff;
        if lam >= 1.0 {
            return Err(Error::OverPumped { lam });
        }
        Ok(SourcePoint {
            lam,
            raman_mean: if fix_raman_zero { 0.0 } else { u[1].exp() * raman_scale },
            repetition_rate_hz: pump.repetition_rate_hz,
        })
    };
    let log_target = [targets.coincidence_rate.ln(), targets.accidental_rate.ln()];
    let analytic = |u: [f64; 2]| -> Result<[f64; 2]> {
        let e = expected_rates(&point(u)?, &p.chain)?;
        Ok([e.coincidence_rate.ln(), e.accidental_rate.ln()])
    };
    let jacobian = |u: [f64; 2]| -> Result<[[f64; 2]; 2]> {
        const H: f64 = 1e-4;
        let f0 = analytic(u)?;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut v = u;
            v[k] += H;
            let f = analytic(v)?;
            for r in 0..2 {
                j[r][k] = (f[r] - f0[r]) / H;
            }
        }
        Ok(j)
    };
    // Newton step for residual `res` (log space), limited to a factor e^2.
    let step = |u: [f64; 2], res: [f64; 2]| -> Result<[f64; 2]> {
        let j = jacobian(u)?;
        let d = if fix_raman_zero {
            [res[0] / j[0][0], 0.0]
        } else {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-12 {
                return Err(Error::SourceCalibration {
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
            [
                (j[1][1] * res[0] - j[0][1] * res[1]) / det,
                (j[0][0] * res[1] - j[1][0] * res[0]) / det,
            ]
        };
        Ok([u[0] - d[0].clamp(-2.0, 2.0), u[1] - d[1].clamp(-2.0, 2.0)])
    };

    let eta = p.chain.signal_efficiency() * p.chain.idler_efficiency();
    let x0 = ((targets.coincidence_rate - targets.accidental_rate) / (eta * pump.repetition_rate_hz)).min(0.25);
    let mut u = [(x0.sqrt() / (drive * l_eff)).ln(), (1e-3 / raman_scale).ln()];
    for _ in 0..50 {
        let f = analytic(u)?;
        let res = [f[0] - log_target[0], f[1] - log_target[1]];
        if res[0].abs() < 1e-10 && (fix_raman_zero || res[1].abs() < 1e-10) {
            break;
        }
        u = step(u, res)?;
    }

    let mut best: Option<CalibrationOutcome> = None;
    for it in 1..=CAL_MAX_ITER {
        let source = point(u)?;
        let h = simulate_point(&source, &p.chain, seed, p.pulses_for(&source)?)?;
        let rel_c = h.coincidence_rate / targets.coincidence_rate - 1.0;
        let rel_a = h.accidental_rate / targets.accidental_rate - 1.0;
        let residual = if fix_raman_zero { rel_c.abs() } else { rel_c.abs().max(rel_a.abs()) };
        let outcome = CalibrationOutcome {
            kappa: u[0].exp(),
            raman_coefficient: if fix_raman_zero { 0.0 } else { u[1].exp() },
            coincidence_rate: h.coincidence_rate,
            accidental_rate: h.accidental_rate,
            residual,
            iterations: it,
            raman_fixed_at_zero: fix_raman_zero,
        };
        if best.is_none_or(|b| residual < b.residual) {
            best = Some(outcome);
        }
        if residual < CAL_TOLERANCE || !h.accidental_rate.is_finite() || h.accidental_rate <= 0.0 {
            break;
        }
        let res = [
            h.coincidence_rate.ln() - log_target[0],
            h.accidental_rate.ln() - log_target[1],
        ];
        u = step(u, res)?;
    }
    let best = best.expect("at least one iteration");
    if best.residual > CAL_ACCEPT && !fix_raman_zero {
        return Err(Error::SourceCalibration {
            iterations: best.iterations,
            residual: best.residual,
        });
    }
    Ok(best)
}
