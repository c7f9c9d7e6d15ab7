//! Experiment configuration files.
//!
//! Files are TOML with one table per subsystem. Keys carry their unit as a
//! suffix (`_nm`, `_ps`, `_mw`, `_hz`, ...) and values are stored in those
//! file units, so `parse(serialize(c)) == c` holds exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coincidence::{delay_sweep, DetectionChain, RamanModel};
use crate::dispersion::pcf::HOLE_RATIO_RANGE;
use crate::dispersion::{FibreGeometry, FitSettings};
use crate::error::{ConfigError, Error};
use crate::jsa::{GridSpec, TopHatFilter, DEFAULT_IDLER_FILTER_NM, DEFAULT_SIGNAL_FILTER_NM};
use crate::phasematch::{PhasematchPoint, SolverSettings};
use crate::pump::{PulseShape, PumpPulse};
use crate::units::SPEED_OF_LIGHT;

/// Environment variable naming the config used when `--config` is absent.
pub const CONFIG_ENV: &str = "PCF_FWM_CONFIG";

/// Sections that every file must contain.
pub const REQUIRED_SECTIONS: [&str; 3] = ["fibre", "pump", "detection"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibreSection {
    pub pitch_um: f64,
    pub hole_ratio: f64,
    pub length_m: f64,
    pub gamma_per_w_m: f64,
    /// When set, the pitch is recalibrated to place the ZDW here and
    /// `pitch_um` is kept only as the nominal design value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_zdw_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub center_wavelength_nm: f64,
    pub duration_fwhm_ps: f64,
    pub shape: PulseShape,
    pub average_power_mw: f64,
    pub repetition_rate_hz: f64,
    #[serde(default)]
    pub chirp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub signal_transmission: f64,
    pub idler_transmission: f64,
    pub signal_det_efficiency: f64,
    pub idler_det_efficiency: f64,
    pub signal_dark_rate_hz: f64,
    pub idler_dark_prob_per_gate: f64,
    pub gate_width_ns: f64,
    pub gate_edge_ns: f64,
    pub trigger_delay_ns: f64,
    pub delay_sweep_start_ns: f64,
    pub delay_sweep_stop_ns: f64,
    pub delay_sweep_step_ns: f64,
    pub signal_dead_time_ns: f64,
    pub max_gate_rate_hz: f64,
    pub idler_fibre_length_m: f64,
    pub idler_fibre_group_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JsaSection {
    pub n_signal: usize,
    pub n_idler: usize,
    pub span_factor: f64,
    pub signal_filter_nm: f64,
    pub idler_filter_nm: f64,
}

impl Default for JsaSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            n_signal: g.n_signal,
            n_idler: g.n_idler,
            span_factor: g.span_factor,
            signal_filter_nm: DEFAULT_SIGNAL_FILTER_NM,
            idler_filter_nm: DEFAULT_IDLER_FILTER_NM,
        }
    }
}

/// How the pair amplitude grows with fibre length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthScaling {
    /// `lam` proportional to `L`.
    Linear,
    /// `lam` proportional to `L * sqrt(eta(L))`, where `eta` is the fraction of
    /// the unfiltered pair spectrum that survives phasematching inside the
    /// collection filters.
    #[default]
    Phasematched,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub length_scaling: LengthScaling,
}

/// Fitted source constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub kappa: f64,
    /// Raman photons per pulse per W of peak power per m.
    pub raman_coefficient: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Pulse counts are raised until about this many triggers are expected.
    pub target_triggers: u64,
    pub min_pulses: u64,
    pub max_pulses: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            target_triggers: 200_000,
            min_pulses: 10_000_000,
            max_pulses: 200_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub fibre: FibreSection,
    #[serde(default)]
    pub dispersion: FitSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    pub pump: PumpSection,
    pub detection: DetectionSection,
    #[serde(default)]
    pub jsa: JsaSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
}

/// Text of the bundled configuration.
/// Largest seed a config file can hold; TOML integers are signed 64-bit.
pub const MAX_SEED: u64 = i64::MAX as u64;

pub const PAPER_CONFIG: &str = include_str!("../configs/paper.cfg");

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e| toml_error(text, &e))?;
    for section in REQUIRED_SECTIONS {
        if !table.get(section).is_some_and(|v| v.is_table()) {
            return Err(ConfigError::MissingSection(section.to_string()));
        }
    }
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    config.validate()?;
    Ok(config)
}

fn toml_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    let message = e.message().trim().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            return ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            };
        }
    }
    ConfigError::Syntax { line, message }
}

fn invariant(ok: bool, key: &str, reason: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invariant {
            key: key.to_string(),
            reason: reason.into(),
        })
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    invariant(v > 0.0 && v.is_finite(), key, format!("must be positive and finite, got {v}"))
}

fn probability(key: &str, v: f64) -> Result<(), ConfigError> {
    invariant((0.0..=1.0).contains(&v), key, format!("must lie in [0, 1], got {v}"))
}

/// Prefix unqualified parameter names from domain validators with `section`.
fn scoped(section: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } => ConfigError::Invariant {
            key: if name.contains('.') {
                name.to_string()
            } else {
                format!("{section}.{name}")
            },
            reason,
        },
        other => ConfigError::Invariant {
            key: section.to_string(),
            reason: other.to_string(),
        },
    }
}

impl ExperimentConfig {
    pub fn paper_default() -> Self {
        parse_str(PAPER_CONFIG).expect("bundled config is valid")
    }

    /// Panics on a seed above `MAX_SEED`; `validate` rejects those.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("validated config is serialisable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.fibre;
        positive("fibre.pitch_um", f.pitch_um)?;
        let (lo, hi) = HOLE_RATIO_RANGE;
        invariant(
            (lo..=hi).contains(&f.hole_ratio),
            "fibre.hole_ratio",
            format!("{} is outside the model range [{lo}, {hi}]", f.hole_ratio),
        )?;
        positive("fibre.length_m", f.length_m)?;
        positive("fibre.gamma_per_w_m", f.gamma_per_w_m)?;
        if let Some(z) = f.target_zdw_nm {
            invariant(
                z > self.dispersion.min_nm && z < self.dispersion.max_nm,
                "fibre.target_zdw_nm",
                format!("{z} nm is outside the dispersion window"),
            )?;
        }

        self.dispersion.validate().map_err(|e| scoped("dispersion", e))?;
        let s = &self.solver;
        positive("solver.min_signal_nm", s.min_signal_nm)?;
        positive("solver.pump_guard_nm", s.pump_guard_nm)?;
        positive("solver.scan_step_nm", s.scan_step_nm)?;
        positive("solver.residual_tolerance", s.residual_tolerance)?;

        let p = &self.pump;
        positive("pump.center_wavelength_nm", p.center_wavelength_nm)?;
        positive("pump.duration_fwhm_ps", p.duration_fwhm_ps)?;
        positive("pump.average_power_mw", p.average_power_mw)?;
        positive("pump.repetition_rate_hz", p.repetition_rate_hz)?;
        invariant(p.chirp == 0.0, "pump.chirp", "chirped pulses are not modelled")?;

        let d = &self.detection;
        probability("detection.signal_transmission", d.signal_transmission)?;
        probability("detection.idler_transmission", d.idler_transmission)?;
        probability("detection.signal_det_efficiency", d.signal_det_efficiency)?;
        probability("detection.idler_det_efficiency", d.idler_det_efficiency)?;
        probability("detection.idler_dark_prob_per_gate", d.idler_dark_prob_per_gate)?;
        invariant(
            d.signal_dark_rate_hz >= 0.0 && d.signal_dark_rate_hz.is_finite(),
            "detection.signal_dark_rate_hz",
            "must be non-negative",
        )?;
        positive("detection.gate_width_ns", d.gate_width_ns)?;
        invariant(
            d.gate_edge_ns >= 0.0 && 2.0 * d.gate_edge_ns <= d.gate_width_ns,
            "detection.gate_edge_ns",
            "must lie in [0, gate_width_ns / 2]",
        )?;
        invariant(
            d.signal_dead_time_ns >= 0.0,
            "detection.signal_dead_time_ns",
            "must be non-negative",
        )?;
        positive("detection.max_gate_rate_hz", d.max_gate_rate_hz)?;
        positive("detection.delay_sweep_step_ns", d.delay_sweep_step_ns)?;
        invariant(
            d.delay_sweep_start_ns >= 0.0 && d.delay_sweep_stop_ns > d.delay_sweep_start_ns,
            "detection.delay_sweep_stop_ns",
            "need 0 <= start < stop",
        )?;
        positive("detection.idler_fibre_length_m", d.idler_fibre_length_m)?;
        invariant(
            d.idler_fibre_group_index >= 1.0,
            "detection.idler_fibre_group_index",
            "must be at least 1",
        )?;
        self.chain().validate().map_err(|e| scoped("detection", e))?;

        let j = &self.jsa;
        self.grid().validate().map_err(|e| scoped("jsa", e))?;
        positive("jsa.signal_filter_nm", j.signal_filter_nm)?;
        positive("jsa.idler_filter_nm", j.idler_filter_nm)?;

        if let Some(c) = &self.calibration {
            positive("calibration.kappa", c.kappa)?;
            invariant(
                c.raman_coefficient >= 0.0 && c.raman_coefficient.is_finite(),
                "calibration.raman_coefficient",
                "must be non-negative",
            )?;
            invariant(
                c.seed.is_none_or(|s| s <= MAX_SEED),
                "calibration.seed",
                format!("must be at most {MAX_SEED}"),
            )?;
        }
        let m = &self.simulation;
        invariant(m.target_triggers > 0, "simulation.target_triggers", "must be positive")?;
        invariant(
            m.min_pulses >= crate::coincidence::MIN_PULSES && m.max_pulses >= m.min_pulses,
            "simulation.min_pulses",
            format!("need {} <= min_pulses <= max_pulses", crate::coincidence::MIN_PULSES),
        )?;
        Ok(())
    }

    /// Geometry with the nominal pitch.
    pub fn geometry(&self) -> FibreGeometry {
        FibreGeometry {
            pitch_um: self.fibre.pitch_um,
            hole_ratio: self.fibre.hole_ratio,
            length_m: self.fibre.length_m,
            gamma: self.fibre.gamma_per_w_m,
        }
    }

    pub fn pump(&self) -> PumpPulse {
        let p = &self.pump;
        PumpPulse {
            center_wavelength_nm: p.center_wavelength_nm,
            duration_fwhm_s: p.duration_fwhm_ps / 1e12,
            shape: p.shape,
            average_power_w: p.average_power_mw / 1e3,
            repetition_rate_hz: p.repetition_rate_hz,
            chirp: p.chirp,
        }
    }

    /// Detection chain; the electronic latency is set so that a trigger
    /// delay of `trigger_delay_ns` centres the gate on the correlated idler.
    pub fn chain(&self) -> DetectionChain {
        let d = &self.detection;
        let ns = |v: f64| v / 1e9;
        let idler_fibre_delay = d.idler_fibre_length_m * d.idler_fibre_group_index / SPEED_OF_LIGHT;
        let gate_width = ns(d.gate_width_ns);
        let trigger_delay = ns(d.trigger_delay_ns);
        DetectionChain {
            signal_transmission: d.signal_transmission,
            idler_transmission: d.idler_transmission,
            signal_det_efficiency: d.signal_det_efficiency,
            idler_det_efficiency: d.idler_det_efficiency,
            signal_dark_rate: d.signal_dark_rate_hz,
            idler_dark_prob_per_gate: d.idler_dark_prob_per_gate,
            gate_width,
            gate_edge: ns(d.gate_edge_ns),
            trigger_delay,
            trigger_delay_sweep: delay_sweep(
                ns(d.delay_sweep_start_ns),
                ns(d.delay_sweep_stop_ns),
                ns(d.delay_sweep_step_ns),
            ),
            signal_dead_time: ns(d.signal_dead_time_ns),
            max_gate_rate: d.max_gate_rate_hz,
            idler_fibre_delay,
            trigger_latency: idler_fibre_delay - trigger_delay - 0.5 * gate_width,
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            n_signal: self.jsa.n_signal,
            n_idler: self.jsa.n_idler,
            span_factor: self.jsa.span_factor,
            signal_span: None,
            idler_span: None,
        }
    }

    /// Collection filters centred on a phasematched pair.
    pub fn filters(&self, point: &PhasematchPoint) -> (TopHatFilter, TopHatFilter) {
        (
            TopHatFilter {
                center_nm: point.signal_nm,
                width_nm: self.jsa.signal_filter_nm,
            },
            TopHatFilter {
                center_nm: point.idler_nm,
                width_nm: self.jsa.idler_filter_nm,
            },
        )
    }

    pub fn raman(&self) -> RamanModel {
        RamanModel {
            coefficient: self.calibration.as_ref().map_or(0.0, |c| c.raman_coefficient),
        }
    }

    pub fn with_calibration(mut self, kappa: f64, raman_coefficient: f64, seed: Option<u64>) -> Self {
        self.calibration = Some(CalibrationSection {
            kappa,
            raman_coefficient,
            seed,
        });
        self
    }
}
