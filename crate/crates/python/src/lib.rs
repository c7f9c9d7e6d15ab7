use pcf_fwm::coincidence::{effective_window, infer_generated_rate, CoincidenceHistogram, PreparedSource};
use pcf_fwm::config::{parse_config, parse_str};
use pcf_fwm::dispersion::walkoff_length;
use pcf_fwm::jsa::{apply_filters, compute_jsa_at, schmidt_decompose, GridSpec};
use pcf_fwm::phasematch::solve_at;
use pcf_fwm::stats::pair_distribution as pair_distribution_core;
use pcf_fwm::{Dispersion, ExperimentConfig};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(pcf_fwm, PcfFwmError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    PcfFwmError::new_err(e.to_string())
}

/// Experiment configuration (TOML).
#[pyclass(name = "Config", module = "pcf_fwm", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// The bundled reference configuration.
    #[staticmethod]
    fn paper() -> Self {
        Self {
            inner: ExperimentConfig::paper_default(),
        }
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        parse_config(path).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        parse_str(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn length_m(&self) -> f64 {
        self.inner.fibre.length_m
    }

    #[getter]
    fn average_power_mw(&self) -> f64 {
        self.inner.pump.average_power_mw
    }

    /// `(kappa, raman_coefficient)`, or None without a calibration section.
    #[getter]
    fn calibration(&self) -> Option<(f64, f64)> {
        self.inner.calibration.as_ref().map(|c| (c.kappa, c.raman_coefficient))
    }

    fn with_calibration(&self, kappa: f64, raman_coefficient: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_calibration(kappa, raman_coefficient, None);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(length_m={}, average_power_mw={})",
            self.inner.fibre.length_m, self.inner.pump.average_power_mw
        )
    }
}

/// Coincidence counts against trigger delay.
#[pyclass(name = "Histogram", module = "pcf_fwm", get_all)]
struct PyHistogram {
    delays_ns: Vec<f64>,
    counts: Vec<u64>,
    n_pulses: u64,
    triggers: u64,
    coincidence_rate: f64,
    accidental_rate: f64,
    car: f64,
    peak_delay_ns: f64,
    /// FWHM of the coincidence window (ns), None if no peak stands out.
    window_ns: Option<f64>,
}

impl From<CoincidenceHistogram> for PyHistogram {
    fn from(h: CoincidenceHistogram) -> Self {
        let window_ns = effective_window(&h).ok().map(|w| w.width * 1e9);
        Self {
            delays_ns: h.delay_axis.iter().map(|d| d * 1e9).collect(),
            counts: h.counts,
            n_pulses: h.n_pulses,
            triggers: h.total_trigger_count,
            coincidence_rate: h.coincidence_rate,
            accidental_rate: h.accidental_rate,
            car: h.car,
            peak_delay_ns: h.peak_delay * 1e9,
            window_ns,
        }
    }
}

#[pymethods]
impl PyHistogram {
    fn __repr__(&self) -> String {
        format!(
            "Histogram(coincidence_rate={:.1}, accidental_rate={:.2}, car={:.1})",
            self.coincidence_rate, self.accidental_rate, self.car
        )
    }
}

/// Fibre, pump and detection chain resolved from a config: pitch calibrated
/// and the phasematched pair solved.
#[pyclass(name = "Source", module = "pcf_fwm")]
struct PySource {
    inner: PreparedSource,
}

#[pymethods]
impl PySource {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(py: Python<'_>, config: Option<PyConfig>) -> PyResult<Self> {
        let config = config.map_or_else(ExperimentConfig::paper_default, |c| c.inner);
        py.detach(|| PreparedSource::new(&config)).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn pitch_um(&self) -> f64 {
        self.inner.geometry.pitch_um
    }

    #[getter]
    fn zdw_nm(&self) -> Option<f64> {
        self.inner.model.zdw()
    }

    /// `(signal_nm, idler_nm)` at the configured pump.
    #[getter]
    fn pair_nm(&self) -> (f64, f64) {
        (self.inner.point.signal_nm, self.inner.point.idler_nm)
    }

    /// `(n_eff, beta, beta1, beta2, D)` in SI units, D in ps/(nm km).
    fn dispersion(&self, wavelength_nm: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
        let m = &self.inner.model;
        m.check_range(wavelength_nm).map_err(err)?;
        Ok((
            m.n_eff(wavelength_nm),
            m.beta(wavelength_nm),
            m.beta1(wavelength_nm),
            m.beta2(wavelength_nm),
            m.d_parameter(wavelength_nm),
        ))
    }

    /// `(signal_nm, idler_nm, delta_k)` for a pump at `pump_nm`.
    #[pyo3(signature = (pump_nm=None))]
    fn phasematch(&self, pump_nm: Option<f64>) -> PyResult<(f64, f64, f64)> {
        let s = &self.inner;
        let pump = pump_nm.unwrap_or(s.pump.center_wavelength_nm);
        let gamma_p0 = s.geometry.gamma * s.pump.peak_power();
        let q = solve_at(pump, &s.model, gamma_p0, &s.config.solver).map_err(err)?;
        Ok((q.signal_nm, q.idler_nm, q.delta_k))
    }

    /// Distance (m) over which the pump and a pulse at `other_nm` separate by
    /// one pump duration.
    fn walkoff_length(&self, other_nm: f64) -> PyResult<f64> {
        let s = &self.inner;
        walkoff_length(s.pump.duration_fwhm_s, s.pump.center_wavelength_nm, other_nm, &s.model).map_err(err)
    }

    /// Schmidt analysis of the joint spectrum:
    /// `(coefficients, purity, schmidt_number)`.
    #[pyo3(signature = (length_m=None, grid=None, filtered=false))]
    fn schmidt(
        &self,
        py: Python<'_>,
        length_m: Option<f64>,
        grid: Option<usize>,
        filtered: bool,
    ) -> PyResult<(Vec<f64>, f64, f64)> {
        let s = &self.inner;
        let spec = match grid {
            Some(n) => GridSpec {
                n_signal: n,
                n_idler: n,
                ..s.config.grid()
            },
            None => s.config.grid(),
        };
        let geometry = s.geometry.with_length(length_m.unwrap_or(s.geometry.length_m));
        let r = py.detach(|| {
            let mut j = compute_jsa_at(&s.pump, &geometry, &s.model, &s.point, &spec)?;
            if filtered {
                let (fs, fi) = s.config.filters(&s.point);
                j = apply_filters(&j, Some(&fs), Some(&fi))?;
            }
            Ok::<_, pcf_fwm::Error>(schmidt_decompose(&j))
        });
        let r = r.map_err(err)?;
        Ok((r.coefficients, r.purity, r.schmidt_number))
    }

    /// Monte Carlo coincidence histogram with the calibrated constants.
    #[pyo3(signature = (seed, pulses=None, length_m=None, power_mw=None))]
    fn simulate(
        &self,
        py: Python<'_>,
        seed: u64,
        pulses: Option<u64>,
        length_m: Option<f64>,
        power_mw: Option<f64>,
    ) -> PyResult<PyHistogram> {
        let s = &self.inner;
        let l = length_m.unwrap_or(s.config.fibre.length_m);
        let p = power_mw.unwrap_or(s.config.pump.average_power_mw) / 1e3;
        py.detach(|| s.simulate_at(l, p, seed, pulses)).map(PyHistogram::from).map_err(err)
    }

    /// `(pairs_per_s, pairs_per_s_per_mw)` generated in the fibre, inferred
    /// from measured rates and the configured detection losses.
    #[pyo3(signature = (coincidence_rate, accidental_rate, power_mw=None))]
    fn infer_generated_rate(
        &self,
        coincidence_rate: f64,
        accidental_rate: f64,
        power_mw: Option<f64>,
    ) -> PyResult<(f64, f64)> {
        let s = &self.inner;
        let p = power_mw.unwrap_or(s.config.pump.average_power_mw) / 1e3;
        let g = infer_generated_rate(coincidence_rate, accidental_rate, &s.chain, p).map_err(err)?;
        Ok((g.pairs_per_s, g.brightness_per_mw))
    }
}

/// Pair-number probabilities `P(0..=n_max)` for squeeze parameter `lam`.
#[pyfunction]
#[pyo3(signature = (lam, n_max=10))]
fn pair_distribution(lam: f64, n_max: usize) -> PyResult<Vec<f64>> {
    pair_distribution_core(lam, n_max).map(|d| d.probabilities).map_err(err)
}

#[pymodule(name = "pcf_fwm")]
pub fn pcf_fwm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PcfFwmError", m.py().get_type::<PcfFwmError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySource>()?;
    m.add_class::<PyHistogram>()?;
    m.add_function(wrap_pyfunction!(pair_distribution, m)?)?;
    Ok(())
}
