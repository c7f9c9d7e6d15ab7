//! Discretised two-photon joint spectral amplitude, its marginals and its
//! Schmidt decomposition.
//!
//! `f(ws, wi) = alpha(ws + wi) * sinc(dk L / 2) * exp(i dk L / 2)`, where
//! `alpha` is the pump's sum-frequency envelope and `dk` is evaluated with the
//! pump at the mean frequency `(ws + wi) / 2`, including the `2 gamma P0` term.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{Dispersion, FibreGeometry};
use crate::error::{Error, Result};
use crate::phasematch::{mismatch_unchecked, solve_signal_idler, PhasematchPoint};
use crate::pump::{sinc, PulseShape, PumpPulse};
use crate::units::{nm_from_omega, omega_from_nm};

/// Largest fraction of `sum |f|^2` allowed on the outermost rows and columns.
pub const BORDER_MASS_LIMIT: f64 = 1e-4;
pub const DEFAULT_SIGNAL_FILTER_NM: f64 = 4.0;
pub const DEFAULT_IDLER_FILTER_NM: f64 = 6.0;

/// Grid size and extent. Spans in rad/s; `None` selects
/// `span_factor` times the support of the pump/phasematching parallelogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_signal: usize,
    pub n_idler: usize,
    pub span_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler_span: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_signal: 512,
            n_idler: 512,
            span_factor: 8.0,
            signal_span: None,
            idler_span: None,
        }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self {
            n_signal: n,
            n_idler: n,
            ..Self::default()
        }
    }

    pub fn with_spans(mut self, signal_span: f64, idler_span: f64) -> Self {
        self.signal_span = Some(signal_span);
        self.idler_span = Some(idler_span);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_signal < 2 || self.n_idler < 2 {
            return Err(Error::InvalidParameter {
                name: "jsa.n_signal",
                reason: "grid needs at least 2 points per axis".into(),
            });
        }
        if !(self.span_factor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "jsa.span_factor",
                reason: "must be positive".into(),
            });
        }
        for (name, s) in [("jsa.signal_span", self.signal_span), ("jsa.idler_span", self.idler_span)] {
            if let Some(s) = s {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: "span must be positive".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Uniform axis of `n` points centred on `center` with total extent `span`.
pub fn uniform_axis(center: f64, span: f64, n: usize) -> Vec<f64> {
    let step = span / (n - 1) as f64;
    (0..n).map(|k| center - 0.5 * span + k as f64 * step).collect()
}

/// Normalised joint spectral amplitude on a uniform angular-frequency grid.
/// Rows index the signal axis, columns the idler axis.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub signal_axis: Vec<f64>,
    pub idler_axis: Vec<f64>,
    pub amplitude: DMatrix<Complex64>,
    /// `sqrt(sum |f|^2 dws dwi)` of the amplitude before normalisation.
    pub norm: f64,
}

impl JointSpectralAmplitude {
    /// Builds and normalises a JSA from a function of `(ws, wi)`.
    pub fn from_fn<F>(signal_axis: Vec<f64>, idler_axis: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        check_axis("signal_axis", &signal_axis)?;
        check_axis("idler_axis", &idler_axis)?;
        let rows: Vec<Vec<Complex64>> = signal_axis
            .par_iter()
            .map(|&ws| idler_axis.iter().map(|&wi| f(ws, wi)).collect())
            .collect();
        let (ns, ni) = (signal_axis.len(), idler_axis.len());
        let amplitude = DMatrix::from_fn(ns, ni, |r, c| rows[r][c]);
        Self::from_matrix(signal_axis, idler_axis, amplitude)
    }

    pub fn from_matrix(signal_axis: Vec<f64>, idler_axis: Vec<f64>, mut amplitude: DMatrix<Complex64>) -> Result<Self> {
        check_axis("signal_axis", &signal_axis)?;
        check_axis("idler_axis", &idler_axis)?;
        if amplitude.shape() != (signal_axis.len(), idler_axis.len()) {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                reason: format!(
                    "matrix is {:?}, axes are {}x{}",
                    amplitude.shape(),
                    signal_axis.len(),
                    idler_axis.len()
                ),
            });
        }
        let cell = step(&signal_axis) * step(&idler_axis);
        let norm = (ordered_norm_sqr(&amplitude) * cell).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                reason: "amplitude vanishes on the grid".into(),
            });
        }
        amplitude.unscale_mut(norm);
        Ok(Self {
            signal_axis,
            idler_axis,
            amplitude,
            norm,
        })
    }

    pub fn signal_step(&self) -> f64 {
        step(&self.signal_axis)
    }

    pub fn idler_step(&self) -> f64 {
        step(&self.idler_axis)
    }

    /// `sum |f|^2 dws dwi`; equals 1 for a normalised JSA.
    pub fn total_probability(&self) -> f64 {
        ordered_norm_sqr(&self.amplitude) * self.signal_step() * self.idler_step()
    }

    pub fn density(&self, row: usize, col: usize) -> f64 {
        self.amplitude[(row, col)].norm_sqr()
    }

    /// Grid cell with the largest `|f|^2`; first in row-major order on ties.
    pub fn peak_index(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut max = f64::NEG_INFINITY;
        for r in 0..self.amplitude.nrows() {
            for c in 0..self.amplitude.ncols() {
                let d = self.density(r, c);
                if d > max {
                    max = d;
                    best = (r, c);
                }
            }
        }
        best
    }

    /// Peak location as (signal nm, idler nm).
    pub fn peak_wavelengths(&self) -> (f64, f64) {
        let (r, c) = self.peak_index();
        (nm_from_omega(self.signal_axis[r]), nm_from_omega(self.idler_axis[c]))
    }

    /// Fraction of the probability on the outermost rows and columns.
    pub fn border_fraction(&self) -> f64 {
        border_fraction(&self.amplitude)
    }

    /// Rows of `(signal_nm, idler_nm, density)` with density per (rad/s)^2.
    pub fn density_rows(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.amplitude.len());
        for (r, &ws) in self.signal_axis.iter().enumerate() {
            for (c, &wi) in self.idler_axis.iter().enumerate() {
                out.push([nm_from_omega(ws), nm_from_omega(wi), self.density(r, c)]);
            }
        }
        out
    }
}

fn step(axis: &[f64]) -> f64 {
    (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidParameter {
            name,
            reason: "axis needs at least 2 points".into(),
        });
    }
    let h = step(axis);
    let uniform = axis
        .windows(2)
        .all(|w| w[1] > w[0] && ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if !uniform {
        return Err(Error::InvalidParameter {
            name,
            reason: "axis must be strictly increasing and uniform".into(),
        });
    }
    Ok(())
}

// Row-major sequential sum: independent of how the matrix was filled.
fn ordered_norm_sqr(m: &DMatrix<Complex64>) -> f64 {
    let mut s = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            s += m[(r, c)].norm_sqr();
        }
    }
    s
}

fn border_fraction(m: &DMatrix<Complex64>) -> f64 {
    let (nr, nc) = m.shape();
    let mut edge = 0.0;
    for r in 0..nr {
        for c in 0..nc {
            if r == 0 || c == 0 || r == nr - 1 || c == nc - 1 {
                edge += m[(r, c)].norm_sqr();
            }
        }
    }
    edge / ordered_norm_sqr(m)
}

/// `sinc(dk L / 2) exp(i dk L / 2)`.
pub fn phasematching_function(delta_k: f64, length_m: f64) -> Complex64 {
    let x = 0.5 * delta_k * length_m;
    Complex64::from_polar(sinc(x), x)
}

/// Phase mismatch at signal/idler angular frequencies, pump at their mean.
pub fn pair_mismatch<D: Dispersion + ?Sized>(ws: f64, wi: f64, model: &D, gamma_p0: f64) -> f64 {
    mismatch_unchecked(
        nm_from_omega(0.5 * (ws + wi)),
        nm_from_omega(ws),
        nm_from_omega(wi),
        model,
        gamma_p0,
    )
}

/// Full widths (rad/s) of the pump/phasematching parallelogram projected on
/// the signal and idler axes around the phasematched point.
pub fn natural_extents<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
    point: &PhasematchPoint,
) -> (f64, f64) {
    let b1p = model.beta1(pump.center_wavelength_nm);
    let a = b1p - model.beta1(point.signal_nm);
    let b = b1p - model.beta1(point.idler_nm);
    let wp = pump.sum_frequency_bandwidth();
    let wk = 4.0 * std::f64::consts::PI / geometry.length_m;
    let det = (b - a).abs();
    let es = (b.abs() * wp + wk) / det;
    let ei = (a.abs() * wp + wk) / det;
    // group-velocity matched signal and idler: only the pump bounds the grid
    let fallback = 4.0 * wp;
    let pick = |e: f64| if e.is_finite() && e > 0.0 { e } else { fallback };
    (pick(es), pick(ei))
}

/// JSA for the given pump and fibre centred on the widely-detuned solution.
pub fn compute_jsa<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
    grid: &GridSpec,
) -> Result<JointSpectralAmplitude> {
    let point = solve_signal_idler(pump, geometry, model)?;
    compute_jsa_at(pump, geometry, model, &point, grid)
}

/// JSA centred on a given phasematched point.
pub fn compute_jsa_at<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
    point: &PhasematchPoint,
    grid: &GridSpec,
) -> Result<JointSpectralAmplitude> {
    grid.validate()?;
    pump.validate()?;
    geometry.validate()?;
    let (es, ei) = natural_extents(pump, geometry, model, point);
    let span_s = grid.signal_span.unwrap_or(grid.span_factor * es);
    let span_i = grid.idler_span.unwrap_or(grid.span_factor * ei);
    let signal_axis = uniform_axis(omega_from_nm(point.signal_nm), span_s, grid.n_signal);
    let idler_axis = uniform_axis(omega_from_nm(point.idler_nm), span_i, grid.n_idler);
    for axis in [&signal_axis, &idler_axis] {
        if axis[0] <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "jsa.span_factor",
                reason: "grid extends to non-positive frequency".into(),
            });
        }
        // lowest frequency is the longest wavelength
        model.check_range(nm_from_omega(axis[0]))?;
        model.check_range(nm_from_omega(axis[axis.len() - 1]))?;
    }
    let gamma_p0 = geometry.gamma * pump.peak_power();
    let length = geometry.length_m;
    let jsa = JointSpectralAmplitude::from_fn(signal_axis, idler_axis, |ws, wi| {
        let dk = pair_mismatch(ws, wi, model, gamma_p0);
        pump.sum_frequency_envelope(ws + wi) * phasematching_function(dk, length)
    })?;
    let clipped = jsa.border_fraction();
    if clipped > BORDER_MASS_LIMIT {
        return Err(Error::GridTooSmall { clipped_fraction: clipped });
    }
    Ok(jsa)
}

/// One-sided marginal intensity with its FWHM.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub omega: Vec<f64>,
    /// Probability density per rad/s; `sum density * d_omega = 1`.
    pub density: Vec<f64>,
    pub fwhm_omega: f64,
    pub fwhm_nm: f64,
    /// More than one disjoint region above half maximum.
    pub multimodal: bool,
}

impl Marginal {
    fn from_density(omega: Vec<f64>, density: Vec<f64>) -> Self {
        let (lo, hi, multimodal) = half_max_crossings(&omega, &density);
        Self {
            fwhm_omega: hi - lo,
            fwhm_nm: (nm_from_omega(lo) - nm_from_omega(hi)).abs(),
            omega,
            density,
            multimodal,
        }
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * step(&self.omega)
    }
}

/// Interpolated half-maximum crossings of the widest contiguous region above
/// half maximum, plus whether other such regions exist.
fn half_max_crossings(x: &[f64], y: &[f64]) -> (f64, f64, bool) {
    let half = 0.5 * y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (k, &v) in y.iter().enumerate() {
        match (v >= half, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                regions.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        regions.push((s, y.len() - 1));
    }
    let (a, b) = regions
        .iter()
        .copied()
        .max_by(|p, q| {
            let wp = x[p.1] - x[p.0];
            let wq = x[q.1] - x[q.0];
            // earlier region wins ties
            wp.partial_cmp(&wq).unwrap().then(q.0.cmp(&p.0))
        })
        .unwrap_or((0, y.len() - 1));
    let cross = |i: usize, j: usize| {
        let t = (half - y[i]) / (y[j] - y[i]);
        x[i] + t * (x[j] - x[i])
    };
    let lo = if a == 0 { x[0] } else { cross(a - 1, a) };
    let hi = if b == y.len() - 1 { x[b] } else { cross(b, b + 1) };
    (lo, hi, regions.len() > 1)
}

/// Signal and idler marginals of a normalised JSA.
pub fn marginal_spectra(jsa: &JointSpectralAmplitude) -> (Marginal, Marginal) {
    let (ns, ni) = jsa.amplitude.shape();
    let (ds, di) = (jsa.signal_step(), jsa.idler_step());
    let signal: Vec<f64> = (0..ns)
        .map(|r| (0..ni).map(|c| jsa.density(r, c)).sum::<f64>() * di)
        .collect();
    let idler: Vec<f64> = (0..ni)
        .map(|c| (0..ns).map(|r| jsa.density(r, c)).sum::<f64>() * ds)
        .collect();
    (
        Marginal::from_density(jsa.signal_axis.clone(), signal),
        Marginal::from_density(jsa.idler_axis.clone(), idler),
    )
}

/// Ideal rectangular passband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopHatFilter {
    pub center_nm: f64,
    pub width_nm: f64,
}

impl TopHatFilter {
    pub fn passes_nm(&self, nm: f64) -> bool {
        (nm - self.center_nm).abs() <= 0.5 * self.width_nm
    }

    /// Passband as an angular-frequency interval (low, high).
    pub fn omega_band(&self) -> (f64, f64) {
        (
            omega_from_nm(self.center_nm + 0.5 * self.width_nm),
            omega_from_nm(self.center_nm - 0.5 * self.width_nm),
        )
    }
}

/// Filters centred on a phasematched point with the default 4 nm / 6 nm
/// passbands.
pub fn default_filters(point: &PhasematchPoint) -> (TopHatFilter, TopHatFilter) {
    (
        TopHatFilter {
            center_nm: point.signal_nm,
            width_nm: DEFAULT_SIGNAL_FILTER_NM,
        },
        TopHatFilter {
            center_nm: point.idler_nm,
            width_nm: DEFAULT_IDLER_FILTER_NM,
        },
    )
}

/// Multiplies the JSA by optional top-hat filters and renormalises.
pub fn apply_filters(
    jsa: &JointSpectralAmplitude,
    signal: Option<&TopHatFilter>,
    idler: Option<&TopHatFilter>,
) -> Result<JointSpectralAmplitude> {
    let pass = |f: Option<&TopHatFilter>, w: f64| f.is_none_or(|f| f.passes_nm(nm_from_omega(w)));
    let mut amp = jsa.amplitude.clone();
    for (r, &ws) in jsa.signal_axis.iter().enumerate() {
        for (c, &wi) in jsa.idler_axis.iter().enumerate() {
            if !(pass(signal, ws) && pass(idler, wi)) {
                amp[(r, c)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    if ordered_norm_sqr(&amp) == 0.0 {
        return Err(Error::ZeroEfficiency("filters block the entire joint spectrum"));
    }
    JointSpectralAmplitude::from_matrix(jsa.signal_axis.clone(), jsa.idler_axis.clone(), amp)
}

/// Schmidt coefficients and derived purity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtResult {
    /// Descending, with `sum c^2 = 1`.
    pub coefficients: Vec<f64>,
    pub purity: f64,
    pub schmidt_number: f64,
}

impl SchmidtResult {
    fn from_singular_values(mut s: Vec<f64>) -> Self {
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = s.iter().map(|c| c * c).sum();
        let coefficients: Vec<f64> = s.iter().map(|c| c / total.sqrt()).collect();
        let purity = coefficients.iter().map(|c| c.powi(4)).sum::<f64>();
        Self {
            coefficients,
            purity,
            schmidt_number: 1.0 / purity,
        }
    }
}

/// Schmidt decomposition with the singular vectors kept for reconstruction.
#[derive(Debug, Clone)]
pub struct SchmidtModes {
    pub result: SchmidtResult,
    /// Signal modes as columns, ordered like `result.coefficients`.
    pub signal_modes: DMatrix<Complex64>,
    /// Conjugate-transposed idler modes as rows.
    pub idler_modes_adjoint: DMatrix<Complex64>,
    cell: f64,
}

impl SchmidtModes {
    /// Amplitude rebuilt from the leading `k` singular triples.
    pub fn reconstruct(&self, k: usize) -> DMatrix<Complex64> {
        let k = k.min(self.result.coefficients.len());
        let u = self.signal_modes.columns(0, k);
        let vt = self.idler_modes_adjoint.rows(0, k);
        let mut scaled = u.into_owned();
        for (j, &c) in self.result.coefficients.iter().take(k).enumerate() {
            scaled.column_mut(j).scale_mut(c);
        }
        (scaled * vt).unscale(self.cell.sqrt())
    }
}

/// Singular value decomposition of the cell-weighted amplitude matrix.
pub fn schmidt_modes(jsa: &JointSpectralAmplitude) -> SchmidtModes {
    let cell = jsa.signal_step() * jsa.idler_step();
    let m = jsa.amplitude.scale(cell.sqrt());
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    let signal_modes = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let idler_modes_adjoint = DMatrix::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    SchmidtModes {
        result: SchmidtResult::from_singular_values(sv),
        signal_modes,
        idler_modes_adjoint,
        cell,
    }
}

pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> SchmidtResult {
    let cell = jsa.signal_step() * jsa.idler_step();
    let sv = jsa.amplitude.scale(cell.sqrt()).singular_values();
    SchmidtResult::from_singular_values(sv.iter().copied().collect())
}

/// Purity at each fibre length; per-row errors are kept.
pub fn purity_vs_length<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
    lengths: &[f64],
    grid: &GridSpec,
) -> Vec<(f64, Result<f64>)> {
    lengths
        .iter()
        .map(|&l| {
            let r = if !(l > 0.0) {
                Err(Error::InvalidParameter {
                    name: "length_m",
                    reason: "must be positive".into(),
                })
            } else {
                compute_jsa(pump, &geometry.with_length(l), model, grid).map(|j| schmidt_decompose(&j).purity)
            };
            (l, r)
        })
        .collect()
}

/// Fraction of the pump-allowed pair spectrum inside the filter box that the
/// phasematching function passes:
/// `int int_box |alpha sinc|^2 / int int_box |alpha|^2`.
///
/// Tends to 1 for short fibres and falls as `1/L` once the phasematching
/// bandwidth is narrower than the filters.
pub fn phasematched_fraction<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
    point: &PhasematchPoint,
    signal: &TopHatFilter,
    idler: &TopHatFilter,
) -> Result<f64> {
    const SUM_NODES: usize = 400;
    const MIN_NODES: usize = 64;
    const MAX_NODES: usize = 20_000;
    let (s_lo, s_hi) = signal.omega_band();
    let (i_lo, i_hi) = idler.omega_band();
    for w in [s_lo, s_hi, i_lo, i_hi] {
        model.check_range(nm_from_omega(w))?;
    }
    let wp = pump.sum_frequency_bandwidth();
    let centre = 2.0 * pump.center_omega();
    let reach = match pump.shape {
        PulseShape::Rectangular => f64::INFINITY,
        _ => 10.0 * wp,
    };
    let sum_lo = (s_lo + i_lo).max(centre - reach);
    let sum_hi = (s_hi + i_hi).min(centre + reach);
    if sum_hi <= sum_lo {
        return Err(Error::ZeroEfficiency("pump sum-frequency band misses the filter box"));
    }
    let gamma_p0 = geometry.gamma * pump.peak_power();
    let length = geometry.length_m;
    let slope = (model.beta1(point.idler_nm) - model.beta1(point.signal_nm)).abs();
    let lobe = 2.0 * std::f64::consts::PI / (length * slope);
    let d_sum = (sum_hi - sum_lo) / SUM_NODES as f64;
    let (num, den) = (0..SUM_NODES)
        .map(|k| {
            let sum = sum_lo + (k as f64 + 0.5) * d_sum;
            let a2 = pump.sum_frequency_envelope(sum).powi(2);
            let lo = s_lo.max(sum - i_hi);
            let hi = s_hi.min(sum - i_lo);
            if hi <= lo || a2 == 0.0 {
                return (0.0, 0.0);
            }
            let n = if lobe.is_finite() {
                ((hi - lo) / (lobe / 16.0)).ceil().clamp(MIN_NODES as f64, MAX_NODES as f64) as usize
            } else {
                MIN_NODES
            };
            let h = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for j in 0..n {
                let ws = lo + (j as f64 + 0.5) * h;
                let dk = pair_mismatch(ws, sum - ws, model, gamma_p0);
                acc += sinc(0.5 * dk * length).powi(2);
            }
            (a2 * acc * h, a2 * (hi - lo))
        })
        .fold((0.0, 0.0), |(n0, d0), (n1, d1)| (n0 + n1, d0 + d1));
    Ok(num / den)
}
