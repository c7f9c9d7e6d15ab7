//! Degenerate-pump, co-polarised four-wave-mixing phasematching.
//!
//! The idler is always fixed by energy conservation, so the mismatch
//! `dk = 2 k_p - k_s - k_i - 2 gamma P0` is a function of pump and signal
//! wavelength only. Roots are bracketed by a coarse scan in signal wavelength
//! and polished by bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{bisect, Dispersion, FibreGeometry};
use crate::error::{Error, Result};
use crate::pump::PumpPulse;
use crate::units::idler_nm;

/// A phasematched (or scanned) signal/idler pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchPoint {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub delta_k: f64,
}

impl PhasematchPoint {
    pub const HEADER: [&'static str; 4] = ["pump_nm", "signal_nm", "idler_nm", "delta_k_rad_per_m"];

    pub fn values(&self) -> [f64; 4] {
        [self.pump_nm, self.signal_nm, self.idler_nm, self.delta_k]
    }

    /// Relative residual of `2/pump = 1/signal + 1/idler`.
    pub fn energy_residual(&self) -> f64 {
        let lhs = 2.0 / self.pump_nm;
        (lhs - 1.0 / self.signal_nm - 1.0 / self.idler_nm).abs() / lhs
    }
}

/// Search window and tolerances for the root finder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Shortest signal wavelength scanned (nm).
    pub min_signal_nm: f64,
    /// Signal wavelengths closer than this to the pump are not scanned (nm).
    pub pump_guard_nm: f64,
    pub scan_step_nm: f64,
    /// Bisection stops once |dk| falls below this (rad/m).
    pub residual_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            min_signal_nm: 650.0,
            pump_guard_nm: 5.0,
            scan_step_nm: 1.0,
            residual_tolerance: 1e-7,
        }
    }
}

/// Phase mismatch (rad/m) for a degenerate pump at `pump_nm` and signal at
/// `signal_nm`, with the idler from energy conservation.
pub fn phase_mismatch<D: Dispersion + ?Sized>(
    pump_nm: f64,
    signal_nm: f64,
    model: &D,
    gamma: f64,
    peak_power: f64,
) -> Result<f64> {
    let idler = idler_nm(pump_nm, signal_nm);
    model.check_range(pump_nm)?;
    model.check_range(signal_nm)?;
    if !(idler > 0.0) {
        return Err(Error::Domain {
            quantity: "idler_nm",
            value: idler,
            min: model.valid_range().0,
            max: model.valid_range().1,
        });
    }
    model.check_range(idler)?;
    Ok(mismatch_unchecked(pump_nm, signal_nm, idler, model, gamma * peak_power))
}

#[inline]
pub(crate) fn mismatch_unchecked<D: Dispersion + ?Sized>(
    pump_nm: f64,
    signal_nm: f64,
    idler_nm: f64,
    model: &D,
    gamma_p0: f64,
) -> f64 {
    2.0 * model.beta(pump_nm) - model.beta(signal_nm) - model.beta(idler_nm) - 2.0 * gamma_p0
}

/// Every root found in the scan, split into the widely-detuned solution and
/// any near-degenerate (nonlinear-phase) roots.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasematchBranches {
    pub widely_detuned: Option<PhasematchPoint>,
    pub near_degenerate: Vec<PhasematchPoint>,
    /// Scanned signal interval (nm).
    pub scan: (f64, f64),
}

fn scan_window<D: Dispersion + ?Sized>(pump_nm: f64, model: &D, s: &SolverSettings) -> (f64, f64) {
    let (min, max) = model.valid_range();
    // the idler must stay below the window maximum
    let idler_bound = 1.0 / (2.0 / pump_nm - 1.0 / max);
    let lo = s.min_signal_nm.max(min).max(idler_bound);
    (lo, pump_nm - s.pump_guard_nm)
}

fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    if hi <= lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let at = |k: usize| (lo + (hi - lo) * k as f64 / n as f64).min(hi);
    let mut out = Vec::new();
    let mut prev = f(at(0));
    for k in 1..=n {
        let cur = f(at(k));
        if (prev < 0.0) != (cur < 0.0) {
            out.push((at(k - 1), at(k)));
        }
        prev = cur;
    }
    out
}

fn polish<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut x = bisect(&f, a, b, 1e-9);
    // shrink further if the residual is still above tolerance
    let (mut a, mut b) = (a, b);
    for _ in 0..60 {
        if f(x).abs() < tol {
            break;
        }
        if (f(a) < 0.0) == (f(x) < 0.0) {
            a = x;
        } else {
            b = x;
        }
        x = 0.5 * (a + b);
    }
    x
}

/// Locate all phasematched signal wavelengths for a pump at `pump_nm`.
///
/// A root belongs to the widely-detuned branch when the linear mismatch
/// (nonlinear term removed) also changes sign in the window; the root
/// farthest from the pump is reported as that branch. Remaining roots exist
/// only because of the nonlinear phase and are listed as near-degenerate.
pub fn find_branches<D: Dispersion + ?Sized>(
    pump_nm: f64,
    model: &D,
    gamma_p0: f64,
    settings: &SolverSettings,
) -> Result<PhasematchBranches> {
    model.check_range(pump_nm)?;
    let (lo, hi) = scan_window(pump_nm, model, settings);
    let full = |s: f64| mismatch_unchecked(pump_nm, s, idler_nm(pump_nm, s), model, gamma_p0);
    let linear = |s: f64| mismatch_unchecked(pump_nm, s, idler_nm(pump_nm, s), model, 0.0);

    let point = |s: f64| PhasematchPoint {
        pump_nm,
        signal_nm: s,
        idler_nm: idler_nm(pump_nm, s),
        delta_k: full(s),
    };
    let mut roots: Vec<PhasematchPoint> = sign_changes(full, lo, hi, settings.scan_step_nm)
        .into_iter()
        .map(|(a, b)| point(polish(full, a, b, settings.residual_tolerance)))
        .collect();
    let has_linear_root = !sign_changes(linear, lo, hi, settings.scan_step_nm).is_empty();

    let widely_detuned = if has_linear_root && !roots.is_empty() {
        // roots are ordered by increasing signal wavelength: first is the most detuned
        Some(roots.remove(0))
    } else {
        None
    };
    Ok(PhasematchBranches {
        widely_detuned,
        near_degenerate: roots,
        scan: (lo, hi),
    })
}

/// Widely-detuned phasematched pair for a pump at `pump_nm` and nonlinear
/// phase rate `gamma_p0` (rad/m).
pub fn solve_at<D: Dispersion + ?Sized>(
    pump_nm: f64,
    model: &D,
    gamma_p0: f64,
    settings: &SolverSettings,
) -> Result<PhasematchPoint> {
    let b = find_branches(pump_nm, model, gamma_p0, settings)?;
    b.widely_detuned.ok_or(Error::NoPhasematch {
        pump_nm,
        scan_lo_nm: b.scan.0,
        scan_hi_nm: b.scan.1,
        near_degenerate: b.near_degenerate.len(),
    })
}

/// Widely-detuned phasematched pair for the pump pulse in the given fibre.
pub fn solve_signal_idler<D: Dispersion + ?Sized>(
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
) -> Result<PhasematchPoint> {
    solve_at(
        pump.center_wavelength_nm,
        model,
        geometry.gamma * pump.peak_power(),
        &SolverSettings::default(),
    )
}

/// One entry of a tuning curve; `point` is `None` where no widely-detuned
/// solution exists.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningEntry {
    pub pump_nm: f64,
    pub point: Option<PhasematchPoint>,
}

/// Phasematched pairs for `n_points` pump wavelengths evenly covering
/// `pump_range` (inclusive). Points are solved in parallel and returned in
/// pump order.
pub fn tuning_curve<D: Dispersion + ?Sized>(
    pump_range: (f64, f64),
    n_points: usize,
    pump: &PumpPulse,
    geometry: &FibreGeometry,
    model: &D,
) -> Vec<TuningEntry> {
    let settings = SolverSettings::default();
    let gamma_p0 = geometry.gamma * pump.peak_power();
    let n = n_points.max(1);
    (0..n)
        .into_par_iter()
        .map(|k| {
            let pump_nm = if n == 1 {
                pump_range.0
            } else {
                pump_range.0 + (pump_range.1 - pump_range.0) * k as f64 / (n - 1) as f64
            };
            TuningEntry {
                pump_nm,
                point: solve_at(pump_nm, model, gamma_p0, &settings).ok(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{DispersionModel, FitSettings, DEFAULT_GAMMA};

    fn model() -> DispersionModel {
        let g = FibreGeometry::new(3.0, 0.4, 0.21, DEFAULT_GAMMA).unwrap();
        DispersionModel::calibrated(g, 1058.0, FitSettings::default()).unwrap()
    }

    #[test]
    fn degenerate_point_leaves_only_nonlinear_term() {
        let m = model();
        let dk = phase_mismatch(1029.0, 1029.0, &m, 0.01, 140.0).unwrap();
        assert!((dk + 2.8).abs() < 1e-9, "{dk}");
    }

    #[test]
    fn out_of_window_is_domain_error() {
        let m = model();
        assert!(matches!(
            phase_mismatch(1029.0, 600.0, &m, 0.01, 140.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn mismatch_is_symmetric_under_label_swap() {
        let m = model();
        let s = 780.0;
        let i = idler_nm(1029.0, s);
        let a = mismatch_unchecked(1029.0, s, i, &m, 1.4);
        let b = mismatch_unchecked(1029.0, i, s, &m, 1.4);
        assert!((a - b).abs() <= 1e-14 * m.beta(1029.0), "{a} vs {b}");
    }

    #[test]
    fn root_residual_and_energy_conservation() {
        let m = model();
        let p = solve_at(1029.0, &m, 1.4, &SolverSettings::default()).unwrap();
        assert!(p.delta_k.abs() < 1e-6, "{}", p.delta_k);
        assert!(p.energy_residual() < 1e-12);
        assert!(p.signal_nm < 1029.0 && p.idler_nm > 1029.0);
    }

    #[test]
    fn vanishing_power_recovers_linear_root() {
        let m = model();
        let s = SolverSettings::default();
        let lin = solve_at(1029.0, &m, 0.0, &s).unwrap();
        let mut prev = lin.signal_nm;
        for gp in [1e-6, 1e-3, 0.1, 1.0, 3.0] {
            let p = solve_at(1029.0, &m, gp, &s).unwrap();
            // continuous, small shift
            assert!((p.signal_nm - prev).abs() < 1.0);
            prev = p.signal_nm;
        }
        let tiny = solve_at(1029.0, &m, 1e-9, &s).unwrap();
        assert!((tiny.signal_nm - lin.signal_nm).abs() < 1e-6);
    }

    #[test]
    fn mismatch_minimum_sits_at_solution() {
        let m = model();
        let p = solve_at(1029.0, &m, 1.4, &SolverSettings::default()).unwrap();
        let dk = |s: f64| phase_mismatch(1029.0, s, &m, 0.01, 140.0).unwrap().abs();
        assert!(dk(p.signal_nm) < dk(p.signal_nm - 20.0));
        assert!(dk(p.signal_nm) < dk(p.signal_nm + 20.0));
    }

    #[test]
    fn anomalous_pump_has_no_wide_branch() {
        let m = model();
        let s = SolverSettings::default();
        let b = find_branches(1100.0, &m, 1.4, &s).unwrap();
        assert!(b.widely_detuned.is_none());
        assert!(matches!(solve_at(1100.0, &m, 1.4, &s), Err(Error::NoPhasematch { .. })));
    }

    #[test]
    fn tuning_curve_is_ordered_and_monotone() {
        let m = model();
        let pump = PumpPulse::paper_default();
        let curve = tuning_curve((1022.5, 1031.5), 10, &pump, m.geometry(), &m);
        assert_eq!(curve.len(), 10);
        let pts: Vec<_> = curve.iter().map(|e| e.point.expect("solution")).collect();
        for w in pts.windows(2) {
            assert!(w[1].pump_nm > w[0].pump_nm);
            assert!(w[1].signal_nm > w[0].signal_nm);
        }
        for p in pts {
            assert!(p.energy_residual() < 1e-12);
        }
    }
}
