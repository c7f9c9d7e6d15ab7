//! Chromatic dispersion of solid-core photonic crystal fibre.
//!
//! [`DispersionModel`] fits the empirical effective index over a wavelength
//! window with a Chebyshev series, so the propagation constant and its first
//! two frequency derivatives come out analytically:
//!
//! ```text
//! beta  = 2 pi n / lambda
//! beta1 = (n - lambda dn/dlambda) / c
//! beta2 = lambda^3 / (2 pi c^2) d2n/dlambda2
//! ```

mod chebyshev;
pub mod pcf;
pub mod sellmeier;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use chebyshev::Chebyshev;
pub use pcf::effective_index;
pub use sellmeier::sellmeier_index;

use crate::error::{Error, Result};
use crate::units::SPEED_OF_LIGHT;

/// Default nonlinear coefficient (W^-1 m^-1); not a measured value.
pub const DEFAULT_GAMMA: f64 = 0.010;

/// Pitch bracket searched by [`calibrate_pitch`].
pub const PITCH_BRACKET_UM: (f64, f64) = (1.0, 6.0);

/// Structural parameters of the fibre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreGeometry {
    /// Hole spacing in micrometres.
    pub pitch_um: f64,
    /// Hole diameter over pitch.
    pub hole_ratio: f64,
    /// Fibre length in metres.
    pub length_m: f64,
    /// Nonlinear coefficient in W^-1 m^-1.
    pub gamma: f64,
}

impl FibreGeometry {
    pub fn new(pitch_um: f64, hole_ratio: f64, length_m: f64, gamma: f64) -> Result<Self> {
        let g = Self {
            pitch_um,
            hole_ratio,
            length_m,
            gamma,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.pitch_um > 0.0 && self.pitch_um.is_finite()) {
            return bad("pitch_um", "must be positive");
        }
        if !(self.hole_ratio > 0.0 && self.hole_ratio < 1.0) {
            return bad("hole_ratio", "must lie in (0, 1)");
        }
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return bad("length_m", "must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", "must be positive");
        }
        Ok(())
    }

    pub fn with_pitch(mut self, pitch_um: f64) -> Self {
        self.pitch_um = pitch_um;
        self
    }

    pub fn with_length(mut self, length_m: f64) -> Self {
        self.length_m = length_m;
        self
    }
}

/// Fit and root-finding settings for [`DispersionModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    pub min_nm: f64,
    pub max_nm: f64,
    pub order: usize,
    pub nodes: usize,
    pub zdw_tolerance_nm: f64,
    pub pitch_tolerance_um: f64,
    /// Step of the coarse sign-change scan preceding bisection.
    pub scan_step_nm: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            min_nm: 700.0,
            max_nm: 1700.0,
            order: 12,
            nodes: 64,
            zdw_tolerance_nm: 1e-3,
            pitch_tolerance_um: 1e-4,
            scan_step_nm: 1.0,
        }
    }
}

impl FitSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.min_nm > 0.0 && self.max_nm > self.min_nm) {
            return bad("dispersion.min_nm", "need 0 < min_nm < max_nm");
        }
        if self.order < 3 || self.nodes <= self.order {
            return bad("dispersion.order", "need order >= 3 and nodes > order");
        }
        if !(self.zdw_tolerance_nm > 0.0 && self.pitch_tolerance_um > 0.0 && self.scan_step_nm > 0.0)
        {
            return bad("dispersion.tolerances", "tolerances and scan step must be positive");
        }
        Ok(())
    }
}

/// Propagation constant and its frequency derivatives as functions of vacuum
/// wavelength in nm.
pub trait Dispersion: Sync {
    fn valid_range(&self) -> (f64, f64);
    /// Propagation constant (rad/m).
    fn beta(&self, wavelength_nm: f64) -> f64;
    /// Group delay per unit length (s/m).
    fn beta1(&self, wavelength_nm: f64) -> f64;
    /// Group-velocity dispersion (s^2/m).
    fn beta2(&self, wavelength_nm: f64) -> f64;

    fn check_range(&self, wavelength_nm: f64) -> Result<()> {
        let (min, max) = self.valid_range();
        if (min..=max).contains(&wavelength_nm) {
            Ok(())
        } else {
            Err(Error::Domain {
                quantity: "wavelength_nm",
                value: wavelength_nm,
                min,
                max,
            })
        }
    }
}

/// Dispersion of one fibre geometry over a fixed wavelength window.
#[derive(Debug, Clone)]
pub struct DispersionModel {
    geometry: FibreGeometry,
    settings: FitSettings,
    n_eff: Chebyshev,
    dn: Chebyshev,
    d2n: Chebyshev,
    zdw_nm: Option<f64>,
}

impl DispersionModel {
    pub fn new(geometry: FibreGeometry, settings: FitSettings) -> Result<Self> {
        geometry.validate()?;
        settings.validate()?;
        pcf::check_validity(settings.min_nm, &geometry)?;
        pcf::check_validity(settings.max_nm, &geometry)?;
        sellmeier_index(settings.min_nm)?;
        sellmeier_index(settings.max_nm)?;
        let n_eff = Chebyshev::fit(
            |l| effective_index(l, &geometry).expect("validated window"),
            settings.min_nm,
            settings.max_nm,
            settings.order,
            settings.nodes,
        );
        let dn = n_eff.derivative();
        let d2n = dn.derivative();
        let mut model = Self {
            geometry,
            settings,
            n_eff,
            dn,
            d2n,
            zdw_nm: None,
        };
        model.zdw_nm = zero_dispersion_wavelength(&model, &settings).ok();
        Ok(model)
    }

    /// Model for the geometry with its pitch replaced by the value that puts
    /// the zero-dispersion wavelength at `target_zdw_nm`.
    pub fn calibrated(geometry: FibreGeometry, target_zdw_nm: f64, settings: FitSettings) -> Result<Self> {
        let pitch = calibrate_pitch(target_zdw_nm, geometry.hole_ratio, &settings)?;
        Self::new(geometry.with_pitch(pitch), settings)
    }

    pub fn geometry(&self) -> &FibreGeometry {
        &self.geometry
    }

    pub fn settings(&self) -> &FitSettings {
        &self.settings
    }

    /// Zero-dispersion wavelength (nm), if beta2 changes sign in the window.
    pub fn zdw(&self) -> Option<f64> {
        self.zdw_nm
    }

    pub fn n_eff(&self, wavelength_nm: f64) -> f64 {
        self.n_eff.eval(wavelength_nm)
    }

    /// Dispersion parameter D in ps/(nm km).
    pub fn d_parameter(&self, wavelength_nm: f64) -> f64 {
        let l = wavelength_nm * 1e-9;
        -2.0 * PI * SPEED_OF_LIGHT / (l * l) * self.beta2(wavelength_nm) * 1e6
    }

    /// Rows of the dispersion CSV export.
    pub fn curve(&self, n_points: usize) -> Vec<DispersionRow> {
        let (lo, hi) = self.valid_range();
        let n = n_points.max(2);
        (0..n)
            .map(|k| {
                let l = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                DispersionRow {
                    wavelength_nm: l,
                    n_eff: self.n_eff(l),
                    beta_rad_per_m: self.beta(l),
                    beta1_s_per_m: self.beta1(l),
                    beta2_s2_per_m: self.beta2(l),
                    d_ps_per_nm_km: self.d_parameter(l),
                }
            })
            .collect()
    }
}

impl Dispersion for DispersionModel {
    fn valid_range(&self) -> (f64, f64) {
        (self.settings.min_nm, self.settings.max_nm)
    }

    fn beta(&self, wavelength_nm: f64) -> f64 {
        2.0 * PI * self.n_eff.eval(wavelength_nm) / (wavelength_nm * 1e-9)
    }

    fn beta1(&self, wavelength_nm: f64) -> f64 {
        (self.n_eff.eval(wavelength_nm) - wavelength_nm * self.dn.eval(wavelength_nm)) / SPEED_OF_LIGHT
    }

    fn beta2(&self, wavelength_nm: f64) -> f64 {
        let l = wavelength_nm * 1e-9;
        // d2n is per nm^2
        l.powi(3) / (2.0 * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * self.d2n.eval(wavelength_nm) * 1e18
    }
}

/// One row of the dispersion curve export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRow {
    pub wavelength_nm: f64,
    pub n_eff: f64,
    pub beta_rad_per_m: f64,
    pub beta1_s_per_m: f64,
    pub beta2_s2_per_m: f64,
    pub d_ps_per_nm_km: f64,
}

impl DispersionRow {
    pub const HEADER: [&'static str; 6] = [
        "wavelength_nm",
        "n_eff",
        "beta_rad_per_m",
        "beta1_s_per_m",
        "beta2_s2_per_m",
        "D_ps_per_nm_km",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.wavelength_nm,
            self.n_eff,
            self.beta_rad_per_m,
            self.beta1_s_per_m,
            self.beta2_s2_per_m,
            self.d_ps_per_nm_km,
        ]
    }
}

/// Bisect `f` on `[a, b]` given a sign change, until the bracket is below `tol`.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Lowest root of beta2 in the model window: coarse scan, then bisection to
/// `settings.zdw_tolerance_nm`.
pub fn zero_dispersion_wavelength<D: Dispersion + ?Sized>(model: &D, settings: &FitSettings) -> Result<f64> {
    let (lo, hi) = model.valid_range();
    let steps = ((hi - lo) / settings.scan_step_nm).ceil().max(1.0) as usize;
    let at = |k: usize| (lo + (hi - lo) * k as f64 / steps as f64).min(hi);
    let mut prev = model.beta2(at(0));
    for k in 1..=steps {
        let l = at(k);
        let cur = model.beta2(l);
        if prev == 0.0 {
            return Ok(at(k - 1));
        }
        if (prev < 0.0) != (cur < 0.0) {
            return Ok(bisect(|x| model.beta2(x), at(k - 1), l, settings.zdw_tolerance_nm));
        }
        prev = cur;
    }
    Err(Error::NoZeroDispersion { min_nm: lo, max_nm: hi })
}

/// Pitch (um) at which the empirical model's ZDW equals `target_zdw_nm` for
/// the given hole ratio. A coarse scan over [`PITCH_BRACKET_UM`] locates
/// adjacent pitches whose ZDWs bracket the target; bisection refines it.
pub fn calibrate_pitch(target_zdw_nm: f64, hole_ratio: f64, settings: &FitSettings) -> Result<f64> {
    const SCAN_STEP_UM: f64 = 0.25;
    let (p_lo, p_hi) = PITCH_BRACKET_UM;
    let zdw_at = |pitch: f64| -> Option<f64> {
        let g = FibreGeometry::new(pitch, hole_ratio, 1.0, DEFAULT_GAMMA).ok()?;
        DispersionModel::new(g, *settings).ok()?.zdw()
    };
    let fail = |detail: String| Error::CalibrationFailure {
        target_nm: target_zdw_nm,
        pitch_lo_um: p_lo,
        pitch_hi_um: p_hi,
        detail,
    };
    let steps = ((p_hi - p_lo) / SCAN_STEP_UM).round() as usize;
    let samples: Vec<(f64, Option<f64>)> = (0..=steps)
        .map(|k| {
            let p = p_lo + (p_hi - p_lo) * k as f64 / steps as f64;
            (p, zdw_at(p))
        })
        .collect();
    let bracket = samples.windows(2).find_map(|w| match (w[0], w[1]) {
        ((a, Some(za)), (b, Some(zb))) if (za - target_zdw_nm) * (zb - target_zdw_nm) <= 0.0 => Some((a, b)),
        _ => None,
    });
    let Some((a, b)) = bracket else {
        let zs: Vec<f64> = samples.iter().filter_map(|s| s.1).collect();
        let detail = if zs.is_empty() {
            "no pitch in the bracket has a zero-dispersion wavelength in the model window".to_string()
        } else {
            let lo = zs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            format!("reachable ZDW range [{lo:.1}, {hi:.1}] nm does not contain the target")
        };
        return Err(fail(detail));
    };
    let mut missing = false;
    let pitch = bisect(
        |p| match zdw_at(p) {
            Some(z) => z - target_zdw_nm,
            None => {
                missing = true;
                f64::NAN
            }
        },
        a,
        b,
        settings.pitch_tolerance_um,
    );
    if missing {
        return Err(fail("ZDW left the model window inside the bracket".into()));
    }
    Ok(pitch)
}

/// Distance over which a pulse of `duration_s` at `pump_nm` and one at
/// `other_nm` separate by one duration.
pub fn walkoff_length<D: Dispersion + ?Sized>(
    duration_s: f64,
    pump_nm: f64,
    other_nm: f64,
    model: &D,
) -> Result<f64> {
    model.check_range(pump_nm)?;
    model.check_range(other_nm)?;
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration_s",
            reason: "must be positive".into(),
        });
    }
    let mismatch = (model.beta1(other_nm) - model.beta1(pump_nm)).abs();
    if pump_nm == other_nm || mismatch == 0.0 {
        return Err(Error::DegenerateWavelengths { wavelength_nm: pump_nm });
    }
    Ok(duration_s / mismatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::omega_from_nm;

    fn paper_model() -> DispersionModel {
        let g = FibreGeometry::new(3.0, 0.4, 0.21, DEFAULT_GAMMA).unwrap();
        DispersionModel::new(g, FitSettings::default()).unwrap()
    }

    /// beta2 = a (lambda - root), beta1/beta unused by the root finder.
    struct Synthetic {
        root: Option<f64>,
    }

    impl Dispersion for Synthetic {
        fn valid_range(&self) -> (f64, f64) {
            (700.0, 1700.0)
        }
        fn beta(&self, _: f64) -> f64 {
            0.0
        }
        fn beta1(&self, _: f64) -> f64 {
            0.0
        }
        fn beta2(&self, l: f64) -> f64 {
            match self.root {
                Some(r) => 1e-30 * (r * r - l * l),
                None => 1e-27 + 1e-33 * l,
            }
        }
    }

    #[test]
    fn synthetic_root_is_found() {
        let s = FitSettings::default();
        let z = zero_dispersion_wavelength(&Synthetic { root: Some(1100.0) }, &s).unwrap();
        assert!((z - 1100.0).abs() <= s.zdw_tolerance_nm);
    }

    #[test]
    fn all_normal_profile_has_no_zdw() {
        let r = zero_dispersion_wavelength(&Synthetic { root: None }, &FitSettings::default());
        assert!(matches!(r, Err(Error::NoZeroDispersion { .. })));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let m = paper_model();
        for l in [760.0, 900.0, 1029.0, 1200.0, 1515.0] {
            // central differences in omega
            let w = omega_from_nm(l);
            let h = w * 1e-4;
            let nm = |w: f64| crate::units::nm_from_omega(w);
            let fd1 = (m.beta(nm(w + h)) - m.beta(nm(w - h))) / (2.0 * h);
            assert!(((fd1 - m.beta1(l)) / m.beta1(l)).abs() < 1e-4, "beta1 at {l}");
            let fd2 = (m.beta1(nm(w + h)) - m.beta1(nm(w - h))) / (2.0 * h);
            let rel = ((fd2 - m.beta2(l)) / m.beta2(l)).abs();
            // beta2 crosses zero near 1044 nm, compare absolutely there
            assert!(rel < 1e-4 || (fd2 - m.beta2(l)).abs() < 1e-30, "beta2 at {l}: {rel}");
        }
    }

    #[test]
    fn effective_index_decreases_over_window() {
        let m = paper_model();
        let mut prev = f64::INFINITY;
        for k in 0..=200 {
            let l = 700.0 + 5.0 * k as f64;
            let n = m.n_eff(l);
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn beta2_sign_convention() {
        let m = paper_model();
        let z = m.zdw().unwrap();
        assert!(m.beta2(z - 50.0) > 0.0);
        assert!(m.beta2(z + 50.0) < 0.0);
        assert!(m.beta2(z).abs() < 1e-30);
        assert!(m.d_parameter(z + 50.0) > 0.0);
    }

    #[test]
    fn fitted_index_tracks_empirical_relation() {
        let m = paper_model();
        for l in [701.0, 1029.0, 1699.0] {
            let direct = effective_index(l, m.geometry()).unwrap();
            assert!((m.n_eff(l) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn calibration_round_trip() {
        let s = FitSettings::default();
        let m = paper_model();
        let p = calibrate_pitch(m.zdw().unwrap(), 0.4, &s).unwrap();
        assert!((p - 3.0).abs() < s.pitch_tolerance_um, "{p}");
    }

    #[test]
    fn unreachable_zdw_fails_calibration() {
        let r = calibrate_pitch(600.0, 0.4, &FitSettings::default());
        assert!(matches!(r, Err(Error::CalibrationFailure { .. })), "{r:?}");
    }

    #[test]
    fn walkoff_is_linear_in_duration_and_symmetric() {
        let m = paper_model();
        let a = walkoff_length(4.5e-12, 1029.0, 780.0, &m).unwrap();
        let b = walkoff_length(9.0e-12, 1029.0, 780.0, &m).unwrap();
        assert_eq!(b, 2.0 * a);
        let swapped = walkoff_length(4.5e-12, 780.0, 1029.0, &m).unwrap();
        assert_eq!(a, swapped);
        assert!(matches!(
            walkoff_length(4.5e-12, 1029.0, 1029.0, &m),
            Err(Error::DegenerateWavelengths { .. })
        ));
    }

    #[test]
    fn curve_rows_cover_window() {
        let rows = paper_model().curve(11);
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].wavelength_nm, 700.0);
        assert_eq!(rows[10].wavelength_nm, 1700.0);
    }
}
