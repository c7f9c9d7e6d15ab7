//! Empirical effective-index relations for solid-core, triangular-lattice
//! index-guiding photonic crystal fibre (Saitoh & Koshiba, Opt. Express 13, 267).
//!
//! The normalised frequency V and cladding decay parameter W are fitted as
//! `A1 + A2 / (1 + A3 exp(A4 x))` in `x = lambda / pitch`, with each `Ai` a
//! four-term power series in the hole ratio `d / pitch`. The effective core
//! radius is `pitch / sqrt(3)`.

use super::sellmeier::sellmeier_index;
use super::FibreGeometry;
use crate::error::{Error, Result};

/// Hole-ratio interval covered by the fitted relations.
pub const HOLE_RATIO_RANGE: (f64, f64) = (0.2, 0.8);
/// Normalised wavelength `lambda / pitch` interval covered by the relations.
pub const LAMBDA_OVER_PITCH_RANGE: (f64, f64) = (0.1, 2.0);

// Rows i = 1..4: [a_i0, a_i1, a_i2, a_i3] and exponents [b_i1, b_i2, b_i3].
const V_A: [[f64; 4]; 4] = [
    [0.54808, 5.00401, -10.43248, 8.22992],
    [0.71041, 9.73491, 47.41496, -437.50962],
    [0.16904, 1.85765, 18.96849, -42.4318],
    [-1.52736, 1.06745, 1.93229, 3.89],
];
const V_B: [[f64; 3]; 4] = [
    [5.0, 7.0, 9.0],
    [1.8, 7.32, 22.8],
    [1.7, 10.0, 14.0],
    [-0.84, 1.02, 13.4],
];
const W_C: [[f64; 4]; 4] = [
    [-0.0973, -16.70566, 67.13845, -50.25518],
    [0.53193, 6.70858, 52.04855, -540.66947],
    [0.24876, 2.72423, 13.28649, -36.80372],
    [5.29801, 0.05142, -5.18302, 2.7641],
];
const W_D: [[f64; 3]; 4] = [
    [7.0, 9.0, 10.0],
    [1.49, 6.58, 24.8],
    [3.85, 10.0, 15.0],
    [-2.0, 0.41, 6.0],
];

fn series(coeffs: &[[f64; 4]; 4], exps: &[[f64; 3]; 4], ratio: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, (c, e)) in out.iter_mut().zip(coeffs.iter().zip(exps)) {
        *o = c[0] + c[1] * ratio.powf(e[0]) + c[2] * ratio.powf(e[1]) + c[3] * ratio.powf(e[2]);
    }
    out
}

fn logistic(p: &[f64; 4], x: f64) -> f64 {
    p[0] + p[1] / (1.0 + p[2] * (p[3] * x).exp())
}

/// Normalised frequency and decay parameter `(V, W)` at `lambda / pitch`.
pub fn v_w_parameters(lambda_over_pitch: f64, hole_ratio: f64) -> (f64, f64) {
    let a = series(&V_A, &V_B, hole_ratio);
    let b = series(&W_C, &W_D, hole_ratio);
    (logistic(&a, lambda_over_pitch), logistic(&b, lambda_over_pitch))
}

/// Check that `geometry` at `wavelength_nm` lies inside the fitted range.
pub fn check_validity(wavelength_nm: f64, geometry: &FibreGeometry) -> Result<()> {
    let (rmin, rmax) = HOLE_RATIO_RANGE;
    if !(rmin..=rmax).contains(&geometry.hole_ratio) {
        return Err(Error::ModelValidity {
            parameter: "hole_ratio",
            value: geometry.hole_ratio,
            min: rmin,
            max: rmax,
        });
    }
    let x = wavelength_nm * 1e-3 / geometry.pitch_um;
    let (xmin, xmax) = LAMBDA_OVER_PITCH_RANGE;
    if !(xmin..=xmax).contains(&x) {
        return Err(Error::ModelValidity {
            parameter: "wavelength/pitch",
            value: x,
            min: xmin,
            max: xmax,
        });
    }
    Ok(())
}

/// Effective index of the fundamental mode.
pub fn effective_index(wavelength_nm: f64, geometry: &FibreGeometry) -> Result<f64> {
    check_validity(wavelength_nm, geometry)?;
    let n_core = sellmeier_index(wavelength_nm)?;
    let lambda_um = wavelength_nm * 1e-3;
    let (v, w) = v_w_parameters(lambda_um / geometry.pitch_um, geometry.hole_ratio);
    let a_eff = geometry.pitch_um / 3f64.sqrt();
    let k_a = 2.0 * std::f64::consts::PI * a_eff / lambda_um;
    Ok((n_core * n_core - (v * v - w * w) / (k_a * k_a)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_geometry() -> FibreGeometry {
        FibreGeometry::new(3.0, 0.4, 0.21, 0.01).unwrap()
    }

    #[test]
    fn index_sits_below_silica() {
        let n = effective_index(1029.0, &paper_geometry()).unwrap();
        assert!(n > 1.40 && n < 1.450, "n_eff = {n}");
        assert!(n < sellmeier_index(1029.0).unwrap());
    }

    // Hand evaluation of the series at d/pitch = 0.4, lambda/pitch = 0.343:
    // V ~ 1.936, W ~ 1.305, endlessly single-mode (V < 2.405).
    #[test]
    fn v_and_w_match_hand_evaluation() {
        let (v, w) = v_w_parameters(1.029 / 3.0, 0.4);
        assert!((v - 1.936).abs() < 2e-3, "V = {v}");
        assert!((w - 1.305).abs() < 2e-3, "W = {w}");
    }

    #[test]
    fn hole_ratio_outside_fit_is_rejected() {
        let g = FibreGeometry::new(3.0, 0.9, 1.0, 0.01).unwrap();
        match effective_index(1029.0, &g) {
            Err(Error::ModelValidity { parameter, value, .. }) => {
                assert_eq!(parameter, "hole_ratio");
                assert_eq!(value, 0.9);
            }
            other => panic!("expected validity error, got {other:?}"),
        }
    }

    #[test]
    fn shorter_wavelengths_are_more_confined() {
        let g = paper_geometry();
        assert!(effective_index(800.0, &g).unwrap() > effective_index(1550.0, &g).unwrap());
    }
}
