//! Fused-silica material dispersion.

use crate::error::{Error, Result};

/// Malitson (1965) three-term Sellmeier coefficients for fused silica.
/// `B_i` are dimensionless, `C_i` are resonance wavelengths in micrometres.
pub const SILICA_B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
pub const SILICA_C_UM: [f64; 3] = [0.068_404_3, 0.116_241_4, 9.896_161];

/// Wavelength interval (nm) over which the coefficient set was fitted.
pub const SELLMEIER_RANGE_NM: (f64, f64) = (210.0, 3700.0);

/// Refractive index of fused silica at a vacuum wavelength in nanometres.
pub fn sellmeier_index(wavelength_nm: f64) -> Result<f64> {
    let (min, max) = SELLMEIER_RANGE_NM;
    if !(min..=max).contains(&wavelength_nm) {
        return Err(Error::Domain {
            quantity: "wavelength_nm",
            value: wavelength_nm,
            min,
            max,
        });
    }
    let l2 = (wavelength_nm * 1e-3).powi(2);
    let sum: f64 = SILICA_B
        .iter()
        .zip(SILICA_C_UM)
        .map(|(b, c)| b * l2 / (l2 - c * c))
        .sum();
    Ok((1.0 + sum).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Values below were evaluated by hand from the three-term sum:
    // n^2 - 1 = sum B_i l^2 / (l^2 - C_i^2).
    #[test]
    fn silica_index_at_reference_lines() {
        assert!((sellmeier_index(1060.0).unwrap() - 1.4497).abs() < 5e-4);
        assert!((sellmeier_index(587.6).unwrap() - 1.4585).abs() < 5e-4);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        match sellmeier_index(100.0) {
            Err(Error::Domain { min, max, .. }) => {
                assert_eq!((min, max), SELLMEIER_RANGE_NM);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(sellmeier_index(4000.0).is_err());
    }

    #[test]
    fn normal_material_dispersion() {
        let n800 = sellmeier_index(800.0).unwrap();
        let n1550 = sellmeier_index(1550.0).unwrap();
        assert!(n800 > n1550);
    }
}
