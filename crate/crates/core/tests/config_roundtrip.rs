use pcf_fwm::config::{parse_config, parse_str, CalibrationSection, ExperimentConfig, LengthScaling};
use pcf_fwm::ConfigError;
use pcf_fwm::PulseShape;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = PulseShape> {
    prop_oneof![
        Just(PulseShape::Gaussian),
        Just(PulseShape::Sech2),
        Just(PulseShape::Rectangular)
    ]
}

fn calibration() -> impl Strategy<Value = Option<CalibrationSection>> {
    proptest::option::of((1e-3..10.0f64, 0.0..1e-2f64, proptest::option::of(0..=pcf_fwm::config::MAX_SEED)).prop_map(
        |(kappa, raman_coefficient, seed)| CalibrationSection {
            kappa,
            raman_coefficient,
            seed,
        },
    ))
}

prop_compose! {
    fn config()(
        pitch in 1.0..6.0f64,
        hole in 0.2..=0.8f64,
        length in 0.01..20.0f64,
        gamma in 1e-3..1.0f64,
        zdw in proptest::option::of(800.0..1600.0f64),
        centre in 900.0..1100.0f64,
        fwhm in 0.1..20.0f64,
        shape in shape(),
        power in 0.1..500.0f64,
        t in (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
        dark in (0.0..1e4f64, 0.0..1e-3f64),
        gate in (1.0..5.0f64, 0.0..0.5f64),
        delay in 0.0..20.0f64,
        linear in any::<bool>(),
        cal in calibration(),
    ) -> ExperimentConfig {
        let mut c = ExperimentConfig::paper_default();
        c.fibre.pitch_um = pitch;
        c.fibre.hole_ratio = hole;
        c.fibre.length_m = length;
        c.fibre.gamma_per_w_m = gamma;
        c.fibre.target_zdw_nm = zdw;
        c.pump.center_wavelength_nm = centre;
        c.pump.duration_fwhm_ps = fwhm;
        c.pump.shape = shape;
        c.pump.average_power_mw = power;
        c.detection.signal_transmission = t.0;
        c.detection.idler_transmission = t.1;
        c.detection.signal_det_efficiency = t.2;
        c.detection.idler_det_efficiency = t.3;
        c.detection.signal_dark_rate_hz = dark.0;
        c.detection.idler_dark_prob_per_gate = dark.1;
        c.detection.gate_width_ns = gate.0;
        c.detection.gate_edge_ns = gate.1 * gate.0;
        c.detection.trigger_delay_ns = delay;
        c.source.length_scaling = if linear { LengthScaling::Linear } else { LengthScaling::Phasematched };
        c.calibration = cal;
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialised_config_parses_back_identically(c in config()) {
        prop_assert!(c.validate().is_ok());
        let text = c.to_toml();
        prop_assert_eq!(parse_str(&text).unwrap(), c.clone());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, &text).unwrap();
        prop_assert_eq!(parse_config(&path).unwrap(), c);
    }

    #[test]
    fn hole_ratio_outside_model_range_is_named(h in prop_oneof![0.0..0.2f64, 0.8001..2.0f64]) {
        let mut c = ExperimentConfig::paper_default();
        c.fibre.hole_ratio = h;
        match parse_str(&c.to_toml()) {
            Err(ConfigError::Invariant { key, .. }) => prop_assert_eq!(key, "fibre.hole_ratio"),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn transmissions_outside_unit_interval_are_rejected(t in prop_oneof![-1.0..-1e-9f64, 1.000001..5.0f64]) {
        let mut c = ExperimentConfig::paper_default();
        c.detection.idler_transmission = t;
        match parse_str(&c.to_toml()) {
            Err(ConfigError::Invariant { key, .. }) => prop_assert_eq!(key, "detection.idler_transmission"),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}
