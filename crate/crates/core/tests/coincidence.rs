use pcf_fwm::coincidence::{
    calibrate_source, car_vs_length, expected_rates, simulate_point, CalibrationTargets, CoincidenceHistogram,
    DetectionChain, PreparedSource, SourcePoint,
};
use pcf_fwm::config::ExperimentConfig;

fn paper_source() -> PreparedSource {
    PreparedSource::new(&ExperimentConfig::paper_default()).unwrap()
}

/// Detection chain with dead time, re-arm limit and dark counts switched off,
/// so every rate is linear in the transmissions.
fn linear_chain() -> DetectionChain {
    DetectionChain {
        signal_dark_rate: 0.0,
        idler_dark_prob_per_gate: 0.0,
        signal_dead_time: 0.0,
        max_gate_rate: 1e12,
        ..DetectionChain::paper_default()
    }
}

fn within_3_sigma(a: f64, b: f64, var: f64) -> bool {
    (a - b).abs() <= 3.0 * var.sqrt()
}

#[test]
fn halving_signal_transmission_halves_singles_and_coincidences() {
    let p = paper_source();
    let (kappa, raman) = p.calibration().unwrap();
    let source = p.source_point(1.15, 0.15, kappa, raman).unwrap();
    let full = linear_chain();
    let half = DetectionChain {
        signal_transmission: full.signal_transmission / 2.0,
        ..full.clone()
    };
    let n = 50_000_000;
    let a = simulate_point(&source, &full, 7, n).unwrap();
    let b = simulate_point(&source, &half, 8, n).unwrap();

    let (sa, sb) = (a.diagnostics.signal_clicks as f64, b.diagnostics.signal_clicks as f64);
    assert!(within_3_sigma(sb, sa / 2.0, sb + sa / 4.0), "singles {sa} -> {sb}");

    let (ca, cb) = (a.counts[a.peak_index] as f64, b.counts[b.peak_index] as f64);
    assert!(within_3_sigma(cb, ca / 2.0, cb + ca / 4.0), "coincidences {ca} -> {cb}");

    // accidental probability per trigger does not depend on the signal arm
    let acc = |h: &CoincidenceHistogram| {
        let s = h.summary();
        (s.background, s.background_bins as f64, h.total_trigger_count as f64)
    };
    let ((bga, na, ta), (bgb, nb, tb)) = (acc(&a), acc(&b));
    let (pa, pb) = (bga / ta, bgb / tb);
    let var = pa / (ta * na) + pb / (tb * nb);
    assert!(within_3_sigma(pa, pb, var), "accidentals per trigger {pa} vs {pb}");
}

#[test]
fn simulated_rates_match_closed_form_in_linear_regime() {
    let p = paper_source();
    let (kappa, raman) = p.calibration().unwrap();
    let source = p.source_point(0.6, 0.1, kappa, raman).unwrap();
    let chain = linear_chain();
    let h = simulate_point(&source, &chain, 3, 50_000_000).unwrap();
    let e = expected_rates(&source, &chain).unwrap();
    let trig = h.total_trigger_count as f64;
    let t_exp = e.trigger_rate * h.elapsed_simulated_time;
    assert!(within_3_sigma(trig, t_exp, t_exp), "triggers {trig} vs {t_exp}");
    let c = h.counts[h.peak_index] as f64;
    let c_exp = e.coincidence_rate * h.elapsed_simulated_time;
    assert!(within_3_sigma(c, c_exp, c_exp), "coincidences {c} vs {c_exp}");
}

#[test]
fn armed_gate_rate_never_exceeds_the_limit() {
    let p = paper_source();
    let (kappa, raman) = p.calibration().unwrap();
    let source = p.source_point(3.0, 0.15, kappa, raman).unwrap();
    let chain = DetectionChain {
        max_gate_rate: 2e5,
        ..p.chain.clone()
    };
    let h = simulate_point(&source, &chain, 11, 20_000_000).unwrap();
    assert!(h.trigger_rate() <= chain.max_gate_rate);
    assert!(h.diagnostics.dropped_triggers > 0);
    assert!(h.counts.iter().all(|&c| c <= h.total_trigger_count));
}

fn car_with_sigma(h: &CoincidenceHistogram) -> (f64, f64) {
    let s = h.summary();
    let peak = h.counts[h.peak_index] as f64;
    let rel = (1.0 / peak + 1.0 / (s.background * s.background_bins as f64)).sqrt();
    (h.car, h.car * rel)
}

#[test]
fn car_falls_with_length_and_with_power() {
    let p = paper_source();
    let seed = 5;
    let lengths = [3.0, 1.15, 0.3];
    let powers = [0.05, 0.1, 0.15];
    let grid: Vec<Vec<(f64, f64)>> = powers
        .iter()
        .map(|&w| {
            lengths
                .iter()
                .map(|&l| car_with_sigma(&p.simulate_at(l, w, seed, None).unwrap()))
                .collect()
        })
        .collect();
    for row in &grid {
        for k in 1..row.len() {
            let ((long, sl), (short, ss)) = (row[k - 1], row[k]);
            assert!(long <= short + (sl * sl + ss * ss).sqrt(), "CAR rises with length: {row:?}");
        }
    }
    for j in 0..lengths.len() {
        for i in 1..powers.len() {
            let ((low, sl), (high, sh)) = (grid[i - 1][j], grid[i][j]);
            assert!(high <= low + (sl * sl + sh * sh).sqrt(), "CAR rises with power at {} m", lengths[j]);
        }
    }
}

#[test]
fn sweep_marks_failed_cells_as_gaps() {
    let config = ExperimentConfig::paper_default();
    let rows = car_vs_length(&config, &[0.3, -1.0], &[50.0], 1).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].error.is_none() && rows[0].car.is_some());
    assert!(rows[1].error.is_some() && rows[1].car.is_none() && rows[1].n_pulses.is_none());
}

#[test]
fn calibration_is_seed_deterministic_and_needs_raman() {
    let config = ExperimentConfig::paper_default();
    let targets = CalibrationTargets::paper();
    let a = calibrate_source(&config, &targets, 42, false).unwrap();
    let b = calibrate_source(&config, &targets, 42, false).unwrap();
    assert_eq!(a, b);
    assert!(a.residual < 0.05);
    assert!((a.coincidence_rate / targets.coincidence_rate - 1.0).abs() < 0.05);
    assert!((a.accidental_rate / targets.accidental_rate - 1.0).abs() < 0.05);

    let free = calibrate_source(&config, &targets, 42, true).unwrap();
    assert!(free.raman_fixed_at_zero && free.raman_coefficient == 0.0);
    // four-wave mixing alone cannot supply the observed accidentals
    assert!(free.accidental_rate < 0.5 * targets.accidental_rate);
}

#[test]
fn source_point_rejects_unphysical_inputs() {
    let p = paper_source();
    assert!(p.source_point(1.15, 0.15, -1.0, 0.0).is_err());
    assert!(p.source_point(1.15, 0.15, 0.5, -1e-3).is_err());
    let bad = SourcePoint {
        lam: -0.1,
        raman_mean: 0.0,
        repetition_rate_hz: 1.5e9,
    };
    assert!(simulate_point(&bad, &p.chain, 1, 10_000_000).is_err());
}
