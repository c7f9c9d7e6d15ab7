use serde::{Deserialize, Serialize};

use super::{gate_efficiency, summarise_peak, CoincidenceHistogram, DetectionChain, SourcePoint};
use crate::error::{Error, Result};

/// Measured width of the coincidence peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWindow {
    pub width: f64,
    pub pump_periods: u32,
}

/// FWHM of the coincidence peak above background and the number of pump
/// periods it spans. The peak must exceed the background by 5 sigma.
pub fn effective_window(h: &CoincidenceHistogram) -> Result<EffectiveWindow> {
    let s = summarise_peak(&h.delay_axis, &h.counts, h.gate_width);
    let peak = h.counts.iter().copied().max().unwrap_or(0);
    let bg = if s.background.is_finite() { s.background } else { 0.0 };
    if (peak as f64) - bg < 5.0 * bg.max(1.0).sqrt() {
        return Err(Error::NoPeak { peak, background: bg });
    }
    let (a, b) = s.half_max.ok_or(Error::NoPeak { peak, background: bg })?;
    let width = b - a;
    let period = 1.0 / h.repetition_rate_hz;
    Ok(EffectiveWindow {
        width,
        pump_periods: (width / period - 1e-9).ceil().max(1.0) as u32,
    })
}

/// Source rates implied by measured coincidence and accidental rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRate {
    pub pairs_per_s: f64,
    pub brightness_per_mw: f64,
}

/// `(coinc - accidental) / (eta_s eta_i)` with `eta = transmission * efficiency`.
pub fn infer_generated_rate(
    coincidence_rate: f64,
    accidental_rate: f64,
    chain: &DetectionChain,
    average_power_w: f64,
) -> Result<GeneratedRate> {
    if coincidence_rate < accidental_rate {
        return Err(Error::InvalidParameter {
            name: "coincidence_rate",
            reason: "must not be below the accidental rate".into(),
        });
    }
    let eta = chain.signal_efficiency() * chain.idler_efficiency();
    if eta <= 0.0 {
        return Err(Error::ZeroEfficiency("detection efficiency product is zero"));
    }
    if average_power_w <= 0.0 {
        return Err(Error::ZeroEfficiency("average pump power is zero"));
    }
    let pairs_per_s = (coincidence_rate - accidental_rate) / eta;
    Ok(GeneratedRate {
        pairs_per_s,
        brightness_per_mw: pairs_per_s / (average_power_w * 1e3),
    })
}

/// Least-squares fit of `CAR = a / L` through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseLengthFit {
    pub coefficient: f64,
    /// `sqrt(mean(((CAR - a/L) / CAR)^2))`.
    pub relative_rms: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_inverse_length(points: &[(f64, f64)]) -> Result<InverseLengthFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(l, c)| *l > 0.0 && c.is_finite() && *c > 0.0)
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} finite (L, CAR) points, got {}",
            usable.len()
        )));
    }
    let sxx: f64 = usable.iter().map(|(l, _)| 1.0 / (l * l)).sum();
    let sxy: f64 = usable.iter().map(|(l, c)| c / l).sum();
    let a = sxy / sxx;
    let ms = usable.iter().map(|(l, c)| ((c - a / l) / c).powi(2)).sum::<f64>() / usable.len() as f64;
    Ok(InverseLengthFit {
        coefficient: a,
        relative_rms: ms.sqrt(),
        points: usable.len(),
    })
}

/// Closed-form expected rates for a source point and chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRates {
    pub signal_click_rate: f64,
    pub trigger_rate: f64,
    pub coincidence_rate: f64,
    pub accidental_rate: f64,
    pub car: f64,
}

/// Expected histogram rates without sampling.
///
/// Exact per gate for the pair, Raman and dark contributions. Dead time and
/// re-arm are folded in as two cascaded non-paralysable dead times, which is
/// approximate when both are active.
pub fn expected_rates(source: &SourcePoint, chain: &DetectionChain) -> Result<ExpectedRates> {
    source.validate()?;
    chain.validate()?;
    let x = source.pair_probability();
    let (eta_s, eta_i) = (chain.signal_efficiency(), chain.idler_efficiency());
    let period = 1.0 / source.repetition_rate_hz;
    // sum_n (1-x) x^n b^n
    let gen = |b: f64| (1.0 - x) / (1.0 - x * b);
    let p_pair = 1.0 - gen(1.0 - eta_s);
    let p_dark = chain.signal_dark_rate * period;
    let raw = (p_pair + p_dark) * source.repetition_rate_hz;
    let clicks = raw / (1.0 + raw * chain.signal_dead_time);
    let triggers = clicks / (1.0 + clicks * chain.rearm_interval());
    let f_pair = if p_pair + p_dark > 0.0 { p_pair / (p_pair + p_dark) } else { 0.0 };

    let raman = source.raman_mean * eta_i;
    let to_ps = |s: f64| (s * 1e12).round() as i64;
    let (gate, edge, period_ps) = (to_ps(chain.gate_width), to_ps(chain.gate_edge), period * 1e12);
    // gate outcome for a trigger on a pulse; `tau0` is the trigger pulse's offset in the gate
    let gate_click = |tau0: i64, correlated: bool| -> f64 {
        let j_lo = -((tau0 as f64 / period_ps).ceil() as i64) - 1;
        let j_hi = (((gate - tau0) as f64) / period_ps).ceil() as i64 + 1;
        let mut p_none = 1.0 - chain.idler_dark_prob_per_gate;
        for j in j_lo..=j_hi {
            let tau = tau0 + (j as f64 * period_ps).round() as i64;
            let e = gate_efficiency(tau, gate, edge);
            if e == 0.0 {
                continue;
            }
            p_none *= (-raman * e).exp();
            let b = 1.0 - eta_i * e;
            p_none *= if j == 0 && correlated && p_pair > 0.0 {
                (gen(b) - gen((1.0 - eta_s) * b)) / p_pair
            } else {
                gen(b)
            };
        }
        1.0 - p_none
    };
    let taus: Vec<i64> = chain
        .trigger_delay_sweep
        .iter()
        .map(|&d| to_ps(chain.idler_fibre_delay) - to_ps(chain.trigger_latency) - to_ps(d))
        .collect();
    let per_trigger: Vec<f64> = taus
        .iter()
        .map(|&tau| f_pair * gate_click(tau, true) + (1.0 - f_pair) * gate_click(tau, false))
        .collect();
    let counts_like: Vec<u64> = per_trigger.iter().map(|p| (p * 1e12) as u64).collect();
    let s = summarise_peak(&chain.trigger_delay_sweep, &counts_like, chain.gate_width);
    let far: Vec<f64> = chain
        .trigger_delay_sweep
        .iter()
        .zip(&per_trigger)
        .filter(|(d, _)| (**d - s.peak_delay).abs() > 2.0 * chain.gate_width)
        .map(|(_, p)| *p)
        .collect();
    let acc = if far.is_empty() {
        f64::NAN
    } else {
        far.iter().sum::<f64>() / far.len() as f64
    };
    let coincidence_rate = triggers * per_trigger[s.peak_index];
    let accidental_rate = triggers * acc;
    Ok(ExpectedRates {
        signal_click_rate: clicks,
        trigger_rate: triggers,
        coincidence_rate,
        accidental_rate,
        car: coincidence_rate / accidental_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::{delay_sweep, simulate_point};

    fn chain() -> DetectionChain {
        DetectionChain::paper_default()
    }

    #[test]
    fn paper_rate_inference() {
        let r = infer_generated_rate(9600.0, 480.0, &chain(), 0.150).unwrap();
        assert!((r.pairs_per_s - 6.08e6).abs() < 1.0, "{}", r.pairs_per_s);
        assert!((r.brightness_per_mw - 6.08e6 / 150.0).abs() < 1e-6);
        assert!(r.pairs_per_s >= 6e6 && r.brightness_per_mw >= 4e4);
        assert_eq!(infer_generated_rate(480.0, 480.0, &chain(), 0.15).unwrap().pairs_per_s, 0.0);
        let mut c = chain();
        c.idler_det_efficiency = 0.0;
        assert!(matches!(infer_generated_rate(9600.0, 480.0, &c, 0.15), Err(Error::ZeroEfficiency(_))));
        assert!(infer_generated_rate(100.0, 480.0, &chain(), 0.15).is_err());
    }

    #[test]
    fn exact_inverse_length_data() {
        let pts: Vec<(f64, f64)> = [0.3, 0.6, 1.0, 2.0, 6.0].iter().map(|&l| (l, 12.0 / l)).collect();
        let f = fit_inverse_length(&pts).unwrap();
        assert!((f.coefficient - 12.0).abs() < 1e-12);
        assert!(f.relative_rms < 1e-12);
        assert!(matches!(fit_inverse_length(&pts[..1]), Err(Error::Fit(_))));
    }

    // For the ideal chain the closed form reduces to 1/x.
    #[test]
    fn closed_form_ideal_chain() {
        let period = 1.0 / 1.5e9;
        let mut c = chain();
        c.signal_transmission = 1.0;
        c.idler_transmission = 1.0;
        c.signal_det_efficiency = 1.0;
        c.idler_det_efficiency = 1.0;
        c.signal_dark_rate = 0.0;
        c.idler_dark_prob_per_gate = 0.0;
        c.gate_width = 0.1 * period;
        c.gate_edge = 0.0;
        c.signal_dead_time = 0.0;
        c.max_gate_rate = 1e15;
        c.trigger_delay_sweep = delay_sweep(0.0, 20e-9, period);
        c.trigger_delay = 10e-9;
        c.trigger_latency = c.idler_fibre_delay - c.trigger_delay - 0.5 * c.gate_width;
        let s = SourcePoint {
            lam: 1e-3f64.sqrt(),
            raman_mean: 0.0,
            repetition_rate_hz: 1.5e9,
        };
        let e = expected_rates(&s, &c).unwrap();
        assert!((e.car - 1000.0).abs() < 1e-6, "{}", e.car);
    }

    // Exhaustive enumeration over pair numbers <= 3 against the closed form,
    // then the Monte Carlo against both within 3 sigma.
    #[test]
    fn lossy_chain_matches_enumeration_and_simulation() {
        let period = 1.0 / 1.5e9;
        let mut c = chain();
        c.signal_dark_rate = 0.0;
        c.idler_dark_prob_per_gate = 0.0;
        c.gate_width = 0.1 * period;
        c.gate_edge = 0.0;
        c.signal_dead_time = 0.0;
        c.max_gate_rate = 1e15;
        c.trigger_delay_sweep = delay_sweep(0.0, 20e-9, period);
        c.trigger_delay = 10e-9;
        c.trigger_latency = c.idler_fibre_delay - c.trigger_delay - 0.5 * c.gate_width;
        let x: f64 = 0.01;
        let s = SourcePoint {
            lam: x.sqrt(),
            raman_mean: 0.0,
            repetition_rate_hz: 1.5e9,
        };
        let (es, ei) = (c.signal_efficiency(), c.idler_efficiency());
        let p = |n: i32| (1.0 - x) * x.powi(n);
        let (mut trig, mut coinc, mut acc) = (0.0, 0.0, 0.0);
        for n in 1..=3 {
            let qs = 1.0 - (1.0 - es).powi(n);
            let qi = 1.0 - (1.0 - ei).powi(n);
            trig += p(n) * qs;
            coinc += p(n) * qs * qi;
            acc += p(n) * qi;
        }
        let car_enum = coinc / trig / acc;
        let e = expected_rates(&s, &c).unwrap();
        assert!((e.car - car_enum).abs() / car_enum < 1e-4, "{} vs {car_enum}", e.car);

        let h = simulate_point(&s, &c, 5, 10_000_000).unwrap();
        let sm = h.summary();
        let peak = h.counts[sm.peak_index] as f64;
        let bg_total = sm.background * sm.background_bins as f64;
        // relative error of a ratio of two Poisson counts
        let rel = (1.0 / peak + 1.0 / bg_total).sqrt();
        assert!((h.car - car_enum).abs() / car_enum < 3.0 * rel, "{} vs {car_enum} ({rel})", h.car);
    }

    #[test]
    fn effective_window_cases() {
        let s = SourcePoint {
            lam: 0.1,
            raman_mean: 0.01,
            repetition_rate_hz: 1.5e9,
        };
        let mut c = chain();
        c.trigger_delay_sweep = delay_sweep(0.0, 20e-9, 0.05e-9);
        let h = simulate_point(&s, &c, 21, 100_000_000).unwrap();
        let w = effective_window(&h).unwrap();
        assert!(w.width < 2.5e-9, "{}", w.width);
        assert_eq!(w.pump_periods, 3);
        assert!((h.peak_delay - 7.5e-9).abs() < 0.1e-9, "{}", h.peak_delay);

        let period = 1.0 / 1.5e9;
        let mut d = c.clone();
        d.gate_width = 0.1 * period;
        d.gate_edge = 0.0;
        d.trigger_delay_sweep = delay_sweep(5e-9, 10e-9, 0.01e-9);
        d.trigger_latency = d.idler_fibre_delay - d.trigger_delay - 0.5 * d.gate_width;
        let h = simulate_point(&s, &d, 21, 100_000_000).unwrap();
        assert_eq!(effective_window(&h).unwrap().pump_periods, 1);

        let flat = SourcePoint { lam: 0.0, ..s };
        let mut e = chain();
        e.signal_dark_rate = 1e5;
        e.idler_dark_prob_per_gate = 1e-2;
        let h = simulate_point(&flat, &e, 21, 20_000_000).unwrap();
        assert!(matches!(effective_window(&h), Err(Error::NoPeak { .. })), "{:?}", h.counts);
    }

    #[test]
    fn expected_rates_track_simulation_on_paper_chain() {
        let s = SourcePoint {
            lam: 0.08,
            raman_mean: 0.05,
            repetition_rate_hz: 1.5e9,
        };
        let c = chain();
        let e = expected_rates(&s, &c).unwrap();
        let h = simulate_point(&s, &c, 9, 400_000_000).unwrap();
        let within = |a: f64, b: f64, tol: f64| (a - b).abs() / b < tol;
        assert!(within(h.trigger_rate(), e.trigger_rate, 0.05), "{} {}", h.trigger_rate(), e.trigger_rate);
        assert!(within(h.coincidence_rate, e.coincidence_rate, 0.08), "{} {}", h.coincidence_rate, e.coincidence_rate);
        assert!(within(h.accidental_rate, e.accidental_rate, 0.08), "{} {}", h.accidental_rate, e.accidental_rate);
    }
}
