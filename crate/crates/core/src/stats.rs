//! Photon-number statistics of the pair state and the repetition-rate
//! trade-off between single- and multi-pair emission.
//!
//! Pair numbers follow the single-mode two-mode-squeezed-vacuum law
//! `P(n) = (1 - |lam|^2) |lam|^(2n)`.

use serde::{Deserialize, Serialize};

use crate::dispersion::FibreGeometry;
use crate::error::{Error, Result};
use crate::pump::PumpPulse;

/// Squeeze-like amplitude `lam = kappa * gamma * P0 * L_eff`.
///
/// `effective_length_m` is the fibre length for the linear model; callers
/// that account for phasematching bandwidth pass a shorter effective length.
pub fn squeeze_parameter_for(kappa: f64, gamma: f64, peak_power: f64, effective_length_m: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "calibration constant must be positive".into(),
        });
    }
    let lam = kappa * gamma * peak_power * effective_length_m;
    if lam >= 1.0 {
        return Err(Error::OverPumped { lam });
    }
    Ok(lam)
}

/// `lam = kappa * gamma * P0 * L` for the pump in the given fibre.
pub fn squeeze_parameter(pump: &PumpPulse, geometry: &FibreGeometry, kappa: f64) -> Result<f64> {
    squeeze_parameter_for(kappa, geometry.gamma, pump.peak_power(), geometry.length_m)
}

/// Truncated geometric pair-number distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairNumberDistribution {
    pub lam: f64,
    pub n_max: usize,
    pub probabilities: Vec<f64>,
}

impl PairNumberDistribution {
    /// Per-pulse probability ratio `P(n+1)/P(n)`.
    pub fn ratio(&self) -> f64 {
        self.lam * self.lam
    }

    pub fn p(&self, n: usize) -> f64 {
        self.probabilities.get(n).copied().unwrap_or(0.0)
    }

    /// Closed-form mean pair number of the untruncated distribution.
    pub fn mean(&self) -> f64 {
        let x = self.ratio();
        x / (1.0 - x)
    }

    /// Bound on the probability mass dropped by truncation.
    pub fn tail_bound(&self) -> f64 {
        self.ratio().powi(self.n_max as i32 + 1)
    }
}

pub fn pair_distribution(lam: f64, n_max: usize) -> Result<PairNumberDistribution> {
    if !(lam.abs() < 1.0) {
        return Err(Error::OverPumped { lam: lam.abs() });
    }
    if n_max < 2 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            reason: "truncation order must be at least 2".into(),
        });
    }
    let x = lam * lam;
    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 - x;
    for _ in 0..=n_max {
        probabilities.push(p);
        p *= x;
    }
    Ok(PairNumberDistribution {
        lam: lam.abs(),
        n_max,
        probabilities,
    })
}

/// What is held fixed while the repetition rate is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeoffMode {
    ConstantAveragePower,
    ConstantPairProbability,
}

/// Factors by which rates change when the repetition rate is multiplied by `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub multiplier: f64,
    pub lam_factor: f64,
    /// Factor on single pairs generated per second.
    pub single_pair_rate_factor: f64,
    /// Factor on P(2)/P(1) per pulse.
    pub multipair_ratio_factor: f64,
    /// Pump after scaling.
    pub pump: PumpPulse,
}

/// Effect of raising the repetition rate by `m`.
///
/// At constant average power the peak power falls by `m`, so `lam -> lam/m`,
/// P(2)/P(1) falls by `m^2` and single pairs per second fall by `m`. At
/// constant pair probability per pulse the average power rises by `m`, the
/// per-pulse statistics are untouched and pairs per second rise by `m`.
pub fn rep_rate_tradeoff(base: &PumpPulse, m: f64, mode: TradeoffMode) -> Result<TradeoffReport> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "rate multiplier must be positive".into(),
        });
    }
    let mut pump = *base;
    pump.repetition_rate_hz *= m;
    let (lam_factor, single, ratio) = match mode {
        TradeoffMode::ConstantAveragePower => (1.0 / m, 1.0 / m, 1.0 / (m * m)),
        TradeoffMode::ConstantPairProbability => {
            pump.average_power_w *= m;
            (1.0, m, 1.0)
        }
    };
    Ok(TradeoffReport {
        multiplier: m,
        lam_factor,
        single_pair_rate_factor: single,
        multipair_ratio_factor: ratio,
        pump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vacuum_state() {
        let d = pair_distribution(0.0, 5).unwrap();
        assert_eq!(d.p(0), 1.0);
        assert!(d.probabilities[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn geometric_arithmetic() {
        let d = pair_distribution(0.1, 10).unwrap();
        assert!((d.p(1) - 0.0099).abs() < 1e-15);
        assert!((d.p(2) - 9.9e-5).abs() < 1e-17);
        assert!((d.p(2) / d.p(1) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn mean_matches_direct_summation() {
        let d = pair_distribution(0.3, 50).unwrap();
        let direct: f64 = d.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((direct - d.mean()).abs() < 1e-12);
    }

    #[test]
    fn over_pumped_is_rejected() {
        assert!(matches!(pair_distribution(1.0, 5), Err(Error::OverPumped { .. })));
        let pump = PumpPulse::paper_default();
        let g = FibreGeometry::new(3.0, 0.4, 1.0, 0.01).unwrap();
        assert!(matches!(squeeze_parameter(&pump, &g, 10.0), Err(Error::OverPumped { .. })));
    }

    #[test]
    fn squeeze_parameter_scaling() {
        let g = FibreGeometry::new(3.0, 0.4, 1.15, 0.01).unwrap();
        let p = PumpPulse::paper_default().with_average_power(0.15);
        let lam = squeeze_parameter(&p, &g, 0.02).unwrap();
        let lam2 = squeeze_parameter(&p.with_average_power(0.3), &g, 0.02).unwrap();
        assert!((lam2 - 2.0 * lam).abs() < 1e-15);
        let lam_l = squeeze_parameter(&p, &g.with_length(2.3), 0.02).unwrap();
        assert!((lam_l - 2.0 * lam).abs() < 1e-15);
        assert_eq!(squeeze_parameter_for(0.02, 0.01, 0.0, 1.0).unwrap(), 0.0);
    }

    // 6e6 pairs/s at 1.5 GHz means P(1) ~ lam^2 ~ 4e-3 per pulse.
    #[test]
    fn inferred_pair_probability_per_pulse() {
        let lam2: f64 = 6e6 / 1.5e9;
        assert!((lam2 - 4e-3).abs() < 1e-12);
        let d = pair_distribution(lam2.sqrt(), 10).unwrap();
        assert!((d.p(1) * 1.5e9 - 6e6).abs() / 6e6 < 5e-3);
    }

    #[test]
    fn tradeoff_values() {
        let base = PumpPulse::paper_default().with_average_power(0.1);
        let r = rep_rate_tradeoff(&base, 18.75, TradeoffMode::ConstantAveragePower).unwrap();
        assert!((1.0 / r.multipair_ratio_factor - 351.5625).abs() < 1e-9);
        assert!((r.single_pair_rate_factor - 1.0 / 18.75).abs() < 1e-15);
        let one = rep_rate_tradeoff(&base, 1.0, TradeoffMode::ConstantAveragePower).unwrap();
        assert_eq!((one.single_pair_rate_factor, one.multipair_ratio_factor), (1.0, 1.0));
        let c = rep_rate_tradeoff(&base, 10.0, TradeoffMode::ConstantPairProbability).unwrap();
        assert_eq!((c.single_pair_rate_factor, c.multipair_ratio_factor), (10.0, 1.0));
        assert!((c.pump.peak_power() - base.peak_power()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn distribution_invariants(lam in 0.0f64..0.95, n_max in 2usize..80) {
            let d = pair_distribution(lam, n_max).unwrap();
            let total: f64 = d.probabilities.iter().sum();
            prop_assert!((1.0 - total).abs() <= d.tail_bound() + 1e-12);
            prop_assert!(total >= 1.0 - d.tail_bound() - 1e-12);
            for w in d.probabilities.windows(2) {
                if w[0] > 1e-300 {
                    prop_assert!((w[1] / w[0] - lam * lam).abs() <= 1e-12 * (lam * lam).max(1e-300));
                }
            }
        }

        #[test]
        fn tradeoff_composes(m1 in 0.1f64..50.0, m2 in 0.1f64..50.0) {
            let base = PumpPulse::paper_default();
            for mode in [TradeoffMode::ConstantAveragePower, TradeoffMode::ConstantPairProbability] {
                let a = rep_rate_tradeoff(&base, m1, mode).unwrap();
                let b = rep_rate_tradeoff(&a.pump, m2, mode).unwrap();
                let ab = rep_rate_tradeoff(&base, m1 * m2, mode).unwrap();
                let close = |x: f64, y: f64| (x - y).abs() <= 1e-14 * x.abs().max(y.abs());
                prop_assert!(close(a.single_pair_rate_factor * b.single_pair_rate_factor, ab.single_pair_rate_factor));
                prop_assert!(close(a.multipair_ratio_factor * b.multipair_ratio_factor, ab.multipair_ratio_factor));
            }
        }
    }
}
