//! Seeded Monte Carlo of the heralding detection chain: pair generation per
//! pump pulse, loss, Raman background, dark counts, a free-running signal
//! detector with dead time triggering a gated idler detector, and the
//! resulting coincidence-versus-delay histogram.
//!
//! The pulse train is split into fixed-size batches, each drawing from its own
//! ChaCha8 stream. Signal events are merged in time order to apply dead time
//! and the gate re-arm limit. Every accepted trigger then evaluates one gate
//! per swept delay with its own stream. Counts are integers, so the histogram
//! does not depend on the number of worker threads.

mod analysis;
mod experiment;

pub use analysis::*;
pub use experiment::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulses per random-number batch; fixed so results never depend on threading.
pub const BATCH_PULSES: u64 = 1 << 24;
/// Smallest pulse count accepted by [`simulate_point`].
pub const MIN_PULSES: u64 = 1_000_000;

const STREAM_BATCH: u64 = 0x6261_7463_6800_0001;
const STREAM_GATE: u64 = 0x6761_7465_7300_0002;
const TRIGGERS_PER_TASK: usize = 2048;

/// Optical and electronic parameters of both detection arms. Times in
/// seconds, rates in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionChain {
    pub signal_transmission: f64,
    pub idler_transmission: f64,
    pub signal_det_efficiency: f64,
    pub idler_det_efficiency: f64,
    pub signal_dark_rate: f64,
    pub idler_dark_prob_per_gate: f64,
    pub gate_width: f64,
    /// Linear rise and fall time of the in-gate detection efficiency.
    pub gate_edge: f64,
    pub trigger_delay: f64,
    pub trigger_delay_sweep: Vec<f64>,
    pub signal_dead_time: f64,
    pub max_gate_rate: f64,
    pub idler_fibre_delay: f64,
    /// Fixed electronic latency from signal click to gate opening at zero delay.
    pub trigger_latency: f64,
}

impl DetectionChain {
    /// Chain with the paper's efficiencies and timing and the assumed
    /// electronics defaults; the sweep covers 0 to 20 ns in 0.25 ns steps.
    pub fn paper_default() -> Self {
        let gate_width = 2.5e-9;
        let trigger_delay = 7.5e-9;
        let idler_fibre_delay = 13.0 * 1.4682 / crate::units::SPEED_OF_LIGHT;
        Self {
            signal_transmission: 0.10,
            idler_transmission: 0.10,
            signal_det_efficiency: 0.60,
            idler_det_efficiency: 0.25,
            signal_dark_rate: 250.0,
            idler_dark_prob_per_gate: 2e-5,
            gate_width,
            gate_edge: 0.6e-9,
            trigger_delay,
            trigger_delay_sweep: delay_sweep(0.0, 20e-9, 0.25e-9),
            signal_dead_time: 50e-9,
            max_gate_rate: 1e6,
            idler_fibre_delay,
            trigger_latency: idler_fibre_delay - trigger_delay - 0.5 * gate_width,
        }
    }

    pub fn signal_efficiency(&self) -> f64 {
        self.signal_transmission * self.signal_det_efficiency
    }

    pub fn idler_efficiency(&self) -> f64 {
        self.idler_transmission * self.idler_det_efficiency
    }

    /// Minimum spacing of accepted triggers.
    pub fn rearm_interval(&self) -> f64 {
        self.gate_width + 1.0 / self.max_gate_rate
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        let probabilities = [
            ("signal_transmission", self.signal_transmission),
            ("idler_transmission", self.idler_transmission),
            ("signal_det_efficiency", self.signal_det_efficiency),
            ("idler_det_efficiency", self.idler_det_efficiency),
            ("idler_dark_prob_per_gate", self.idler_dark_prob_per_gate),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return bad(name, format!("probability {p} outside [0, 1]"));
            }
        }
        let non_negative = [
            ("signal_dark_rate", self.signal_dark_rate),
            ("gate_edge", self.gate_edge),
            ("signal_dead_time", self.signal_dead_time),
            ("idler_fibre_delay", self.idler_fibre_delay),
            ("trigger_latency", self.trigger_latency),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, format!("must be non-negative, got {v}"));
            }
        }
        if !(self.gate_width > 0.0 && self.gate_width.is_finite()) {
            return bad("gate_width", "must be positive".into());
        }
        if 2.0 * self.gate_edge > self.gate_width {
            return bad("gate_edge", "rise plus fall exceeds the gate width".into());
        }
        if !(self.max_gate_rate > 0.0) {
            return bad("max_gate_rate", "must be positive".into());
        }
        if self.trigger_delay_sweep.is_empty() {
            return bad("trigger_delay_sweep", "needs at least one delay".into());
        }
        if self.trigger_delay_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad("trigger_delay_sweep", "delays must be strictly increasing".into());
        }
        let lowest = self.trigger_delay_sweep[0].min(self.trigger_delay);
        if self.trigger_latency + lowest < 0.0 {
            return bad("trigger_delay_sweep", "a gate would open before its trigger".into());
        }
        if self.idler_fibre_delay < self.trigger_latency {
            return bad(
                "idler_fibre_delay",
                "idler photons arrive before any gate can open; lengthen the idler delay fibre".into(),
            );
        }
        Ok(())
    }

    fn timing_ps(&self) -> TimingPs {
        let ps = |s: f64| (s * 1e12).round() as i64;
        TimingPs {
            gate: ps(self.gate_width),
            edge: ps(self.gate_edge),
            latency: ps(self.trigger_latency),
            fibre: ps(self.idler_fibre_delay),
            dead: ps(self.signal_dead_time),
            rearm: ps(self.rearm_interval()),
            delays: self.trigger_delay_sweep.iter().map(|&d| ps(d)).collect(),
        }
    }
}

/// Uniform delay list `start, start + step, ...` up to and including `stop`.
pub fn delay_sweep(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Raman scattering into the idler band.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RamanModel {
    /// Photons per pulse per W of peak power per m of fibre.
    pub coefficient: f64,
}

impl RamanModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.coefficient >= 0.0 && self.coefficient.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "raman_coefficient",
                reason: "must be non-negative".into(),
            });
        }
        Ok(())
    }

    pub fn mean_per_pulse(&self, peak_power_w: f64, length_m: f64) -> f64 {
        self.coefficient * peak_power_w * length_m
    }
}

/// Per-pulse source statistics at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePoint {
    pub lam: f64,
    /// Mean Raman photons generated per pulse in the idler band.
    pub raman_mean: f64,
    pub repetition_rate_hz: f64,
}

impl SourcePoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.lam >= 0.0) || self.lam >= 1.0 {
            return Err(Error::OverPumped { lam: self.lam });
        }
        if !(self.raman_mean >= 0.0 && self.raman_mean.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "raman_mean",
                reason: "must be non-negative".into(),
            });
        }
        if !(self.repetition_rate_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "repetition_rate_hz",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }

    /// Probability that a pulse carries at least one pair.
    pub fn pair_probability(&self) -> f64 {
        self.lam * self.lam
    }
}

/// Bookkeeping that is not part of the histogram itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub pair_pulses: u64,
    pub signal_clicks: u64,
    /// Signal detections lost to the detector dead time.
    pub dead_time_losses: u64,
    /// Signal clicks that arrived while the gate was re-arming.
    pub dropped_triggers: u64,
}

/// Coincidence counts against the swept trigger delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub delay_axis: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_trigger_count: u64,
    pub n_pulses: u64,
    pub elapsed_simulated_time: f64,
    pub gate_width: f64,
    pub repetition_rate_hz: f64,
    /// Bin used for the coincidence rate.
    pub peak_index: usize,
    /// Midpoint of the half-maximum crossings around the tallest bin.
    pub peak_delay: f64,
    pub coincidence_rate: f64,
    pub accidental_rate: f64,
    pub car: f64,
    pub diagnostics: Diagnostics,
}

/// Peak and background summary of a delay histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSummary {
    pub peak_index: usize,
    pub peak_delay: f64,
    /// Half-maximum crossings (s), if both exist inside the sweep.
    pub half_max: Option<(f64, f64)>,
    /// Mean counts of bins farther than two gate widths from the peak.
    pub background: f64,
    pub background_bins: usize,
}

/// Locates the coincidence peak: tallest bin, half-maximum crossings above a
/// median baseline, then the bin nearest their midpoint. The background is
/// the mean of every bin more than two gate widths from that midpoint.
pub fn summarise_peak(delays: &[f64], counts: &[u64], gate_width: f64) -> PeakSummary {
    let n = counts.len();
    let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let top = (0..n).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline = sorted[n / 2];
    let half = baseline + 0.5 * (y[top] - baseline);
    let mut lo = top;
    while lo > 0 && y[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = top;
    while hi + 1 < n && y[hi + 1] >= half {
        hi += 1;
    }
    let cross = |i: usize, j: usize| {
        let t = if y[j] == y[i] { 0.5 } else { (half - y[i]) / (y[j] - y[i]) };
        delays[i] + t * (delays[j] - delays[i])
    };
    let half_max = (lo > 0 && hi + 1 < n && y[top] > baseline).then(|| (cross(lo - 1, lo), cross(hi, hi + 1)));
    let peak_delay = match half_max {
        Some((a, b)) => 0.5 * (a + b),
        None => delays[top],
    };
    let peak_index = (0..n)
        .min_by(|&a, &b| {
            (delays[a] - peak_delay)
                .abs()
                .partial_cmp(&(delays[b] - peak_delay).abs())
                .unwrap()
        })
        .unwrap();
    let far: Vec<f64> = (0..n)
        .filter(|&i| (delays[i] - peak_delay).abs() > 2.0 * gate_width)
        .map(|i| y[i])
        .collect();
    let background = if far.is_empty() {
        f64::NAN
    } else {
        far.iter().sum::<f64>() / far.len() as f64
    };
    PeakSummary {
        peak_index,
        peak_delay,
        half_max,
        background,
        background_bins: far.len(),
    }
}

impl CoincidenceHistogram {
    /// Builds the histogram and its rate summary from raw counts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        delay_axis: Vec<f64>,
        counts: Vec<u64>,
        total_trigger_count: u64,
        n_pulses: u64,
        repetition_rate_hz: f64,
        gate_width: f64,
        diagnostics: Diagnostics,
    ) -> Self {
        let elapsed = n_pulses as f64 / repetition_rate_hz;
        let s = summarise_peak(&delay_axis, &counts, gate_width);
        let coincidence_rate = counts[s.peak_index] as f64 / elapsed;
        let accidental_rate = s.background / elapsed;
        let bin_width = if delay_axis.len() > 1 {
            (delay_axis[delay_axis.len() - 1] - delay_axis[0]) / (delay_axis.len() - 1) as f64
        } else {
            0.0
        };
        Self {
            bin_width,
            car: coincidence_rate / accidental_rate,
            delay_axis,
            counts,
            total_trigger_count,
            n_pulses,
            elapsed_simulated_time: elapsed,
            gate_width,
            repetition_rate_hz,
            peak_index: s.peak_index,
            peak_delay: s.peak_delay,
            coincidence_rate,
            accidental_rate,
            diagnostics,
        }
    }

    pub fn summary(&self) -> PeakSummary {
        summarise_peak(&self.delay_axis, &self.counts, self.gate_width)
    }

    /// Rows of `(delay_ns, counts, rate_hz)`; delays are rounded to 1 ps.
    pub fn rows(&self) -> Vec<(f64, u64, f64)> {
        self.delay_axis
            .iter()
            .zip(&self.counts)
            .map(|(&d, &c)| ((d * 1e12).round() / 1e3, c, c as f64 / self.elapsed_simulated_time))
            .collect()
    }

    pub fn trigger_rate(&self) -> f64 {
        self.total_trigger_count as f64 / self.elapsed_simulated_time
    }
}

struct TimingPs {
    gate: i64,
    edge: i64,
    latency: i64,
    fibre: i64,
    dead: i64,
    rearm: i64,
    delays: Vec<i64>,
}

/// Relative idler detection efficiency `tau` ps after the gate opens.
fn gate_efficiency(tau: i64, gate: i64, edge: i64) -> f64 {
    if tau < 0 || tau > gate {
        0.0
    } else if edge == 0 {
        1.0
    } else {
        (tau.min(gate - tau) as f64 / edge as f64).min(1.0)
    }
}

struct PulseClock {
    period_ps: f64,
    n_pulses: u64,
}

impl PulseClock {
    fn time(&self, k: u64) -> i64 {
        (k as f64 * self.period_ps).round() as i64
    }

    /// Pulses whose emission time plus `offset` lies in `[a, b]` (ps).
    fn range(&self, a: i64, b: i64, offset: i64) -> std::ops::Range<u64> {
        let start = ((a - offset) as f64 / self.period_ps).floor().max(0.0) as u64;
        let mut lo = start.saturating_sub(1);
        while lo < self.n_pulses && self.time(lo) + offset < a {
            lo += 1;
        }
        let mut hi = lo;
        while hi < self.n_pulses && self.time(hi) + offset <= b {
            hi += 1;
        }
        lo..hi
    }
}

fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index);
    rng
}

/// Signal detection candidate before dead time; `pulse` is `None` for a dark count.
#[derive(Clone, Copy)]
struct SignalEvent {
    time: i64,
    pulse: Option<u64>,
}

struct Batch {
    occupied: Vec<(u64, u32)>,
    events: Vec<SignalEvent>,
}

fn generate_batch(
    b: u64,
    seed: u64,
    clock: &PulseClock,
    x: f64,
    eta_s: f64,
    dark_rate: f64,
) -> Batch {
    let mut rng = stream(seed, STREAM_BATCH, b);
    let first = b * BATCH_PULSES;
    let end = (first + BATCH_PULSES).min(clock.n_pulses);
    let mut occupied = Vec::new();
    let mut events = Vec::new();
    if x > 0.0 {
        let gap = Geometric::new(x).expect("0 < x < 1");
        let extra = Geometric::new(1.0 - x).expect("0 < x < 1");
        let mut k = first;
        loop {
            let skip = gap.sample(&mut rng);
            k = match k.checked_add(skip) {
                Some(k) if k < end => k,
                _ => break,
            };
            let n = 1 + extra.sample(&mut rng).min(u32::MAX as u64 - 1) as u32;
            occupied.push((k, n));
            let p_click = 1.0 - (1.0 - eta_s).powi(n as i32);
            if rng.random::<f64>() < p_click {
                events.push(SignalEvent {
                    time: clock.time(k),
                    pulse: Some(k),
                });
            }
            k += 1;
        }
    }
    if dark_rate > 0.0 {
        let (t0, t1) = (clock.time(first), clock.time(end));
        let mean = dark_rate * (t1 - t0) as f64 * 1e-12;
        let n = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64
        } else {
            0
        };
        for _ in 0..n {
            events.push(SignalEvent {
                time: rng.random_range(t0..t1.max(t0 + 1)),
                pulse: None,
            });
        }
        events.sort_by_key(|e| (e.time, e.pulse.is_none()));
    }
    Batch { occupied, events }
}

/// Monte Carlo of `n_pulses` pump pulses at a resolved operating point.
pub fn simulate_point(
    source: &SourcePoint,
    chain: &DetectionChain,
    seed: u64,
    n_pulses: u64,
) -> Result<CoincidenceHistogram> {
    source.validate()?;
    chain.validate()?;
    if n_pulses < MIN_PULSES {
        return Err(Error::InvalidParameter {
            name: "n_pulses",
            reason: format!("need at least {MIN_PULSES} pulses, got {n_pulses}"),
        });
    }
    let clock = PulseClock {
        period_ps: 1e12 / source.repetition_rate_hz,
        n_pulses,
    };
    let t = chain.timing_ps();
    let x = source.pair_probability();
    let eta_s = chain.signal_efficiency();
    let eta_i = chain.idler_efficiency();

    let n_batches = n_pulses.div_ceil(BATCH_PULSES);
    let batches: Vec<Batch> = (0..n_batches)
        .into_par_iter()
        .map(|b| generate_batch(b, seed, &clock, x, eta_s, chain.signal_dark_rate))
        .collect();
    let mut occupied_idx = Vec::new();
    let mut occupied_n = Vec::new();
    for batch in &batches {
        for &(k, n) in &batch.occupied {
            occupied_idx.push(k);
            occupied_n.push(n);
        }
    }

    // time-ordered dead time and re-arm
    let mut diagnostics = Diagnostics {
        pair_pulses: occupied_idx.len() as u64,
        ..Diagnostics::default()
    };
    let mut triggers: Vec<SignalEvent> = Vec::new();
    let mut free_at = i64::MIN;
    let mut armed_at = i64::MIN;
    for e in batches.iter().flat_map(|b| b.events.iter()) {
        if e.time < free_at {
            diagnostics.dead_time_losses += 1;
            continue;
        }
        free_at = e.time + t.dead;
        diagnostics.signal_clicks += 1;
        if e.time < armed_at {
            diagnostics.dropped_triggers += 1;
            continue;
        }
        armed_at = e.time + t.rearm;
        triggers.push(*e);
    }
    drop(batches);

    let raman = source.raman_mean * chain.idler_transmission * chain.idler_det_efficiency;
    let dark = chain.idler_dark_prob_per_gate;
    let d_min = *t.delays.iter().min().expect("non-empty sweep");
    let d_max = *t.delays.iter().max().expect("non-empty sweep");
    let n_delays = t.delays.len();

    let counts = triggers
        .par_chunks(TRIGGERS_PER_TASK)
        .enumerate()
        .map(|(chunk, trig)| {
            let mut local = vec![0u64; n_delays];
            for (j, tr) in trig.iter().enumerate() {
                let index = (chunk * TRIGGERS_PER_TASK + j) as u64;
                let mut rng = stream(seed, STREAM_GATE, index);
                let open_lo = tr.time + t.latency + d_min;
                let open_hi = tr.time + t.latency + d_max + t.gate;
                let span = clock.range(open_lo, open_hi, t.fibre);
                let first = occupied_idx.partition_point(|&k| k < span.start);
                let last = occupied_idx.partition_point(|&k| k < span.end);
                for (slot, &d) in t.delays.iter().enumerate() {
                    let open = tr.time + t.latency + d;
                    let mut weight = 0.0;
                    for k in clock.range(open, open + t.gate, t.fibre) {
                        weight += gate_efficiency(clock.time(k) + t.fibre - open, t.gate, t.edge);
                    }
                    let mut p_none = (1.0 - dark) * (-raman * weight).exp();
                    for o in first..last {
                        let tau = clock.time(occupied_idx[o]) + t.fibre - open;
                        let e = gate_efficiency(tau, t.gate, t.edge);
                        if e > 0.0 {
                            p_none *= (1.0 - eta_i * e).powi(occupied_n[o] as i32);
                        }
                    }
                    if rng.random::<f64>() >= p_none {
                        local[slot] += 1;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; n_delays],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    Ok(CoincidenceHistogram::from_counts(
        chain.trigger_delay_sweep.clone(),
        counts,
        triggers.len() as u64,
        n_pulses,
        source.repetition_rate_hz,
        chain.gate_width,
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal_chain(gate_width: f64, period: f64) -> DetectionChain {
        let fibre = 50e-9;
        let delay = 10e-9;
        DetectionChain {
            signal_transmission: 1.0,
            idler_transmission: 1.0,
            signal_det_efficiency: 1.0,
            idler_det_efficiency: 1.0,
            signal_dark_rate: 0.0,
            idler_dark_prob_per_gate: 0.0,
            gate_width,
            gate_edge: 0.0,
            trigger_delay: delay,
            trigger_delay_sweep: delay_sweep(0.0, 20e-9, period),
            signal_dead_time: 0.0,
            max_gate_rate: 1e15,
            idler_fibre_delay: fibre,
            trigger_latency: fibre - delay - 0.5 * gate_width,
        }
    }

    #[test]
    fn gate_efficiency_shape() {
        assert_eq!(gate_efficiency(-1, 2500, 600), 0.0);
        assert_eq!(gate_efficiency(2501, 2500, 600), 0.0);
        assert_eq!(gate_efficiency(300, 2500, 600), 0.5);
        assert_eq!(gate_efficiency(1250, 2500, 600), 1.0);
        assert_eq!(gate_efficiency(0, 2500, 0), 1.0);
    }

    #[test]
    fn pulse_clock_ranges_are_exact() {
        let c = PulseClock {
            period_ps: 1e12 / 1.5e9,
            n_pulses: 1000,
        };
        let r = c.range(1000, 3500, 0);
        for k in r.clone() {
            assert!((1000..=3500).contains(&c.time(k)));
        }
        assert!(c.time(r.start - 1) < 1000 && c.time(r.end) > 3500);
        assert_eq!(c.range(-5000, -1, 0), 0..0);
    }

    #[test]
    fn chain_validation() {
        assert!(DetectionChain::paper_default().validate().is_ok());
        let mut c = DetectionChain::paper_default();
        c.idler_fibre_delay = 10e-9;
        assert!(matches!(c.validate(), Err(Error::InvalidParameter { name: "idler_fibre_delay", .. })));
        let mut c = DetectionChain::paper_default();
        c.idler_det_efficiency = 1.5;
        assert!(c.validate().is_err());
        let mut c = DetectionChain::paper_default();
        c.max_gate_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn paper_peak_sits_at_configured_delay() {
        let c = DetectionChain::paper_default();
        let centre = c.idler_fibre_delay - c.trigger_latency - 0.5 * c.gate_width;
        assert!((centre - c.trigger_delay).abs() < 1e-15);
    }

    #[test]
    fn ideal_chain_car_is_inverse_pair_probability() {
        let period = 1.0 / 1.5e9;
        let chain = ideal_chain(0.1 * period, period);
        let source = SourcePoint {
            lam: 1e-3f64.sqrt(),
            raman_mean: 0.0,
            repetition_rate_hz: 1.5e9,
        };
        let h = simulate_point(&source, &chain, 7, 20_000_000).unwrap();
        let s = h.summary();
        let peak = h.counts[s.peak_index] as f64;
        // every trigger sees its twin
        assert_eq!(peak as u64, h.total_trigger_count);
        let expected_bg = h.total_trigger_count as f64 * 1e-3;
        let sigma = (expected_bg / s.background_bins as f64).sqrt();
        assert!((s.background - expected_bg).abs() < 4.0 * sigma, "{} vs {expected_bg}", s.background);
        assert!((h.car - 1000.0).abs() / 1000.0 < 0.15, "CAR {}", h.car);
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let chain = DetectionChain::paper_default();
        let source = SourcePoint {
            lam: 0.06,
            raman_mean: 0.02,
            repetition_rate_hz: 1.5e9,
        };
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = many.install(|| simulate_point(&source, &chain, 11, 40_000_000).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_point(&source, &chain, 11, 40_000_000).unwrap());
        assert_eq!(a, b);
        let c = simulate_point(&source, &chain, 12, 40_000_000).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn counting_sanity() {
        let chain = DetectionChain::paper_default();
        let source = SourcePoint {
            lam: 0.1,
            raman_mean: 0.05,
            repetition_rate_hz: 1.5e9,
        };
        let h = simulate_point(&source, &chain, 3, 50_000_000).unwrap();
        assert!(h.counts.iter().all(|&c| c <= h.total_trigger_count));
        assert!(h.trigger_rate() <= chain.max_gate_rate);
        let d = h.diagnostics;
        assert_eq!(d.signal_clicks, h.total_trigger_count + d.dropped_triggers);
        assert!(d.dropped_triggers > 0);
    }

    #[test]
    fn over_pumped_and_short_runs_are_rejected() {
        let chain = DetectionChain::paper_default();
        let mut s = SourcePoint {
            lam: 1.0,
            raman_mean: 0.0,
            repetition_rate_hz: 1.5e9,
        };
        assert!(matches!(simulate_point(&s, &chain, 1, MIN_PULSES), Err(Error::OverPumped { .. })));
        s.lam = 0.1;
        assert!(simulate_point(&s, &chain, 1, MIN_PULSES - 1).is_err());
    }

    #[test]
    fn background_estimator_ignores_the_peak() {
        let delays = delay_sweep(0.0, 20e-9, 1e-9);
        let mut counts = vec![10u64; delays.len()];
        counts[7] = 200;
        counts[8] = 200;
        let s = summarise_peak(&delays, &counts, 2.5e-9);
        assert!((s.peak_delay - 7.5e-9).abs() < 1e-12);
        assert_eq!(s.background, 10.0);
    }
}
