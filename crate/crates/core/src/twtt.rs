//! The four-timestamp two-way exchange between node n and reference node 0,
//! and repeated resynchronization across epochs.
//!
//! Timeline of one exchange (local times of the acting node):
//!
//! ```text
//! node n   t_txn ──pulse──▶                       ┌ gate ──▶ t_rxn
//! node 0          ┌ gate ──▶ t_rx0 … close + τ_proc = t_tx0 ──pulse──▶
//! ```
//!
//! Each receiver opens its gate `rx_guard_s` before the nominal arrival
//! and timestamps the pulse as gate time plus the bias-corrected delay
//! estimate inside the gate.

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::channel::{self, ChannelModel};
use crate::clock::{ClockState, CorrectionRecord};
use crate::error::{Error, Result};
use crate::estimator::{estimate_snr, BiasLut, DelayEstimator};
use crate::rng::derive_seed;
use crate::signal::SampledSignal;
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimestampQuadruple {
    pub t_txn_s: f64,
    pub t_rx0_s: f64,
    pub t_tx0_s: f64,
    pub t_rxn_s: f64,
}

impl TimestampQuadruple {
    pub fn new(t_txn_s: f64, t_rx0_s: f64, t_tx0_s: f64, t_rxn_s: f64) -> Self {
        Self {
            t_txn_s,
            t_rx0_s,
            t_tx0_s,
            t_rxn_s,
        }
    }
}

/// Δ̂_0n = [(t_rx0 − t_txn) + (t_tx0 − t_rxn)] / 2.
///
/// With local = true + ε, the propagation delay enters the two one-way
/// differences with opposite signs and cancels in the sum, leaving
/// ε_0 − ε_n.
pub fn compute_offset(q: &TimestampQuadruple) -> f64 {
    ((q.t_rx0_s - q.t_txn_s) + (q.t_tx0_s - q.t_rxn_s)) / 2.0
}

/// τ̂_0n = [(t_rx0 − t_txn) − (t_tx0 − t_rxn)] / 2; the clock offset cancels.
pub fn compute_delay(q: &TimestampQuadruple) -> f64 {
    ((q.t_rx0_s - q.t_txn_s) - (q.t_tx0_s - q.t_rxn_s)) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochSchedule {
    pub sync_epoch_s: f64,
    pub resync_interval_s: f64,
    /// Time node 0 waits after closing its receive gate before replying.
    pub proc_delay_s: f64,
    /// Exchanges per epoch; the last successful one drives the correction.
    pub pulse_count: u32,
    /// How early a receive gate opens ahead of the nominal arrival; also
    /// how late it stays open after the pulse.
    pub rx_guard_s: f64,
}

impl Default for EpochSchedule {
    fn default() -> Self {
        Self {
            sync_epoch_s: 50.01e-3,
            resync_interval_s: 100e-3,
            proc_delay_s: 1e-3,
            pulse_count: 1,
            rx_guard_s: 1e-6,
        }
    }
}

impl EpochSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.sync_epoch_s.is_finite() && self.sync_epoch_s > 0.0) {
            return Err(Error::param("sync_epoch_s", "must be finite and > 0"));
        }
        if !(self.resync_interval_s.is_finite() && self.resync_interval_s >= self.sync_epoch_s) {
            return Err(Error::param(
                "resync_interval_s",
                "must be finite and >= sync_epoch_s",
            ));
        }
        if !(self.proc_delay_s.is_finite() && self.proc_delay_s >= 0.0) {
            return Err(Error::param("proc_delay_s", "must be finite and >= 0"));
        }
        if self.pulse_count == 0 {
            return Err(Error::param("pulse_count", "must be >= 1"));
        }
        if !(self.rx_guard_s.is_finite() && self.rx_guard_s > 0.0) {
            return Err(Error::param("rx_guard_s", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Node n's local transmit time for exchange `slot` of `epoch`.
    pub fn tx_time(&self, epoch: u64, slot: u32) -> f64 {
        epoch as f64 * self.resync_interval_s
            + slot as f64 * (self.sync_epoch_s / self.pulse_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeResult {
    pub quad: TimestampQuadruple,
    pub offset_estimate_s: f64,
    pub delay_estimate_s: f64,
    /// Node 0's measurement of node n's pulse.
    pub snr_forward_db: f64,
    /// Node n's measurement of node 0's reply.
    pub snr_reverse_db: f64,
    /// Jitter-free Δ_0n = ε_0 − ε_n averaged over the two legs.
    pub true_offset_s: f64,
    pub true_delay_s: f64,
    pub warnings: Vec<String>,
}

impl ExchangeResult {
    pub fn offset_error_s(&self) -> f64 {
        self.offset_estimate_s - self.true_offset_s
    }
}

/// A configured link: channel, schedule, and an estimator for the pulse
/// both nodes transmit.
#[derive(Debug, Clone)]
pub struct TwoWayLink {
    channel: ChannelModel,
    schedule: EpochSchedule,
    estimator: DelayEstimator,
    guard_samples: usize,
}

impl TwoWayLink {
    pub fn new(channel: ChannelModel, lut: BiasLut, schedule: EpochSchedule) -> Result<Self> {
        channel.validate()?;
        if !channel.symmetric {
            return Err(Error::param(
                "symmetric",
                "asymmetric links are not supported",
            ));
        }
        schedule.validate()?;
        let estimator = DelayEstimator::new(lut)?;
        let fs = estimator.reference().sample_rate_hz();
        let guard_samples = (schedule.rx_guard_s * fs).ceil() as usize;
        let link = Self {
            channel,
            schedule,
            estimator,
            guard_samples,
        };
        let busy = 2.0 * link.window_duration_s() + link.schedule.proc_delay_s;
        let spacing = link.schedule.sync_epoch_s / link.schedule.pulse_count as f64;
        if busy > spacing {
            return Err(Error::param(
                "pulse_count",
                format!("an exchange takes {busy:e} s but slots are {spacing:e} s apart"),
            ));
        }
        Ok(link)
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn schedule(&self) -> &EpochSchedule {
        &self.schedule
    }

    pub fn estimator(&self) -> &DelayEstimator {
        &self.estimator
    }

    pub fn waveform(&self) -> &WaveformSpec {
        self.estimator.lut().waveform()
    }

    fn window_len(&self) -> usize {
        self.estimator.reference().len() + 2 * self.guard_samples
    }

    fn window_duration_s(&self) -> f64 {
        self.window_len() as f64 * self.estimator.reference().sample_period_s()
    }

    /// Runs exchange `slot` of `epoch`. Randomness (noise and timestamp
    /// jitter) is a pure function of `seed` and the clocks' own seeds.
    pub fn exchange(
        &self,
        node_n: &ClockState,
        node_0: &ClockState,
        epoch: u64,
        slot: u32,
        seed: u64,
    ) -> Result<ExchangeResult> {
        node_n.validate()?;
        node_0.validate()?;
        let pulse = self.estimator.reference();
        let guard_s = self.schedule.rx_guard_s;
        let tau = self.channel.propagation_delay_s;
        let leg_channel = |leg: u64| ChannelModel {
            rng_seed: derive_seed(self.channel.rng_seed, &[seed, leg]),
            ..self.channel.clone()
        };

        // Forward: node n → node 0.
        let t_txn = self.schedule.tx_time(epoch, slot);
        let true_txn = node_n.event_true_time(t_txn, seed, 0);
        let gate_0 = t_txn - guard_s;
        let true_gate_0 = node_0.event_true_time(gate_0, seed, 1);
        let (est_fwd, snr_fwd) = self
            .receive(pulse, true_txn, &leg_channel(0), true_gate_0)
            .map_err(|e| abort("forward", e))?;
        let t_rx0 = gate_0 + est_fwd;

        // Reverse: node 0 replies once its gate has closed.
        let t_tx0 = gate_0 + self.window_duration_s() + self.schedule.proc_delay_s;
        let true_tx0 = node_0.event_true_time(t_tx0, seed, 2);
        let gate_n = t_tx0 - guard_s;
        let true_gate_n = node_n.event_true_time(gate_n, seed, 3);
        let (est_rev, snr_rev) = self
            .receive(pulse, true_tx0, &leg_channel(1), true_gate_n)
            .map_err(|e| abort("reverse", e))?;
        let t_rxn = gate_n + est_rev;

        let quad = TimestampQuadruple::new(t_txn, t_rx0, t_tx0, t_rxn);
        let offset = compute_offset(&quad);
        let delay = compute_delay(&quad);
        let truth = |t: f64| node_0.error_at(t) - node_n.error_at(t);
        let true_offset = 0.5 * (truth(true_txn + tau / 2.0) + truth(true_tx0 + tau / 2.0));

        let mut warnings = Vec::new();
        let noise_floor = (6.0 * analysis::offset_crlb_std(self.waveform(), self.channel.snr_db)).max(1e-12);
        if delay < -noise_floor {
            warnings.push(format!(
                "negative delay estimate {delay:e} s; link may be asymmetric"
            ));
        }
        Ok(ExchangeResult {
            quad,
            offset_estimate_s: offset,
            delay_estimate_s: delay,
            snr_forward_db: snr_fwd,
            snr_reverse_db: snr_rev,
            true_offset_s: true_offset,
            true_delay_s: tau,
            warnings,
        })
    }

    /// Propagates a pulse launched at true time `tx_true` into a gate that
    /// opens at true time `gate_true`; returns the corrected delay inside
    /// the gate and the measured pre-processing SNR.
    fn receive(
        &self,
        pulse: &SampledSignal,
        tx_true: f64,
        ch: &ChannelModel,
        gate_true: f64,
    ) -> Result<(f64, f64)> {
        let launched = pulse.clone().with_start_time(tx_true);
        let rx = channel::propagate(&launched, ch, gate_true, self.window_len())?;
        let est = self.estimator.estimate(&rx)?;
        let snr = self.measure_snr(&rx, est.coarse_index);
        Ok((est.corrected_delay_s, snr))
    }

    /// Equal-length windows from the pulse interior and from whichever
    /// guard region is free of the pulse. NaN if neither guard is usable.
    fn measure_snr(&self, rx: &SampledSignal, start: usize) -> f64 {
        let n = self.estimator.reference().len();
        let w = rx.len();
        let len = self.guard_samples.saturating_sub(4).min(n / 2);
        if len < 8 {
            return f64::NAN;
        }
        let noise = if start >= len + 2 {
            Some(0..len)
        } else if start + n + 2 + len <= w {
            Some(w - len..w)
        } else {
            None
        };
        let mid = start + n / 2;
        let pulse = rx.slice(mid - len / 2..mid - len / 2 + len);
        match (noise, pulse) {
            (Some(range), Ok(pulse)) => rx
                .slice(range)
                .and_then(|q| estimate_snr(&pulse, &q))
                .unwrap_or(f64::NAN),
            _ => f64::NAN,
        }
    }
}

fn abort(leg: &'static str, source: Error) -> Error {
    Error::ExchangeAborted {
        leg,
        source: Box::new(source),
    }
}

/// Exchange slot 0 of `epoch_index` between `node_n` and `node_0`.
#[allow(clippy::too_many_arguments)]
pub fn run_exchange(
    node_n: &ClockState,
    node_0: &ClockState,
    ch: &ChannelModel,
    spec: &WaveformSpec,
    lut: &BiasLut,
    sched: &EpochSchedule,
    epoch_index: u64,
    seed: u64,
) -> Result<ExchangeResult> {
    if lut.waveform() != spec {
        return Err(Error::param(
            "lut",
            "bias table was built for a different waveform",
        ));
    }
    TwoWayLink::new(ch.clone(), lut.clone(), sched.clone())?.exchange(node_n, node_0, epoch_index, 0, seed)
}

/// Flat per-exchange record for export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeTrace {
    pub epoch_index: u64,
    pub slot: u32,
    pub t_txn_s: f64,
    pub t_rx0_s: f64,
    pub t_tx0_s: f64,
    pub t_rxn_s: f64,
    /// Sum combination of the one-way differences (offset).
    pub offset_estimate_s: f64,
    /// Difference combination (propagation delay).
    pub delay_estimate_s: f64,
    pub true_offset_s: f64,
    pub true_delay_s: f64,
    pub snr_forward_db: f64,
    pub snr_reverse_db: f64,
}

impl ExchangeTrace {
    fn new(epoch_index: u64, slot: u32, r: &ExchangeResult) -> Self {
        Self {
            epoch_index,
            slot,
            t_txn_s: r.quad.t_txn_s,
            t_rx0_s: r.quad.t_rx0_s,
            t_tx0_s: r.quad.t_tx0_s,
            t_rxn_s: r.quad.t_rxn_s,
            offset_estimate_s: r.offset_estimate_s,
            delay_estimate_s: r.delay_estimate_s,
            true_offset_s: r.true_offset_s,
            true_delay_s: r.true_delay_s,
            snr_forward_db: r.snr_forward_db,
            snr_reverse_db: r.snr_reverse_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeFailure {
    pub epoch_index: u64,
    pub slot: u32,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CampaignLog {
    pub corrections: Vec<CorrectionRecord>,
    pub traces: Vec<ExchangeTrace>,
    pub failures: Vec<ExchangeFailure>,
    /// Node n's clock after the last correction.
    #[serde(skip)]
    pub final_node_n: Option<ClockState>,
}

/// Resynchronizes `node_n` to `node_0` for `epochs` epochs, fully
/// applying each epoch's estimate. Failed exchanges are logged and the
/// epoch goes uncorrected if none succeeded.
pub fn run_campaign(
    node_n: &ClockState,
    node_0: &ClockState,
    link: &TwoWayLink,
    epochs: u64,
    seed: u64,
) -> Result<CampaignLog> {
    if epochs == 0 {
        return Err(Error::param("epochs", "must be >= 1"));
    }
    let mut clock = node_n.clone();
    let mut log = CampaignLog::default();
    for epoch in 0..epochs {
        let mut last = None;
        for slot in 0..link.schedule().pulse_count {
            match link.exchange(&clock, node_0, epoch, slot, derive_seed(seed, &[epoch, slot as u64])) {
                Ok(r) => {
                    log.traces.push(ExchangeTrace::new(epoch, slot, &r));
                    last = Some(r);
                }
                Err(e) => log.failures.push(ExchangeFailure {
                    epoch_index: epoch,
                    slot,
                    kind: e.kind(),
                    message: e.to_string(),
                }),
            }
        }
        if let Some(r) = last {
            let applied = -r.offset_estimate_s;
            let pre = -r.true_offset_s;
            log.corrections.push(CorrectionRecord {
                epoch_index: epoch,
                applied_correction_s: applied,
                pre_correction_error_s: pre,
                residual_error_s: pre - applied,
            });
            clock = clock.apply_correction(applied);
        }
    }
    log.final_node_n = Some(clock);
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::build_bias_lut;
    use crate::rng::rng_from_seed;
    use crate::stats;
    use rand::Rng;

    const NS: f64 = 1e-9;
    const PS: f64 = 1e-12;

    /// Node 0 is the reference; node n's clock reads `eps1` fast on the
    /// forward leg and `eps2` fast on the reverse leg.
    fn forward_quad(t_txn: f64, eps1: f64, eps2: f64, tau: f64, proc: f64) -> TimestampQuadruple {
        let t_rx0 = (t_txn - eps1) + tau;
        let t_tx0 = t_rx0 + proc;
        let t_rxn = t_tx0 + tau + eps2;
        TimestampQuadruple::new(t_txn, t_rx0, t_tx0, t_rxn)
    }

    fn lut() -> BiasLut {
        build_bias_lut(&WaveformSpec::default(), 1024).unwrap()
    }

    #[test]
    fn offset_and_delay_examples() {
        let q = TimestampQuadruple::new(0.0, 3.0 * NS, 10.0 * NS, 13.0 * NS);
        assert_eq!(compute_offset(&q), 0.0);
        assert!((compute_delay(&q) - 3.0 * NS).abs() < 1e-24);

        let q = TimestampQuadruple::new(0.0, -2.0 * NS, 10.0 * NS, 18.0 * NS);
        assert!((compute_offset(&q) + 5.0 * NS).abs() < 1e-24);
        assert!((compute_delay(&q) - 3.0 * NS).abs() < 1e-24);
        let fwd = forward_quad(0.0, 5.0 * NS, 5.0 * NS, 3.0 * NS, 12.0 * NS);
        for (a, b) in [
            (q.t_txn_s, fwd.t_txn_s),
            (q.t_rx0_s, fwd.t_rx0_s),
            (q.t_tx0_s, fwd.t_tx0_s),
            (q.t_rxn_s, fwd.t_rxn_s),
        ] {
            assert!((a - b).abs() < 1e-20);
        }
    }

    #[test]
    fn shifting_node_n_clock_shifts_offset() {
        let q = forward_quad(1.0, 2.0 * NS, 2.0 * NS, 3.0 * NS, 1e-3);
        let c = 0.7 * NS;
        let shifted = TimestampQuadruple {
            t_txn_s: q.t_txn_s + c,
            t_rxn_s: q.t_rxn_s + c,
            ..q
        };
        assert!((compute_offset(&shifted) - (compute_offset(&q) - c)).abs() < 1e-15);
        assert!((compute_delay(&shifted) - compute_delay(&q)).abs() < 1e-15);
    }

    #[test]
    fn zero_delay_cancels_any_offset() {
        for eps in [-9.0 * NS, 0.0, 4.2 * NS] {
            let q = forward_quad(0.0, eps, eps, 0.0, 1e-6);
            assert!(compute_delay(&q).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_identity_on_random_quads() {
        let mut rng = rng_from_seed(5);
        for _ in 0..1000 {
            let q = TimestampQuadruple::new(
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
            );
            let lhs = compute_offset(&q) + compute_delay(&q);
            let rhs = q.t_rx0_s - q.t_txn_s;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-14);
        }
    }

    #[test]
    fn delay_and_offset_invariances() {
        let base = forward_quad(0.5, 3.0 * NS, 3.0 * NS, 2.0 * NS, 1e-3);
        let longer = forward_quad(0.5, 3.0 * NS, 3.0 * NS, 7.0 * NS, 1e-3);
        assert!((compute_offset(&base) - compute_offset(&longer)).abs() < 1e-15);
        let other_clock = forward_quad(0.5, -NS, -NS, 2.0 * NS, 1e-3);
        assert!((compute_delay(&base) - compute_delay(&other_clock)).abs() < 1e-15);
    }

    #[test]
    fn clock_step_between_legs_biases_by_half_the_step() {
        let step = 2.0 * NS;
        let steady = forward_quad(0.0, 1.0 * NS, 1.0 * NS, 3.0 * NS, 1e-3);
        let stepped = forward_quad(0.0, 1.0 * NS, 1.0 * NS + step, 3.0 * NS, 1e-3);
        let bias = compute_offset(&stepped) - compute_offset(&steady);
        assert!((bias + step / 2.0).abs() < 1e-18);
    }

    #[test]
    fn noiseless_trivial_exchange() {
        let spec = WaveformSpec::default();
        let ch = ChannelModel::noiseless(0.0);
        let zero = BiasLut::zeros(spec.clone(), 64).unwrap();
        let r = run_exchange(
            &ClockState::reference(),
            &ClockState::reference(),
            &ch,
            &spec,
            &zero,
            &EpochSchedule::default(),
            0,
            1,
        )
        .unwrap();
        assert!(r.offset_estimate_s.abs() < 1e-15, "{:e}", r.offset_estimate_s);
        assert!(r.delay_estimate_s.abs() < 1e-15, "{:e}", r.delay_estimate_s);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn noiseless_exchange_recovers_offset_and_delay() {
        let spec = WaveformSpec::default();
        let lut = lut();
        for (delta, tau) in [(5.0 * NS, 3.0 * NS), (-2.3 * NS, 11.17 * NS)] {
            let r = run_exchange(
                &ClockState::with_offset(delta),
                &ClockState::reference(),
                &ChannelModel::noiseless(tau),
                &spec,
                &lut,
                &EpochSchedule::default(),
                3,
                9,
            )
            .unwrap();
            assert!((r.offset_estimate_s + delta).abs() < PS, "{:e}", r.offset_estimate_s);
            assert!((r.delay_estimate_s - tau).abs() < PS, "{:e}", r.delay_estimate_s);
            assert_eq!(r.true_offset_s, -delta);
            // One-way residuals are consistent with the estimates.
            let q = r.quad;
            let fwd = (q.t_rx0_s - q.t_txn_s) - (r.delay_estimate_s + r.offset_estimate_s);
            let rev = (q.t_rxn_s - q.t_tx0_s) - (r.delay_estimate_s - r.offset_estimate_s);
            assert!(fwd.abs() < PS && rev.abs() < PS);
        }
    }

    #[test]
    fn exchange_rejects_mismatched_lut_and_asymmetric_link() {
        let spec = WaveformSpec::default();
        let other = BiasLut::zeros(WaveformSpec::lfm(40e6), 64).unwrap();
        let node = ClockState::reference();
        let sched = EpochSchedule::default();
        let ch = ChannelModel::default();
        assert!(run_exchange(&node, &node, &ch, &spec, &other, &sched, 0, 0).is_err());
        let asym = ChannelModel {
            symmetric: false,
            ..ch
        };
        let zero = BiasLut::zeros(spec.clone(), 64).unwrap();
        assert!(run_exchange(&node, &node, &asym, &spec, &zero, &sched, 0, 0).is_err());
    }

    #[test]
    fn offset_beyond_the_guard_aborts_with_window_overrun() {
        let spec = WaveformSpec::default();
        let zero = BiasLut::zeros(spec.clone(), 64).unwrap();
        let err = run_exchange(
            &ClockState::with_offset(-5e-6),
            &ClockState::reference(),
            &ChannelModel::noiseless(3e-9),
            &spec,
            &zero,
            &EpochSchedule::default(),
            0,
            0,
        )
        .unwrap_err();
        match err {
            Error::ExchangeAborted { leg, source } => {
                assert_eq!(leg, "forward");
                assert!(matches!(*source, Error::WindowOverrun { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn processing_delay_does_not_matter() {
        let lut = lut();
        let ch = ChannelModel {
            snr_db: 36.0,
            ..ChannelModel::default()
        };
        let node_n = ClockState::with_offset(5.0 * NS);
        let mut errs = Vec::new();
        for (i, proc) in [0.0, 1e-6, 1e-3, 5e-3, 10e-3].into_iter().enumerate() {
            let sched = EpochSchedule {
                proc_delay_s: proc,
                ..EpochSchedule::default()
            };
            let link = TwoWayLink::new(ch.clone(), lut.clone(), sched).unwrap();
            // Same seed: identical noise, only the reply time moves.
            let r = link.exchange(&node_n, &ClockState::reference(), 0, 0, 77).unwrap();
            errs.push((i, r.offset_error_s(), r.delay_estimate_s - r.true_delay_s));
        }
        for (_, e_off, e_del) in &errs[1..] {
            assert!((e_off - errs[0].1).abs() < 0.1 * PS);
            assert!((e_del - errs[0].2).abs() < 0.1 * PS);
        }
    }

    #[test]
    fn measured_snr_tracks_channel() {
        let link = TwoWayLink::new(ChannelModel::default(), lut(), EpochSchedule::default()).unwrap();
        let r = link
            .exchange(&ClockState::with_offset(5.0 * NS), &ClockState::reference(), 0, 0, 4)
            .unwrap();
        assert!((r.snr_forward_db - 36.0).abs() < 1.0, "{}", r.snr_forward_db);
        assert!((r.snr_reverse_db - 36.0).abs() < 1.0, "{}", r.snr_reverse_db);
    }

    #[test]
    fn perfect_campaign_holds_zero_residual() {
        let link = TwoWayLink::new(ChannelModel::noiseless(3e-9), lut(), EpochSchedule::default()).unwrap();
        let log = run_campaign(
            &ClockState::with_offset(5.0 * NS),
            &ClockState::reference(),
            &link,
            10,
            3,
        )
        .unwrap();
        assert_eq!(log.corrections.len(), 10);
        assert!(log.failures.is_empty());
        assert!((log.corrections[0].pre_correction_error_s - 5.0 * NS).abs() < 1e-18);
        for c in &log.corrections {
            assert!(c.residual_error_s.abs() < PS, "{c:?}");
        }
        for c in &log.corrections[1..] {
            assert!(c.pre_correction_error_s.abs() < PS, "{c:?}");
        }
    }

    #[test]
    fn drift_accumulates_between_corrections() {
        let link = TwoWayLink::new(ChannelModel::noiseless(3e-9), lut(), EpochSchedule::default()).unwrap();
        let node_n = ClockState {
            frac_freq_error: 1e-9,
            ..ClockState::with_offset(2.0 * NS)
        };
        let log = run_campaign(&node_n, &ClockState::reference(), &link, 8, 1).unwrap();
        for c in &log.corrections[1..] {
            assert!((c.pre_correction_error_s - 0.1 * NS).abs() < 2.0 * PS, "{c:?}");
        }
    }

    #[test]
    fn campaign_is_deterministic() {
        let link = TwoWayLink::new(ChannelModel::default(), lut(), EpochSchedule::default()).unwrap();
        let node_n = ClockState::with_offset(1.0 * NS);
        let a = run_campaign(&node_n, &ClockState::reference(), &link, 5, 12).unwrap();
        let b = run_campaign(&node_n, &ClockState::reference(), &link, 5, 12).unwrap();
        assert_eq!(a, b);
        assert!(run_campaign(&node_n, &ClockState::reference(), &link, 0, 12).is_err());
    }

    #[test]
    fn campaign_residual_std_matches_single_exchange_std() {
        let lut = lut();
        let link = TwoWayLink::new(ChannelModel::default(), lut, EpochSchedule::default()).unwrap();
        let node_n = ClockState::with_offset(5.0 * NS);
        let node_0 = ClockState::reference();
        let log = run_campaign(&node_n, &node_0, &link, 1000, 21).unwrap();
        let residuals: Vec<f64> = log.corrections.iter().map(|c| c.residual_error_s).collect();
        let single: Vec<f64> = (0..1000)
            .map(|i| link.exchange(&node_n, &node_0, 0, 0, 10_000 + i).unwrap().offset_error_s())
            .collect();
        let (a, b) = (
            stats::sample_std(&residuals).unwrap(),
            stats::sample_std(&single).unwrap(),
        );
        assert!((a / b - 1.0).abs() < 0.25, "campaign {a:e} vs single {b:e}");
    }
}
