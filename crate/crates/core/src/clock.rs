//! Node clocks: local time = true time + quasi-static offset + linear drift
//! + white timestamp jitter.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A node's mapping from true (reference) time to local time.
///
/// Drift accumulates from the simulation origin `t = 0`. Node 0 is the
/// reference: zero offset and zero frequency error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockState {
    pub offset_s: f64,
    /// Dimensionless, e.g. 1e-9 for 1 ppb.
    pub frac_freq_error: f64,
    /// Standard deviation of the white jitter added to each timestamp read.
    pub jitter_std_s: f64,
    pub rng_seed: u64,
}

impl Default for ClockState {
    fn default() -> Self {
        Self::reference()
    }
}

/// Per-timestamp jitter emulating a cabled 10 MHz reference.
pub const CABLED_JITTER_S: f64 = 0.0;

/// Per-timestamp jitter emulating over-the-air frequency syntonization.
/// Calibrated so the offset estimate shows a ~10 ps precision floor at high
/// SNR; not a measured oscillator value.
pub const WIRELESS_JITTER_S: f64 = 10e-12;

impl ClockState {
    pub fn reference() -> Self {
        Self {
            offset_s: 0.0,
            frac_freq_error: 0.0,
            jitter_std_s: 0.0,
            rng_seed: 0,
        }
    }

    pub fn with_offset(offset_s: f64) -> Self {
        Self {
            offset_s,
            ..Self::reference()
        }
    }

    pub fn is_reference(&self) -> bool {
        self.offset_s == 0.0 && self.frac_freq_error == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_std_s.is_finite() && self.jitter_std_s >= 0.0) {
            return Err(Error::param("jitter_std_s", "must be finite and >= 0"));
        }
        if !self.offset_s.is_finite() {
            return Err(Error::param("offset_s", "must be finite"));
        }
        if !(self.frac_freq_error.is_finite() && self.frac_freq_error.abs() < 1e-3) {
            return Err(Error::param(
                "frac_freq_error",
                "must be finite with magnitude < 1e-3",
            ));
        }
        Ok(())
    }

    /// Jitter-free clock error ε(t) = offset + ffe·t.
    pub fn error_at(&self, t_true: f64) -> f64 {
        self.offset_s + self.frac_freq_error * t_true
    }

    /// The `draw`-th jitter sample of this clock under exchange seed `seed`.
    /// Deterministic in (rng_seed, seed, draw).
    pub fn jitter(&self, seed: u64, draw: u64) -> f64 {
        if self.jitter_std_s == 0.0 {
            return 0.0;
        }
        let mut rng = rng::rng_for(self.rng_seed, &[seed, draw]);
        let z: f64 = StandardNormal.sample(&mut rng);
        self.jitter_std_s * z
    }

    /// Local reading at true time `t_true`, including the jitter draw
    /// identified by (`seed`, `draw`).
    pub fn local_from_true(&self, t_true: f64, seed: u64, draw: u64) -> f64 {
        t_true + self.error_at(t_true) + self.jitter(seed, draw)
    }

    /// Inverse of the jitter-free part of [`Self::local_from_true`].
    pub fn true_from_local(&self, t_local: f64) -> f64 {
        let x = t_local - self.offset_s;
        // x / (1 + ffe), written as a small correction to x so that a round
        // trip through local time stays within an ulp of the input.
        x - x * self.frac_freq_error / (1.0 + self.frac_freq_error)
    }

    /// True time at which an event scheduled for local time `t_local`
    /// actually happens, given the clock's jitter on that read.
    pub fn event_true_time(&self, t_local: f64, seed: u64, draw: u64) -> f64 {
        self.true_from_local(t_local) - self.jitter(seed, draw)
    }

    /// Steps the clock back by `delta_s`: a correction equal to the clock's
    /// current error drives the residual offset to zero. `self` is unchanged.
    #[must_use]
    pub fn apply_correction(&self, delta_s: f64) -> Self {
        Self {
            offset_s: self.offset_s - delta_s,
            ..self.clone()
        }
    }
}

/// One applied two-way correction and its ground-truth outcome. Errors are
/// node n's clock minus node 0's clock, i.e. the negated offset Δ_0n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionRecord {
    pub epoch_index: u64,
    /// Estimated error (-Δ̂_0n) stepped out of node n's clock.
    pub applied_correction_s: f64,
    /// True error at the exchange, before the correction.
    pub pre_correction_error_s: f64,
    /// True error at the exchange once the correction is applied.
    pub residual_error_s: f64,
}
