//! Cramér–Rao bound on delay estimation: mean-squared bandwidth, E_s/N₀,
//! and the resulting standard-deviation floor.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::SampledSignal;
use crate::waveform::{WaveformKind, WaveformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrlbPoint {
    /// Mean-squared bandwidth ζ², rad²/s².
    pub zeta_sq: f64,
    pub es_n0: f64,
    pub var_bound_s2: f64,
    pub std_bound_s: f64,
}

impl CrlbPoint {
    pub fn new(zeta_sq: f64, es_n0: f64) -> Self {
        let var = 1.0 / (2.0 * zeta_sq * es_n0);
        Self {
            zeta_sq,
            es_n0,
            var_bound_s2: var,
            std_bound_s: var.sqrt(),
        }
    }

    /// Bound for the pulse described by `spec` at `snr_db`, with the noise
    /// bandwidth taken as the complex sample rate.
    pub fn for_waveform(spec: &WaveformSpec, snr_db: f64) -> Self {
        Self::new(
            msb_closed_form(spec.kind, spec.bandwidth_hz),
            es_n0(spec.pulse_duration_s, snr_db, spec.sample_rate_hz),
        )
    }
}

/// ζ² of the ideal line spectrum: (πB)² for two tones at ±B/2, (πB)²/3
/// for a flat LFM band.
pub fn msb_closed_form(kind: WaveformKind, bw_hz: f64) -> f64 {
    let two_tone = (PI * bw_hz).powi(2);
    match kind {
        WaveformKind::TwoTone => two_tone,
        WaveformKind::Lfm => two_tone / 3.0,
    }
}

/// ζ² = ∫(2πf)²|G(f)|²df / ∫|G(f)|²df from a 4× zero-padded DFT, over the
/// sampled band [-f_s/2, f_s/2).
pub fn msb_numeric(signal: &SampledSignal) -> Result<f64> {
    let n = (4 * signal.len()).next_power_of_two();
    let spec = fft::spectrum(signal.samples(), n);
    let fs = signal.sample_rate_hz();
    let mut power = Vec::with_capacity(n);
    let mut moment = Vec::with_capacity(n);
    for (k, x) in spec.iter().enumerate() {
        let w = 2.0 * PI * fft::bin_frequency(k, n) * fs;
        let p = x.norm_sqr();
        power.push(p);
        moment.push(w * w * p);
    }
    let total = crate::stats::pairwise_sum(&power);
    if total == 0.0 {
        return Err(Error::param("signal", "zero energy"));
    }
    Ok(crate::stats::pairwise_sum(&moment) / total)
}

/// E_s/N₀ = τ_p · 10^(SNR/10) · NBW.
pub fn es_n0(tau_p_s: f64, snr_db: f64, nbw_hz: f64) -> f64 {
    tau_p_s * 10f64.powf(snr_db / 10.0) * nbw_hz
}

/// sqrt(1 / (2 ζ² E_s/N₀)): single-pulse delay standard deviation bound.
pub fn crlb_std(zeta_sq: f64, es_n0: f64) -> f64 {
    (1.0 / (2.0 * zeta_sq * es_n0)).sqrt()
}

/// Bound on the clock-offset estimate of one two-way exchange. The offset
/// averages two independent one-way delay estimates, so its variance is
/// half the single-pulse bound.
pub fn offset_crlb_std(spec: &WaveformSpec, snr_db: f64) -> f64 {
    CrlbPoint::for_waveform(spec, snr_db).std_bound_s / 2f64.sqrt()
}
