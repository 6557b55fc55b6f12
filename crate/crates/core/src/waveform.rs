//! Pulsed two-tone and LFM complex baseband waveforms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformKind {
    /// Two equal-amplitude tones at ±bandwidth/2.
    TwoTone,
    /// Linear chirp sweeping -bandwidth/2 → +bandwidth/2 over the pulse.
    Lfm,
}

impl WaveformKind {
    pub fn label(self) -> &'static str {
        match self {
            WaveformKind::TwoTone => "two-tone",
            WaveformKind::Lfm => "lfm",
        }
    }
}

impl std::str::FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-tone" => Ok(WaveformKind::TwoTone),
            "lfm" => Ok(WaveformKind::Lfm),
            other => Err(Error::param("kind", format!("unknown waveform kind `{other}`"))),
        }
    }
}

/// Pulse parameters. Defaults are the 5.8 GHz time-transfer waveform of the
/// laboratory setup: 40 MHz tone separation, 10 µs pulse, 50 ns edges,
/// 200 MSa/s receive rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSpec {
    pub kind: WaveformKind,
    /// Tone separation (two-tone) or sweep extent (LFM).
    pub bandwidth_hz: f64,
    pub pulse_duration_s: f64,
    pub rise_fall_s: f64,
    pub sample_rate_hz: f64,
    /// RMS amplitude of the constant-envelope interior.
    pub amplitude: f64,
}

impl Default for WaveformSpec {
    fn default() -> Self {
        Self {
            kind: WaveformKind::TwoTone,
            bandwidth_hz: 40e6,
            pulse_duration_s: 10e-6,
            rise_fall_s: 50e-9,
            sample_rate_hz: 200e6,
            amplitude: 1.0,
        }
    }
}

impl WaveformSpec {
    pub fn two_tone(bandwidth_hz: f64) -> Self {
        Self {
            kind: WaveformKind::TwoTone,
            bandwidth_hz,
            ..Self::default()
        }
    }

    pub fn lfm(bandwidth_hz: f64) -> Self {
        Self {
            kind: WaveformKind::Lfm,
            bandwidth_hz,
            ..Self::default()
        }
    }

    pub fn with_kind(mut self, kind: WaveformKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_pulse_duration(mut self, pulse_duration_s: f64) -> Self {
        self.pulse_duration_s = pulse_duration_s;
        self
    }

    pub fn with_rise_fall(mut self, rise_fall_s: f64) -> Self {
        self.rise_fall_s = rise_fall_s;
        self
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// round(τ_p · f_s), ties to even.
    pub fn sample_count(&self) -> usize {
        (self.pulse_duration_s * self.sample_rate_hz).round_ties_even() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("pulse_duration_s", self.pulse_duration_s)?;
        positive("amplitude", self.amplitude)?;
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz >= 0.0) {
            return Err(Error::param(
                "bandwidth_hz",
                format!("must be finite and >= 0, got {}", self.bandwidth_hz),
            ));
        }
        if self.bandwidth_hz >= self.sample_rate_hz {
            return Err(Error::param(
                "bandwidth_hz",
                format!(
                    "{} Hz is not representable at {} Sa/s complex baseband",
                    self.bandwidth_hz, self.sample_rate_hz
                ),
            ));
        }
        if !(self.rise_fall_s.is_finite() && self.rise_fall_s >= 0.0) {
            return Err(Error::param("rise_fall_s", "must be finite and >= 0"));
        }
        if self.rise_fall_s > self.pulse_duration_s / 2.0 {
            return Err(Error::param(
                "rise_fall_s",
                format!(
                    "{} s exceeds half the {} s pulse",
                    self.rise_fall_s, self.pulse_duration_s
                ),
            ));
        }
        if self.sample_count() < 3 {
            return Err(Error::param(
                "pulse_duration_s",
                "pulse must span at least 3 samples",
            ));
        }
        Ok(())
    }
}

/// Synthesizes one pulse with its raised-cosine edges applied. Both tones of
/// a two-tone pulse start at zero phase on sample 0.
pub fn synthesize(spec: &WaveformSpec) -> Result<SampledSignal> {
    spec.validate()?;
    let n = spec.sample_count();
    let ts = spec.sample_period_s();
    let half_bw = spec.bandwidth_hz / 2.0;
    let samples: Vec<Complex64> = match spec.kind {
        WaveformKind::TwoTone => {
            // Each tone carries half the power so the pulse RMS equals `amplitude`.
            let a = spec.amplitude / 2f64.sqrt();
            (0..n)
                .map(|k| {
                    let phase = 2.0 * PI * half_bw * k as f64 * ts;
                    Complex64::from_polar(a, phase) + Complex64::from_polar(a, -phase)
                })
                .collect()
        }
        WaveformKind::Lfm => {
            let chirp_rate = spec.bandwidth_hz / (n as f64 * ts);
            (0..n)
                .map(|k| {
                    let t = k as f64 * ts;
                    let phase = 2.0 * PI * (-half_bw * t + 0.5 * chirp_rate * t * t);
                    Complex64::from_polar(spec.amplitude, phase)
                })
                .collect()
        }
    };
    let pulse = SampledSignal::new(samples, spec.sample_rate_hz, 0.0)?;
    apply_envelope(pulse, spec.rise_fall_s)
}

/// Raised-cosine weight for a sample `t` seconds after the pulse edge.
fn ramp_weight(t: f64, rise_fall_s: f64) -> f64 {
    if t >= rise_fall_s {
        1.0
    } else {
        0.5 * (1.0 - (PI * t / rise_fall_s).cos())
    }
}

/// Tapers the first and last `rise_fall_s` of the signal with raised-cosine
/// ramps. The taper is mirror-symmetric: sample k and sample n-1-k get the
/// same weight.
pub fn apply_envelope(signal: SampledSignal, rise_fall_s: f64) -> Result<SampledSignal> {
    if !(rise_fall_s.is_finite() && rise_fall_s >= 0.0) {
        return Err(Error::param("rise_fall_s", "must be finite and >= 0"));
    }
    if rise_fall_s > signal.duration_s() / 2.0 {
        return Err(Error::param(
            "rise_fall_s",
            format!(
                "ramp of {rise_fall_s} s is longer than half the {} s pulse",
                signal.duration_s()
            ),
        ));
    }
    if rise_fall_s == 0.0 {
        return Ok(signal);
    }
    let fs = signal.sample_rate_hz();
    let start = signal.start_time_s();
    let mut samples = signal.into_samples();
    let n = samples.len();
    for (k, x) in samples.iter_mut().enumerate() {
        let edge_distance = k.min(n - 1 - k) as f64 / fs;
        *x *= ramp_weight(edge_distance, rise_fall_s);
    }
    SampledSignal::new(samples, fs, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum_db(signal: &SampledSignal) -> Vec<f64> {
        let mut buf = signal.samples().to_vec();
        crate::fft::forward(&mut buf);
        let peak = buf.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
        buf.iter()
            .map(|x| 10.0 * (x.norm_sqr() / peak).log10())
            .collect()
    }

    #[test]
    fn table_one_two_tone_has_2000_samples() {
        let s = synthesize(&WaveformSpec::two_tone(40e6)).unwrap();
        assert_eq!(s.len(), 2000);
        assert_eq!(s.sample_rate_hz(), 200e6);
    }

    #[test]
    fn sample_count_rounds_half_to_even() {
        let mut spec = WaveformSpec {
            sample_rate_hz: 1.0,
            pulse_duration_s: 4.5,
            rise_fall_s: 0.0,
            ..WaveformSpec::default()
        };
        assert_eq!(spec.sample_count(), 4);
        spec.pulse_duration_s = 5.5;
        assert_eq!(spec.sample_count(), 6);
    }

    #[test]
    fn zero_bandwidth_two_tone_is_single_line_at_dc() {
        let spec = WaveformSpec::two_tone(0.0).with_rise_fall(0.0);
        let s = synthesize(&spec).unwrap();
        let db = spectrum_db(&s);
        let strong: Vec<usize> = (0..db.len()).filter(|&k| db[k] > -40.0).collect();
        assert_eq!(strong, vec![0]);
    }

    #[test]
    fn two_tone_spectrum_has_two_lines_at_band_edges() {
        let spec = WaveformSpec::two_tone(40e6).with_rise_fall(0.0);
        let s = synthesize(&spec).unwrap();
        let n = s.len();
        let db = spectrum_db(&s);
        let strong: Vec<usize> = (0..n).filter(|&k| db[k] > -40.0).collect();
        assert_eq!(strong.len(), 2);
        let bin_hz = s.sample_rate_hz() / n as f64;
        let mut freqs: Vec<f64> = strong
            .iter()
            .map(|&k| crate::fft::bin_frequency(k, n) * s.sample_rate_hz())
            .collect();
        freqs.sort_by(f64::total_cmp);
        assert!((freqs[0] + 20e6).abs() <= bin_hz);
        assert!((freqs[1] - 20e6).abs() <= bin_hz);
    }

    #[test]
    fn lfm_instantaneous_frequency_is_zero_mid_pulse() {
        let spec = WaveformSpec::lfm(40e6);
        let s = synthesize(&spec).unwrap();
        let x = s.samples();
        let mid = s.len() / 2;
        // Central difference of the unwrapped phase; exact for quadratic phase.
        let dphi = (x[mid + 1] * x[mid - 1].conj()).arg();
        let f_inst = dphi / (2.0 * s.sample_period_s()) / (2.0 * PI);
        assert!(f_inst.abs() < 1e-6 * spec.bandwidth_hz, "f_inst = {f_inst}");

        // And the sweep starts at the lower band edge (no ramp, so sample 0
        // carries phase).
        let raw = synthesize(&spec.clone().with_rise_fall(0.0)).unwrap();
        let x = raw.samples();
        let f_start = (x[2] * x[0].conj()).arg() / (2.0 * s.sample_period_s()) / (2.0 * PI);
        assert!((f_start + 20e6).abs() < 0.01 * spec.bandwidth_hz);
    }

    #[test]
    fn zero_ramp_is_identity() {
        let s = synthesize(&WaveformSpec::lfm(40e6).with_rise_fall(0.0)).unwrap();
        assert_eq!(apply_envelope(s.clone(), 0.0).unwrap(), s);
    }

    #[test]
    fn fifty_ns_ramp_rises_monotonically_over_ten_samples() {
        let raw = synthesize(&WaveformSpec::lfm(40e6).with_rise_fall(0.0)).unwrap();
        let s = apply_envelope(raw.clone(), 50e-9).unwrap();
        let mag: Vec<f64> = s.samples().iter().map(|x| x.norm()).collect();
        for k in 0..10 {
            assert!(mag[k + 1] > mag[k], "sample {k}");
        }
        // Interior untouched, output length unchanged.
        assert_eq!(s.len(), raw.len());
        for k in 10..s.len() - 10 {
            assert_eq!(s.samples()[k], raw.samples()[k]);
        }
        // Midpoint of the ramp sits at half amplitude.
        assert!((mag[5] - 0.5).abs() < 1e-9);
        // Mirror-symmetric taper.
        let n = s.len();
        for k in 0..12 {
            assert!((mag[k] - mag[n - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_longer_than_half_pulse_is_rejected() {
        let raw = synthesize(&WaveformSpec::lfm(40e6).with_rise_fall(0.0)).unwrap();
        assert!(matches!(
            apply_envelope(raw, 6e-6),
            Err(Error::Parameter { name: "rise_fall_s", .. })
        ));
        let spec = WaveformSpec::two_tone(40e6).with_rise_fall(6e-6);
        assert!(synthesize(&spec).is_err());
    }

    #[test]
    fn invalid_specs_name_the_violated_field() {
        let bad = WaveformSpec::two_tone(250e6);
        assert!(matches!(
            synthesize(&bad),
            Err(Error::Parameter { name: "bandwidth_hz", .. })
        ));
        let bad = WaveformSpec {
            amplitude: 0.0,
            ..WaveformSpec::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::Parameter { name: "amplitude", .. })
        ));
    }

    #[test]
    fn energy_scales_with_pulse_duration() {
        let e10 = synthesize(&WaveformSpec::two_tone(40e6)).unwrap().energy();
        let e20 = synthesize(&WaveformSpec::two_tone(40e6).with_pulse_duration(20e-6))
            .unwrap()
            .energy();
        assert!((e20 / e10 / 2.0 - 1.0).abs() < 0.005);
    }

    #[test]
    fn two_tone_and_lfm_carry_equal_energy() {
        let tt = synthesize(&WaveformSpec::two_tone(40e6)).unwrap().energy();
        let lfm = synthesize(&WaveformSpec::lfm(40e6)).unwrap().energy();
        assert!((tt / lfm - 1.0).abs() < 0.01, "{tt} vs {lfm}");
    }
}
