//! Sub-sample delay estimation: matched filter, coarse peak, parabolic (QLS)
//! refinement, bias lookup table, and pulse SNR measurement.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::fft;
use crate::signal::SampledSignal;
use crate::waveform::{synthesize, WaveformSpec};

/// Matched-filter magnitude per lag. `metric[lag_zero_index + k]` is the
/// correlation with the reference starting at rx sample `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterOutput {
    pub metric: Vec<f64>,
    pub lag_zero_index: usize,
    pub sample_rate_hz: f64,
}

impl MatchedFilterOutput {
    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

/// Scale on which the parabola is fitted to the three samples around the
/// peak.
///
/// `Log` fits ln|r|, which is exact for a Gaussian-shaped peak and gives the
/// smaller residual bias on both pulse types; it is what the delay
/// estimator uses. `Linear` is the textbook fit on |r|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakScale {
    Linear,
    #[default]
    Log,
}

impl PeakScale {
    pub fn label(self) -> &'static str {
        match self {
            PeakScale::Linear => "linear",
            PeakScale::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayEstimate {
    pub coarse_index: usize,
    /// QLS delay from the start of the rx window.
    pub refined_delay_s: f64,
    /// `refined_delay_s` minus the tabulated bias.
    pub corrected_delay_s: f64,
    pub peak_metric: f64,
}

/// Correlates `rx` against `tx_ref` at every lag where the reference fits
/// entirely inside `rx`.
pub fn matched_filter(rx: &SampledSignal, tx_ref: &SampledSignal) -> Result<MatchedFilterOutput> {
    if rx.sample_rate_hz() != tx_ref.sample_rate_hz() {
        return Err(Error::param(
            "tx_ref",
            format!(
                "sample rate {} Hz differs from rx rate {} Hz",
                tx_ref.sample_rate_hz(),
                rx.sample_rate_hz()
            ),
        ));
    }
    if rx.len() < tx_ref.len() {
        return Err(Error::param(
            "rx",
            format!("{} samples is shorter than the {}-sample reference", rx.len(), tx_ref.len()),
        ));
    }
    let m = (rx.len() + tx_ref.len()).next_power_of_two();
    let mut prod = fft::spectrum(rx.samples(), m);
    let reference = fft::spectrum(tx_ref.samples(), m);
    for (r, t) in prod.iter_mut().zip(&reference) {
        *r *= t.conj();
    }
    fft::inverse(&mut prod);
    let lags = rx.len() - tx_ref.len() + 1;
    Ok(MatchedFilterOutput {
        metric: prod[..lags].iter().map(|c| c.norm()).collect(),
        lag_zero_index: 0,
        sample_rate_hz: rx.sample_rate_hz(),
    })
}

/// Index of the largest metric value, lowest index on ties.
pub fn coarse_peak(mf: &MatchedFilterOutput) -> Result<usize> {
    let len = mf.metric.len();
    if len == 0 {
        return Err(Error::param("metric", "empty"));
    }
    let mut best = 0;
    for (i, &v) in mf.metric.iter().enumerate() {
        if v > mf.metric[best] {
            best = i;
        }
    }
    if best == 0 || best == len - 1 {
        return Err(Error::PeakAtBoundary { index: best, len });
    }
    Ok(best)
}

/// Vertex of the parabola through (-1, a), (0, b), (1, c), in samples.
pub fn parabola_vertex(a: f64, b: f64, c: f64) -> Option<f64> {
    let denom = a - 2.0 * b + c;
    (denom < 0.0).then(|| 0.5 * (a - c) / denom)
}

/// Refined delay (seconds from lag zero) of the peak at `n_max`.
pub fn qls_refine(mf: &MatchedFilterOutput, n_max: usize, scale: PeakScale) -> Result<f64> {
    let len = mf.metric.len();
    if n_max == 0 || n_max + 1 >= len {
        return Err(Error::PeakAtBoundary { index: n_max, len });
    }
    let pick = |i: usize| match scale {
        PeakScale::Linear => mf.metric[i],
        PeakScale::Log => mf.metric[i].ln(),
    };
    let (a, b, c) = (pick(n_max - 1), pick(n_max), pick(n_max + 1));
    let frac = if a.is_finite() && b.is_finite() && c.is_finite() {
        parabola_vertex(a, b, c)
    } else {
        None
    };
    let frac = frac.ok_or(Error::FlatPeak { index: n_max })?;
    let lag = n_max as f64 - mf.lag_zero_index as f64;
    Ok((lag + frac) * mf.sample_period_s())
}

/// Residual QLS bias tabulated over one sample interval of true delay.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasLut {
    waveform: WaveformSpec,
    peak_scale: PeakScale,
    /// (fractional delay in [0, 1), bias in seconds), uniformly spaced.
    bins: Vec<(f64, f64)>,
}

const LUT_HEADER: &str = "twtt-bias-lut 1";
pub const MIN_LUT_BINS: usize = 64;
pub const DEFAULT_LUT_BINS: usize = 1024;

/// Samples of zero padding around the pulse when tabulating bias; enough
/// for the peak's neighbours to be valid lags.
const LUT_GUARD: usize = 16;

impl BiasLut {
    pub fn from_bias(waveform: WaveformSpec, peak_scale: PeakScale, bias_s: Vec<f64>) -> Result<Self> {
        if bias_s.len() < MIN_LUT_BINS {
            return Err(Error::param(
                "bin_count",
                format!("{} bins; at least {MIN_LUT_BINS} required", bias_s.len()),
            ));
        }
        if let Some(i) = bias_s.iter().position(|b| !b.is_finite()) {
            return Err(Error::param("bias_s", format!("bin {i} is not finite")));
        }
        let n = bias_s.len() as f64;
        let bins = bias_s
            .into_iter()
            .enumerate()
            .map(|(i, b)| (i as f64 / n, b))
            .collect();
        Ok(Self {
            waveform,
            peak_scale,
            bins,
        })
    }

    /// Table with zero bias everywhere; correction becomes the identity.
    pub fn zeros(waveform: WaveformSpec, bin_count: usize) -> Result<Self> {
        Self::from_bias(waveform, PeakScale::default(), vec![0.0; bin_count])
    }

    pub fn waveform(&self) -> &WaveformSpec {
        &self.waveform
    }

    pub fn peak_scale(&self) -> PeakScale {
        self.peak_scale
    }

    pub fn bins(&self) -> &[(f64, f64)] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Linearly interpolated bias at fractional delay `frac`, wrapping
    /// modulo one sample.
    pub fn bias_at(&self, frac: f64) -> f64 {
        let n = self.bins.len();
        let pos = frac.rem_euclid(1.0) * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        let w = pos - i as f64;
        let lo = self.bins[i].1;
        if w == 0.0 {
            return lo;
        }
        let hi = self.bins[(i + 1) % n].1;
        lo + w * (hi - lo)
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "{LUT_HEADER}");
        let _ = writeln!(out, "waveform {}", serde_json::to_string(&self.waveform)?);
        let _ = writeln!(out, "peak_scale {}", self.peak_scale.label());
        let _ = writeln!(out, "bins {}", self.bins.len());
        for (f, b) in &self.bins {
            let _ = writeln!(out, "{f:.16e} {b:.16e}");
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::LutFormat(msg.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(LUT_HEADER) {
            return Err(bad("missing or unsupported version header"));
        }
        let waveform = lines
            .next()
            .and_then(|l| l.strip_prefix("waveform "))
            .ok_or_else(|| bad("missing waveform line"))?;
        let waveform: WaveformSpec = serde_json::from_str(waveform)?;
        let peak_scale = match lines.next().and_then(|l| l.strip_prefix("peak_scale ")) {
            Some("linear") => PeakScale::Linear,
            Some("log") => PeakScale::Log,
            _ => return Err(bad("missing or unknown peak_scale")),
        };
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("bins "))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| bad("missing bin count"))?;
        let mut bins = Vec::with_capacity(count);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let parse = |p: Option<&str>| p.and_then(|s| s.parse::<f64>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(f), Some(b), None) => bins.push((f, b)),
                _ => return Err(Error::LutFormat(format!("malformed bin line `{line}`"))),
            }
        }
        if bins.len() != count {
            return Err(Error::LutFormat(format!(
                "header declares {count} bins, found {}",
                bins.len()
            )));
        }
        if bins.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(bad("fractional delays are not strictly increasing"));
        }
        let lut = Self::from_bias(waveform, peak_scale, bins.iter().map(|b| b.1).collect())?;
        // Accept only the uniform grid we write.
        if lut.bins.iter().zip(&bins).any(|(a, b)| (a.0 - b.0).abs() > 1e-12) {
            return Err(bad("fractional delays are not uniformly spaced"));
        }
        Ok(lut)
    }
}

/// Tabulates the noiseless QLS bias of `spec` at `bin_count` uniformly
/// spaced fractional delays using the default [`PeakScale`].
pub fn build_bias_lut(spec: &WaveformSpec, bin_count: usize) -> Result<BiasLut> {
    build_bias_lut_with(spec, bin_count, PeakScale::default())
}

pub fn build_bias_lut_with(spec: &WaveformSpec, bin_count: usize, scale: PeakScale) -> Result<BiasLut> {
    if bin_count < MIN_LUT_BINS {
        return Err(Error::param(
            "bin_count",
            format!("{bin_count} bins; at least {MIN_LUT_BINS} required"),
        ));
    }
    let pulse = synthesize(spec)?;
    let bias = (0..bin_count)
        .into_par_iter()
        .map(|i| noiseless_bias(&pulse, i as f64 / bin_count as f64, scale))
        .collect::<Result<Vec<f64>>>()?;
    BiasLut::from_bias(spec.clone(), scale, bias)
}

/// QLS error (seconds) for a noiseless copy of `pulse` delayed by `frac`
/// samples.
pub fn noiseless_bias(pulse: &SampledSignal, frac: f64, scale: PeakScale) -> Result<f64> {
    let window_len = pulse.len() + 2 * LUT_GUARD;
    let delay = LUT_GUARD as f64 + frac;
    let rx = channel::delay_into_window(pulse.samples(), delay, window_len)?;
    let rx = SampledSignal::new(rx, pulse.sample_rate_hz(), 0.0)?;
    let mf = matched_filter(&rx, pulse)?;
    let n = coarse_peak(&mf)?;
    let tau_hat = qls_refine(&mf, n, scale)?;
    Ok(tau_hat - delay * pulse.sample_period_s())
}

/// Removes the tabulated bias from a refined delay.
///
/// The table is indexed by true fractional delay, which is not observable,
/// so the index g is found by fixed-point iteration on
/// g = frac((τ̂ − b(g)) / T_s), starting from the estimated fraction.
pub fn correct_bias(tau_hat: f64, lut: &BiasLut, sample_period_s: f64) -> f64 {
    let base = tau_hat / sample_period_s;
    let mut g = base.rem_euclid(1.0);
    let mut bias = lut.bias_at(g);
    for _ in 0..32 {
        let next = (base - bias / sample_period_s).rem_euclid(1.0);
        let step = (next - g).abs();
        g = next;
        bias = lut.bias_at(g);
        // Steps near 1 are the same point across the wrap.
        if step.min(1.0 - step) < 1e-12 {
            break;
        }
    }
    tau_hat - bias
}

/// Pre-processing SNR in dB from equal-length pulse and noise-only
/// windows: 10·log10[(P_s/P_n)²] with P the RMS amplitude of each window.
pub fn estimate_snr(pulse: &SampledSignal, noise_only: &SampledSignal) -> Result<f64> {
    if pulse.len() != noise_only.len() {
        return Err(Error::param(
            "noise_only",
            format!(
                "{} samples; must match the {}-sample pulse window",
                noise_only.len(),
                pulse.len()
            ),
        ));
    }
    let pn = noise_only.mean_power().sqrt();
    if pn == 0.0 {
        return Err(Error::ZeroNoisePower);
    }
    let ps = pulse.mean_power().sqrt();
    Ok(10.0 * ((ps / pn) * (ps / pn)).log10())
}

/// Matched filter + QLS + bias correction against a fixed reference pulse.
#[derive(Debug, Clone)]
pub struct DelayEstimator {
    reference: SampledSignal,
    lut: BiasLut,
}

impl DelayEstimator {
    /// The reference is synthesized from the table's waveform so the two
    /// cannot disagree.
    pub fn new(lut: BiasLut) -> Result<Self> {
        let reference = synthesize(lut.waveform())?;
        Ok(Self { reference, lut })
    }

    pub fn reference(&self) -> &SampledSignal {
        &self.reference
    }

    pub fn lut(&self) -> &BiasLut {
        &self.lut
    }

    pub fn estimate(&self, rx: &SampledSignal) -> Result<DelayEstimate> {
        let mf = matched_filter(rx, &self.reference)?;
        let n = coarse_peak(&mf)?;
        let refined = qls_refine(&mf, n, self.lut.peak_scale())?;
        Ok(DelayEstimate {
            coarse_index: n,
            refined_delay_s: refined,
            corrected_delay_s: correct_bias(refined, &self.lut, rx.sample_period_s()),
            peak_metric: mf.metric[n],
        })
    }
}
