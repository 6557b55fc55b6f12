//! Line-of-sight channel: true propagation delay (whole and fractional
//! samples) plus additive white Gaussian noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::rng;
use crate::signal::SampledSignal;

/// Quasi-static link between two nodes. `snr_db = inf` disables noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    pub propagation_delay_s: f64,
    /// Pre-processing SNR on the pulse interior.
    pub snr_db: f64,
    /// Both directions share `propagation_delay_s`.
    pub symmetric: bool,
    pub rng_seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            // ~90 cm line of sight.
            propagation_delay_s: 3e-9,
            snr_db: 36.0,
            symmetric: true,
            rng_seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn noiseless(propagation_delay_s: f64) -> Self {
        Self {
            propagation_delay_s,
            snr_db: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.propagation_delay_s.is_finite() && self.propagation_delay_s >= 0.0) {
            return Err(Error::param(
                "propagation_delay_s",
                "must be finite and >= 0",
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::param("snr_db", "must be a number or +inf"));
        }
        Ok(())
    }
}

/// Delays `signal` by the channel's propagation time and captures it in a
/// receive window of `window_len` samples starting at `window_start_s`.
///
/// `signal.start_time_s()` and `window_start_s` must share a timebase; the
/// pulse lands `(start + delay - window_start) · f_s` samples into the
/// window. Noise covers the whole window and is drawn from `ch.rng_seed`.
pub fn propagate(
    signal: &SampledSignal,
    ch: &ChannelModel,
    window_start_s: f64,
    window_len: usize,
) -> Result<SampledSignal> {
    ch.validate()?;
    let fs = signal.sample_rate_hz();
    let delay_samples = (signal.start_time_s() + ch.propagation_delay_s - window_start_s) * fs;
    let mut window = delay_into_window(signal.samples(), delay_samples, window_len)?;
    if !ch.is_noiseless() {
        let power = interior_power(signal.samples());
        if power <= 0.0 {
            return Err(Error::param("signal", "pulse has zero interior power"));
        }
        let mut rng = rng::rng_from_seed(ch.rng_seed);
        add_noise(&mut window, noise_variance(power, ch.snr_db), &mut rng);
    }
    SampledSignal::new(window, fs, window_start_s)
}

/// Adds circular complex white Gaussian noise so that the pulse interior
/// sits at `snr_db`. `snr_db = inf` returns the input unchanged.
pub fn add_awgn(signal: &SampledSignal, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::param("snr_db", "must be a number or +inf"));
    }
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    let power = interior_power(signal.samples());
    if power <= 0.0 {
        return Err(Error::param("signal", "signal has zero interior power"));
    }
    let mut samples = signal.samples().to_vec();
    let mut rng = rng::rng_from_seed(seed);
    add_noise(&mut samples, noise_variance(power, snr_db), &mut rng);
    SampledSignal::new(samples, signal.sample_rate_hz(), signal.start_time_s())
}

fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], variance: f64, rng: &mut R) {
    let sigma = (variance / 2.0).sqrt();
    for x in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *x += Complex64::new(sigma * re, sigma * im);
    }
}

/// Mean |x|² over the central 90% of the pulse's active span (the samples
/// between the first and last one above 1e-3 of the peak magnitude). For a
/// pulse with short edge ramps this is the RMS power of the interior.
pub fn interior_power(samples: &[Complex64]) -> f64 {
    let peak = samples.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let floor = 1e-3 * peak;
    let first = samples.iter().position(|x| x.norm() > floor).unwrap_or(0);
    let last = samples.iter().rposition(|x| x.norm() > floor).unwrap_or(0);
    let span = last - first + 1;
    let trim = span / 20;
    let interior = &samples[first + trim..=last - trim];
    interior.iter().map(|x| x.norm_sqr()).sum::<f64>() / interior.len() as f64
}

/// FFT length used for fractional shifting: at least 4× zero padding.
pub fn shift_buffer_len(n: usize) -> usize {
    (4 * n).next_power_of_two()
}

/// Delays `samples` by `frac` samples (any real value, normally in [0, 1))
/// with a linear spectral phase ramp e^{-j2πf·frac}.
///
/// Returns the full circular buffer of [`shift_buffer_len`] samples: index
/// j < len/2 is time j, index j ≥ len/2 is time j - len (the leading tail).
pub fn fractional_shift(samples: &[Complex64], frac: f64) -> Vec<Complex64> {
    let m = shift_buffer_len(samples.len());
    let mut buf = fft::spectrum(samples, m);
    for (k, x) in buf.iter_mut().enumerate() {
        let f = fft::bin_frequency(k, m);
        *x *= Complex64::from_polar(1.0, -2.0 * PI * f * frac);
    }
    fft::inverse(&mut buf);
    buf
}

/// Places `samples` delayed by `delay_samples` into a zeroed window of
/// `window_len` samples. The integer part positions the pulse; the
/// fractional part goes through [`fractional_shift`]. Interpolation tails
/// that fall outside the window are dropped.
pub fn delay_into_window(
    samples: &[Complex64],
    delay_samples: f64,
    window_len: usize,
) -> Result<Vec<Complex64>> {
    let n = samples.len();
    let overrun = || Error::WindowOverrun {
        delay_samples,
        pulse_len: n,
        window_len,
    };
    if !delay_samples.is_finite() || delay_samples < 0.0 {
        return Err(overrun());
    }
    let whole = delay_samples.floor();
    let frac = delay_samples - whole;
    if whole + n as f64 + if frac > 0.0 { 1.0 } else { 0.0 } > window_len as f64 {
        return Err(overrun());
    }
    let offset = whole as usize;
    let mut window = vec![Complex64::new(0.0, 0.0); window_len];
    if frac == 0.0 {
        window[offset..offset + n].copy_from_slice(samples);
        return Ok(window);
    }
    let shifted = fractional_shift(samples, frac);
    let m = shifted.len() as i64;
    for (j, &y) in shifted.iter().enumerate() {
        let j = j as i64;
        let t = if 2 * j < m { j } else { j - m };
        let pos = offset as i64 + t;
        if (0..window_len as i64).contains(&pos) {
            window[pos as usize] += y;
        }
    }
    Ok(window)
}
