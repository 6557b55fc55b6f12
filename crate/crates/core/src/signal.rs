use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex baseband samples plus the timebase they were captured in.
///
/// `start_time_s` is the timestamp of sample 0 in whichever clock produced
/// the signal (a node's local clock, or true time inside the channel).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
    start_time_s: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("samples", "signal must contain at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::param(
                "sample_rate_hz",
                format!("must be finite and > 0, got {sample_rate_hz}"),
            ));
        }
        if !start_time_s.is_finite() {
            return Err(Error::param("start_time_s", "must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            start_time_s,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn with_start_time(mut self, start_time_s: f64) -> Self {
        self.start_time_s = start_time_s;
        self
    }

    /// Σ|x|² · T_s.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / self.sample_rate_hz
    }

    /// Mean |x|² over all samples.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Copy of samples `range` as a new signal with the matching start time.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.samples.len() {
            return Err(Error::param(
                "range",
                format!("{range:?} is empty or outside 0..{}", self.samples.len()),
            ));
        }
        let start = self.start_time_s + range.start as f64 / self.sample_rate_hz;
        Self::new(self.samples[range].to_vec(), self.sample_rate_hz, start)
    }
}
