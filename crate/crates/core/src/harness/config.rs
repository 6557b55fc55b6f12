use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::clock::ClockState;
use crate::error::{Error, FieldIssue, Result};
use crate::estimator::{DEFAULT_LUT_BINS, MIN_LUT_BINS};
use crate::twtt::EpochSchedule;
use crate::waveform::WaveformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SnrSweep,
    ToneSepSweep,
    BiasCurve,
    Campaign,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::SnrSweep => "snr-sweep",
            ExperimentKind::ToneSepSweep => "tone-sep-sweep",
            ExperimentKind::BiasCurve => "bias-curve",
            ExperimentKind::Campaign => "campaign",
        }
    }

    fn emits_statistics(self) -> bool {
        !matches!(self, ExperimentKind::BiasCurve)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockPair {
    pub node_0: ClockState,
    pub node_n: ClockState,
}

impl Default for ClockPair {
    fn default() -> Self {
        Self {
            node_0: ClockState::reference(),
            node_n: ClockState {
                rng_seed: 1,
                ..ClockState::with_offset(5e-9)
            },
        }
    }
}

/// Everything an experiment run depends on. Loaded from TOML; any field
/// left out takes the laboratory default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub waveform: WaveformSpec,
    pub snr_points_db: Vec<f64>,
    pub tone_sep_points_hz: Vec<f64>,
    /// SNR held fixed across a tone-separation sweep.
    pub tone_sep_snr_db: f64,
    /// Monte Carlo trials per point; epochs for a campaign.
    pub trials_per_point: u32,
    pub lut_bins: usize,
    /// Base channel; sweeps override `snr_db` per point.
    pub channel: ChannelModel,
    pub clocks: ClockPair,
    pub schedule: EpochSchedule,
    pub seed: u64,
    pub output_path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SnrSweep,
            waveform: WaveformSpec::default(),
            snr_points_db: (0..=10).map(|i| 6.0 + 3.0 * i as f64).collect(),
            tone_sep_points_hz: (1..=5).map(|i| 10e6 * i as f64).collect(),
            tone_sep_snr_db: 30.0,
            trials_per_point: 1000,
            lut_bins: DEFAULT_LUT_BINS,
            channel: ChannelModel::default(),
            clocks: ClockPair::default(),
            schedule: EpochSchedule::default(),
            seed: 0,
            output_path: String::new(),
        }
    }
}

pub const MIN_TRIALS: u32 = 30;

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the config for running `kind`, collecting every offending
    /// field rather than stopping at the first.
    pub fn validate_for(&self, kind: ExperimentKind) -> Result<()> {
        let mut issues = Vec::new();
        let mut push = |field: String, reason: String| issues.push(FieldIssue { field, reason });
        for (prefix, checked) in [
            ("waveform", self.waveform.validate()),
            ("channel", self.channel.validate()),
            ("clocks.node_0", self.clocks.node_0.validate()),
            ("clocks.node_n", self.clocks.node_n.validate()),
            ("schedule", self.schedule.validate()),
        ] {
            match checked {
                Ok(()) => {}
                Err(Error::Parameter { name, reason }) => push(format!("{prefix}.{name}"), reason),
                Err(other) => push(prefix.to_string(), other.to_string()),
            }
        }

        if kind.emits_statistics() && self.trials_per_point < MIN_TRIALS {
            push(
                "trials_per_point".into(),
                format!("{} < {MIN_TRIALS}", self.trials_per_point),
            );
        }
        if self.lut_bins < MIN_LUT_BINS {
            push("lut_bins".into(), format!("{} < {MIN_LUT_BINS}", self.lut_bins));
        }
        if !self.channel.symmetric {
            push("channel.symmetric".into(), "asymmetric links are not supported".into());
        }
        let offset = self.clocks.node_n.offset_s - self.clocks.node_0.offset_s;
        if offset.abs() + self.channel.propagation_delay_s >= self.schedule.rx_guard_s {
            push(
                "clocks.node_n.offset_s".into(),
                format!(
                    "initial offset {offset:e} s plus propagation delay must stay inside the {:e} s receive guard",
                    self.schedule.rx_guard_s
                ),
            );
        }
        match kind {
            ExperimentKind::SnrSweep => {
                if self.snr_points_db.is_empty() {
                    push("snr_points_db".into(), "no points".into());
                }
                for (i, s) in self.snr_points_db.iter().enumerate() {
                    if s.is_nan() || *s == f64::NEG_INFINITY {
                        push(format!("snr_points_db[{i}]"), format!("{s} is not a usable SNR"));
                    }
                }
            }
            ExperimentKind::ToneSepSweep => {
                if self.tone_sep_points_hz.is_empty() {
                    push("tone_sep_points_hz".into(), "no points".into());
                }
                for (i, bw) in self.tone_sep_points_hz.iter().enumerate() {
                    let probe = WaveformSpec {
                        bandwidth_hz: *bw,
                        ..self.waveform.clone()
                    };
                    if bw.is_nan() || *bw <= 0.0 || probe.validate().is_err() {
                        push(
                            format!("tone_sep_points_hz[{i}]"),
                            format!("{bw} Hz must be > 0 and below the sample rate"),
                        );
                    }
                }
                if self.tone_sep_snr_db.is_nan() || self.tone_sep_snr_db == f64::NEG_INFINITY {
                    push("tone_sep_snr_db".into(), "not a usable SNR".into());
                }
            }
            ExperimentKind::BiasCurve | ExperimentKind::Campaign => {}
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }
}
