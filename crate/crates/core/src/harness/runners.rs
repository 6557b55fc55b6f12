use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::analysis;
use crate::channel::ChannelModel;
use crate::error::Result;
use crate::estimator::{build_bias_lut, correct_bias, noiseless_bias, BiasLut};
use crate::rng::derive_seed;
use crate::stats;
use crate::twtt::{self, CampaignLog, TwoWayLink};
use crate::waveform::{synthesize, WaveformKind, WaveformSpec};

/// Monte Carlo summary of the clock-offset error at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// SNR in dB or tone separation in Hz.
    pub independent_var: f64,
    pub measured_std_s: f64,
    pub measured_mean_bias_s: f64,
    /// Bound on the offset estimate at this point.
    pub crlb_std_s: f64,
    pub trials: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCurvePoint {
    pub waveform: String,
    pub fractional_delay: f64,
    pub bias_s: f64,
    pub corrected_bias_s: f64,
}

/// Runs `trials` independent exchanges over `link` and summarizes the
/// offset error. Trial `t` draws its randomness from `seed_path + [t]`, so
/// results do not depend on thread scheduling.
pub fn monte_carlo_point(
    cfg: &ExperimentConfig,
    link: &TwoWayLink,
    independent_var: f64,
    seed_path: &[u64],
) -> SweepRecord {
    let trials = cfg.trials_per_point as u64;
    let outcomes: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut path = seed_path.to_vec();
            path.push(t);
            link.exchange(
                &cfg.clocks.node_n,
                &cfg.clocks.node_0,
                0,
                0,
                derive_seed(cfg.seed, &path),
            )
            .ok()
            .map(|r| r.offset_error_s())
        })
        .collect();
    let errors: Vec<f64> = outcomes.iter().flatten().copied().collect();
    SweepRecord {
        independent_var,
        measured_std_s: stats::sample_std(&errors).unwrap_or(f64::NAN),
        measured_mean_bias_s: stats::mean(&errors).unwrap_or(f64::NAN),
        crlb_std_s: analysis::offset_crlb_std(link.waveform(), link.channel().snr_db),
        trials,
        failures: trials - errors.len() as u64,
    }
}

/// Offset-error statistics versus pre-processing SNR for the configured
/// waveform.
pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate_for(ExperimentKind::SnrSweep)?;
    let lut = build_bias_lut(&cfg.waveform, cfg.lut_bins)?;
    cfg.snr_points_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let ch = ChannelModel {
                snr_db: snr,
                ..cfg.channel.clone()
            };
            let link = TwoWayLink::new(ch, lut.clone(), cfg.schedule.clone())?;
            Ok(monte_carlo_point(cfg, &link, snr, &[0, i as u64]))
        })
        .collect()
}

/// Offset-error statistics versus tone separation (bandwidth) at
/// `tone_sep_snr_db`. Each point gets its own bias table.
pub fn run_tone_sep_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate_for(ExperimentKind::ToneSepSweep)?;
    cfg.tone_sep_points_hz
        .iter()
        .enumerate()
        .map(|(i, &bw)| {
            let spec = WaveformSpec {
                bandwidth_hz: bw,
                ..cfg.waveform.clone()
            };
            let lut = build_bias_lut(&spec, cfg.lut_bins)?;
            let ch = ChannelModel {
                snr_db: cfg.tone_sep_snr_db,
                ..cfg.channel.clone()
            };
            let link = TwoWayLink::new(ch, lut, cfg.schedule.clone())?;
            Ok(monte_carlo_point(cfg, &link, bw, &[1, i as u64]))
        })
        .collect()
}

/// Noiseless QLS bias over one sample interval, before and after table
/// correction, for the configured waveform and for an LFM of the same
/// bandwidth. Points sit midway between table bins, where interpolation
/// error is largest.
pub fn run_bias_curve(cfg: &ExperimentConfig) -> Result<Vec<BiasCurvePoint>> {
    cfg.validate_for(ExperimentKind::BiasCurve)?;
    let mut specs = vec![cfg.waveform.clone()];
    if cfg.waveform.kind != WaveformKind::Lfm {
        specs.push(cfg.waveform.clone().with_kind(WaveformKind::Lfm));
    }
    let mut out = Vec::new();
    for spec in &specs {
        let lut = build_bias_lut(spec, cfg.lut_bins)?;
        out.extend(bias_curve(spec, &lut)?);
    }
    Ok(out)
}

fn bias_curve(spec: &WaveformSpec, lut: &BiasLut) -> Result<Vec<BiasCurvePoint>> {
    let pulse = synthesize(spec)?;
    let ts = spec.sample_period_s();
    let bins = lut.bin_count();
    (0..bins)
        .into_par_iter()
        .map(|i| {
            let f = (i as f64 + 0.5) / bins as f64;
            let bias = noiseless_bias(&pulse, f, lut.peak_scale())?;
            let tau_hat = f * ts + bias;
            Ok(BiasCurvePoint {
                waveform: spec.kind.label().to_string(),
                fractional_delay: f,
                bias_s: bias,
                corrected_bias_s: correct_bias(tau_hat, lut, ts) - f * ts,
            })
        })
        .collect()
}

/// Runs one resynchronization campaign of `trials_per_point` epochs and
/// summarizes the post-correction residual clock error.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<(SweepRecord, CampaignLog)> {
    cfg.validate_for(ExperimentKind::Campaign)?;
    let lut = build_bias_lut(&cfg.waveform, cfg.lut_bins)?;
    let link = TwoWayLink::new(cfg.channel.clone(), lut, cfg.schedule.clone())?;
    let epochs = cfg.trials_per_point as u64;
    let log = twtt::run_campaign(&cfg.clocks.node_n, &cfg.clocks.node_0, &link, epochs, cfg.seed)?;
    let residuals: Vec<f64> = log.corrections.iter().map(|c| c.residual_error_s).collect();
    let record = SweepRecord {
        independent_var: cfg.channel.snr_db,
        measured_std_s: stats::sample_std(&residuals).unwrap_or(f64::NAN),
        measured_mean_bias_s: stats::mean(&residuals).unwrap_or(f64::NAN),
        crlb_std_s: analysis::offset_crlb_std(&cfg.waveform, cfg.channel.snr_db),
        trials: epochs * link.schedule().pulse_count as u64,
        failures: log.failures.len() as u64,
    };
    Ok((record, log))
}
