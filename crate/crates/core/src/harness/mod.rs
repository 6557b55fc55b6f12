//! Seeded Monte Carlo experiments over the full exchange, and report output.

mod config;
mod report;
mod runners;

pub use config::{ClockPair, ExperimentConfig, ExperimentKind, MIN_TRIALS};
pub use report::{emit_report, render_report, write_report, Cell, ReportFormat, ReportRow};
pub use runners::{
    monte_carlo_point, run_bias_curve, run_campaign, run_snr_sweep, run_tone_sep_sweep,
    BiasCurvePoint, SweepRecord,
};
