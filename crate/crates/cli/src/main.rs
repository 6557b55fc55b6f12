use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use twtt_sim::harness::{self, ExperimentConfig, ReportFormat, ReportRow};
use twtt_sim::Error;

#[derive(Parser, Debug)]
#[command(name = "twtt", about = "Two-way time transfer simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Offset precision versus pre-processing SNR.
    SnrSweep(Common),
    /// Offset precision versus tone separation at fixed SNR.
    ToneSepSweep(Common),
    /// Noiseless QLS bias over one sample, raw and table-corrected.
    BiasCurve(Common),
    /// Repeated resynchronization; reports residual clock error.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Also write per-exchange traces here (same format as --out).
        #[arg(long)]
        traces: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's trials_per_point.
    #[arg(long)]
    trials: Option<u32>,
    /// Report path; falls back to the config's output_path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials_per_point = trials;
        }
        Ok(cfg)
    }

    fn out_path(&self, cfg: &ExperimentConfig) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| (!cfg.output_path.is_empty()).then(|| PathBuf::from(&cfg.output_path)))
    }
}

fn write<T: ReportRow>(records: &[T], path: Option<&Path>, format: Format) -> Result<(), Error> {
    match path {
        Some(p) => harness::emit_report(records, p, format.into()),
        None => harness::write_report(records, format.into(), io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SnrSweep(c) => {
            let cfg = c.load()?;
            write(&harness::run_snr_sweep(&cfg)?, c.out_path(&cfg).as_deref(), c.format)
        }
        Command::ToneSepSweep(c) => {
            let cfg = c.load()?;
            write(&harness::run_tone_sep_sweep(&cfg)?, c.out_path(&cfg).as_deref(), c.format)
        }
        Command::BiasCurve(c) => {
            let cfg = c.load()?;
            write(&harness::run_bias_curve(&cfg)?, c.out_path(&cfg).as_deref(), c.format)
        }
        Command::Campaign { common: c, traces } => {
            let cfg = c.load()?;
            let (record, log) = harness::run_campaign(&cfg)?;
            if let Some(path) = traces {
                harness::emit_report(&log.traces, &path, c.format.into())?;
            }
            write(&[record], c.out_path(&cfg).as_deref(), c.format)
        }
    }
}

fn error_line(e: &Error) -> serde_json::Value {
    let mut body = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Validation(issues) = e {
        body["fields"] = issues
            .iter()
            .map(|i| json!({ "field": i.field, "reason": i.reason }))
            .collect();
    }
    json!({ "error": body })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "{}", error_line(&e));
            match e {
                Error::Validation(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
