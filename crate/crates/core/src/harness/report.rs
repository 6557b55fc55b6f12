//! CSV and JSON report emission. Floats are written as `{:.16e}`, which
//! round-trips every f64 exactly; non-finite values become `NaN`/`inf` in
//! CSV and `null` in JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::runners::{BiasCurvePoint, SweepRecord};
use crate::clock::CorrectionRecord;
use crate::error::{Error, Result};
use crate::twtt::ExchangeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::param("format", format!("unknown report format `{other}`"))),
        }
    }
}

pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A record type with a fixed column layout. `HEADER` must list the
/// serde field names in declaration order so CSV and JSON agree.
pub trait ReportRow: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

impl ReportRow for SweepRecord {
    const HEADER: &'static [&'static str] = &[
        "independent_var",
        "measured_std_s",
        "measured_mean_bias_s",
        "crlb_std_s",
        "trials",
        "failures",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.independent_var),
            Cell::Float(self.measured_std_s),
            Cell::Float(self.measured_mean_bias_s),
            Cell::Float(self.crlb_std_s),
            Cell::Int(self.trials),
            Cell::Int(self.failures),
        ]
    }
}

impl ReportRow for BiasCurvePoint {
    const HEADER: &'static [&'static str] =
        &["waveform", "fractional_delay", "bias_s", "corrected_bias_s"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.waveform.clone()),
            Cell::Float(self.fractional_delay),
            Cell::Float(self.bias_s),
            Cell::Float(self.corrected_bias_s),
        ]
    }
}

impl ReportRow for ExchangeTrace {
    const HEADER: &'static [&'static str] = &[
        "epoch_index",
        "slot",
        "t_txn_s",
        "t_rx0_s",
        "t_tx0_s",
        "t_rxn_s",
        "offset_estimate_s",
        "delay_estimate_s",
        "true_offset_s",
        "true_delay_s",
        "snr_forward_db",
        "snr_reverse_db",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.epoch_index),
            Cell::Int(self.slot as u64),
            Cell::Float(self.t_txn_s),
            Cell::Float(self.t_rx0_s),
            Cell::Float(self.t_tx0_s),
            Cell::Float(self.t_rxn_s),
            Cell::Float(self.offset_estimate_s),
            Cell::Float(self.delay_estimate_s),
            Cell::Float(self.true_offset_s),
            Cell::Float(self.true_delay_s),
            Cell::Float(self.snr_forward_db),
            Cell::Float(self.snr_reverse_db),
        ]
    }
}

impl ReportRow for CorrectionRecord {
    const HEADER: &'static [&'static str] = &[
        "epoch_index",
        "applied_correction_s",
        "pre_correction_error_s",
        "residual_error_s",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.epoch_index),
            Cell::Float(self.applied_correction_s),
            Cell::Float(self.pre_correction_error_s),
            Cell::Float(self.residual_error_s),
        ]
    }
}

/// serde_json formatter that writes floats in full-precision scientific
/// notation.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn write_report<T: ReportRow, W: Write>(records: &[T], format: ReportFormat, out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(T::HEADER)?;
            for r in records {
                w.write_record(r.cells().iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            // One record per line keeps diffs of reports readable.
            out.write_all(b"[\n")?;
            for (i, r) in records.iter().enumerate() {
                let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
                r.serialize(&mut ser)?;
                out.write_all(if i + 1 < records.len() { b",\n" } else { b"\n" })?;
            }
            out.write_all(b"]\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn render_report<T: ReportRow>(records: &[T], format: ReportFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_report(records, format, &mut buf)?;
    Ok(buf)
}

/// Writes `records` to `path`. Nothing is created if `records` is empty.
pub fn emit_report<T: ReportRow>(records: &[T], path: &Path, format: ReportFormat) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyReport);
    }
    let file = BufWriter::new(File::create(path)?);
    write_report(records, format, file)
}
