//! Spectrum tables on disk.
//!
//! CSV columns, in order: `detuning_hz, transmission, buildup, phase_rad,
//! re_n_minus_1, im_n, flag_oscillation`. Reals are written as `{:.16e}`
//! (17 significant digits, enough to round-trip an f64), flags as 0/1. JSON
//! holds the same fields per sample under `samples`, next to a `metadata`
//! block.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::TransmissionSpectrum;
use crate::runner::config::Format;
use crate::units::rad_s_to_hz;

pub const COLUMNS: [&str; 7] = [
    "detuning_hz",
    "transmission",
    "buildup",
    "phase_rad",
    "re_n_minus_1",
    "im_n",
    "flag_oscillation",
];

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "gamma_sep_mhz",
    "ng",
    "gamma_pred_mhz",
    "gamma_meas_mhz",
    "peak_transmission",
    "ripple_fraction",
    "gain_factor",
];

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("refusing to write an empty table to {}", path.display())]
    EmptyTable { path: PathBuf },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> OutputError {
    OutputError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub detuning_hz: f64,
    pub transmission: f64,
    pub buildup: f64,
    pub phase_rad: f64,
    pub re_n_minus_1: f64,
    pub im_n: f64,
    pub flag_oscillation: bool,
}

pub fn rows_from_spectrum(spec: &TransmissionSpectrum) -> Vec<SpectrumRow> {
    (0..spec.len())
        .map(|i| SpectrumRow {
            detuning_hz: rad_s_to_hz(spec.detunings[i]),
            transmission: spec.transmission[i],
            buildup: spec.buildup[i],
            phase_rad: spec.phase[i],
            re_n_minus_1: spec.index_re[i],
            im_n: spec.index_im[i],
            flag_oscillation: spec.oscillating[i],
        })
        .collect()
}

/// One sweep entry; `None` fields (failed entries) are written as `nan`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub gamma_sep_mhz: f64,
    pub ng: Option<f64>,
    pub gamma_pred_mhz: Option<f64>,
    pub gamma_meas_mhz: Option<f64>,
    pub peak_transmission: Option<f64>,
    pub ripple_fraction: Option<f64>,
    pub gain_factor: Option<f64>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_else(|| "nan".to_string())
}

#[derive(Serialize)]
struct JsonTable<'a, M: Serialize, R: Serialize> {
    metadata: &'a M,
    samples: &'a [R],
}

/// Write `rows` to `path`. `metadata` goes into the JSON encoding only.
pub fn write_table<M: Serialize>(
    path: &Path,
    rows: &[SpectrumRow],
    format: Format,
    metadata: &M,
) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::EmptyTable { path: path.to_path_buf() });
    }
    match format {
        Format::Csv => {
            let records = rows.iter().map(|r| {
                vec![
                    real(r.detuning_hz),
                    real(r.transmission),
                    real(r.buildup),
                    real(r.phase_rad),
                    real(r.re_n_minus_1),
                    real(r.im_n),
                    u8::from(r.flag_oscillation).to_string(),
                ]
            });
            write_csv(path, &COLUMNS, records)
        }
        Format::Json => write_json(path, &JsonTable { metadata, samples: rows }),
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::EmptyTable { path: path.to_path_buf() });
    }
    let records = rows.iter().map(|r| {
        vec![
            real(r.gamma_sep_mhz),
            opt(r.ng),
            opt(r.gamma_pred_mhz),
            opt(r.gamma_meas_mhz),
            opt(r.peak_transmission),
            opt(r.ripple_fraction),
            opt(r.gain_factor),
        ]
    });
    write_csv(path, &SUMMARY_COLUMNS, records)
}

fn write_csv(
    path: &Path,
    header: &[&str],
    records: impl Iterator<Item = Vec<String>>,
) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for rec in records {
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a spectrum table written by [`write_table`] in CSV form.
pub fn read_csv_table(path: &Path) -> Result<Vec<SpectrumRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != COLUMNS {
        return Err(io_err(path, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let num = |i: usize| -> Result<f64, OutputError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| io_err(path, format!("row {}, column {}: {e}", line + 1, COLUMNS[i])))
        };
        let flag = match &rec[6] {
            "0" => false,
            "1" => true,
            other => return Err(io_err(path, format!("row {}: bad flag {other:?}", line + 1))),
        };
        rows.push(SpectrumRow {
            detuning_hz: num(0)?,
            transmission: num(1)?,
            buildup: num(2)?,
            phase_rad: num(3)?,
            re_n_minus_1: num(4)?,
            im_n: num(5)?,
            flag_oscillation: flag,
        });
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct JsonTableOwned {
    samples: Vec<SpectrumRow>,
}

pub fn read_json_table(path: &Path) -> Result<Vec<SpectrumRow>, OutputError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let t: JsonTableOwned = serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| io_err(path, e))?;
    Ok(t.samples)
}
