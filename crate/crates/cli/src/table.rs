//! CSV and JSON emission of sampled functions, and the table reader.
//!
//! CSV files carry a header row, LF line endings and values printed with 17
//! significant digits so binary64 samples survive a round trip. Masked
//! samples are written as `NaN` (CSV) or `null` (JSON).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ddgr::num_complex::Complex64;
use ddgr::SampledFunction64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e.to_string()))
}

fn sample_or_nan(f: &SampledFunction64, i: usize) -> f64 {
    f.get(i).unwrap_or(f64::NAN)
}

/// Writes `x,value` (CSV) or `{"x": [...], "value": [...]}` (JSON).
pub fn write_sampled(path: &Path, f: &SampledFunction64, format: Format) -> Result<(), CliError> {
    let g = f.grid();
    match format {
        Format::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["x", "value"]).map_err(|e| csv_err(path, e))?;
            for i in 0..g.len() {
                w.write_record([fmt_value(g.x(i)), fmt_value(sample_or_nan(f, i))]).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(|e| CliError::io(path, e))
        }
        Format::Json => {
            let xs: Vec<f64> = g.nodes().collect();
            let vs: Vec<Option<f64>> = (0..g.len()).map(|i| f.get(i)).collect();
            write_json(path, &json!({ "x": xs, "value": vs }))
        }
    }
}

/// Writes `x,re,im` (CSV) or `{"x": [...], "re": [...], "im": [...]}` (JSON).
pub fn write_complex(path: &Path, xs: &[f64], values: &[Complex64], format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["x", "re", "im"]).map_err(|e| csv_err(path, e))?;
            for (x, z) in xs.iter().zip(values) {
                w.write_record([fmt_value(*x), fmt_value(z.re), fmt_value(z.im)]).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(|e| CliError::io(path, e))
        }
        Format::Json => {
            let re: Vec<f64> = values.iter().map(|z| z.re).collect();
            let im: Vec<f64> = values.iter().map(|z| z.im).collect();
            write_json(path, &json!({ "x": xs, "re": re, "im": im }))
        }
    }
}

/// Pretty JSON with keys sorted (serde_json's default map is ordered) and a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let value: Value = serde_json::to_value(value).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads the first two columns of a CSV with a header row. `NaN` entries are kept.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_path(path).map_err(|e| {
            match e.kind() {
                csv::ErrorKind::Io(_) => CliError::Usage(format!("cannot read table {}: {e}", path.display())),
                _ => CliError::Table(e.to_string()),
            }
        })?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Table(e.to_string()))?;
        if record.len() < 2 {
            return Err(CliError::Table(format!("row {} has fewer than two columns", row + 2)));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| CliError::Table(format!("row {}: cannot parse '{s}' as a number", row + 2)))
        };
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    Ok((xs, ys))
}
