//! File formats: one-column CSV series, JSON autocovariances, JSON/CSV output.

use std::fs;
use std::io::Write;
use std::path::Path;

use dbacf::{Acvf, Series};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

/// First column of a CSV file as numbers. A non-numeric first row is taken
/// as a header; blank lines are skipped.
pub fn parse_column(text: &str, what: &str) -> CliResult<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(format!("{what}: {e}")))?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => {}
            Err(_) => {
                return Err(CliError::io(format!("{what}: row {} is not a number: '{field}'", k + 1)))
            }
        }
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> CliResult<Series> {
    let values = parse_column(&read_text(path)?, &path.display().to_string())?;
    Ok(Series::new(values)?)
}

/// An autocovariance from JSON (`{"m", "gamma"}` or any object with an
/// `acvf` field, such as `estimate` output) or a one-column CSV of
/// `gamma_0..gamma_m`.
pub fn read_acvf(path: &Path) -> CliResult<Acvf> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    if text.trim_start().starts_with('{') {
        let mut v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::io(format!("{name}: {e}")))?;
        if let Some(inner) = v.get_mut("acvf") {
            v = inner.take();
        }
        return serde_json::from_value(v).map_err(|e| CliError::io(format!("{name}: {e}")));
    }
    Ok(Acvf::new(parse_column(&text, &name)?)?)
}

/// `{"schema": 1, ...body}` pretty-printed with a trailing newline.
pub fn json_document<T: Serialize>(body: &T) -> CliResult<Vec<u8>> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema: u32,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut out = serde_json::to_vec_pretty(&Envelope { schema: 1, body })
        .map_err(|e| CliError::io(format!("cannot encode output: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Serialize rows as CSV with a header taken from the field names.
pub fn csv_document<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(format!("cannot encode output: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::io(format!("cannot encode output: {e}")))
}

/// Write to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::io(format!("cannot write to stdout: {e}"))),
    }
}
