//! CSV ingestion: comma separated, one point per row, optional header.
//!
//! The first row is a header when none of its cells parses as a number. A
//! row mixing numeric and non-numeric cells is rejected like any other bad
//! cell.

use std::path::Path;

use l1fit::DataMatrix;

use crate::error::{CliError, CliResult};

/// Parsed input together with its raw bytes (for fingerprinting).
pub struct Input {
    pub data: DataMatrix,
    pub bytes: Vec<u8>,
    pub header: Option<Vec<String>>,
}

pub fn read_input(path: &Path) -> CliResult<Input> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(bytes)
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn parse_csv(bytes: Vec<u8>) -> CliResult<Input> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());

    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| CliError::Malformed(format!("row {line}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.iter().all(|c| parse_cell(c).is_none()) {
            header = Some(record.iter().map(String::from).collect());
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(CliError::Parse {
                    row: line,
                    col: record.len().min(w) + 1,
                    message: format!("expected {w} columns, found {}", record.len()),
                });
            }
            _ => width = Some(record.len()),
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                parse_cell(cell).ok_or_else(|| CliError::Parse {
                    row: line,
                    col: j + 1,
                    message: format!("not a finite number: {cell:?}"),
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Validation("no data rows".into()));
    }
    let data = DataMatrix::from_rows(&rows)?;
    Ok(Input { data, bytes, header })
}
