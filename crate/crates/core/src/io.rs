//! Small CSV and JSON helpers shared by the file formats.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// A numeric CSV table. `variant` is the index of the accepted header that matched.
#[derive(Debug, Clone)]
pub struct NumericCsv {
    pub variant: usize,
    /// `(1-based line number, values)` per data row.
    pub rows: Vec<(usize, Vec<f64>)>,
}

/// Reads a CSV whose header must equal one of `headers` (trimmed,
/// case-sensitive) and whose cells all parse as `f64`.
pub fn read_numeric_csv(path: &Path, headers: &[&[&str]]) -> Result<NumericCsv> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_numeric_csv(&text, path, headers)
}

pub fn parse_numeric_csv(text: &str, path: &Path, headers: &[&[&str]]) -> Result<NumericCsv> {
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.into(), line, msg };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let variant = headers
        .iter()
        .position(|h| h.len() == header.len() && h.iter().zip(&header).all(|(a, b)| a == b))
        .ok_or_else(|| {
            let expected: Vec<String> = headers.iter().map(|h| h.join(",")).collect();
            parse_err(1, format!("header `{}` is not one of: {}", header.join(","), expected.join(" | ")))
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let values = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("`{cell}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(NumericCsv { variant, rows })
}

/// Interprets a CSV cell as a non-negative integer index.
pub fn as_index(value: f64, path: &Path, line: usize) -> Result<u32> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(Error::Parse { path: path.into(), line, msg: format!("`{value}` is not a non-negative integer") })
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), line: e.line(), msg: e.to_string() })
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
