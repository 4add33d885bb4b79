use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a header-first numeric CSV. Every column except `response` becomes
/// a feature, in file order. Row numbers in errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::MissingColumn(response.to_owned()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut flat = Vec::new();
    let mut y = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::ParseError {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::ParseError {
                row,
                column: headers[c].clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if c == response_idx {
                y.push(value);
            } else {
                flat.push(value);
            }
        }
    }
    let n = y.len();
    let x = Matrix::from_shape_vec((n, p), flat).map_err(|e| Error::ParseError {
        row: n,
        column: String::new(),
        message: e.to_string(),
    })?;
    Dataset::new(x, Vector::from(y))?.with_feature_names(feature_names)
}

/// Writes features then the response column, full `f64` precision.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, response: &str) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..d.p()).map(|j| d.feature_name(j)).collect();
    header.push(response.to_owned());
    w.write_record(&header)?;
    for (row, y) in d.x().rows().into_iter().zip(d.y()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(y.to_string());
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}
