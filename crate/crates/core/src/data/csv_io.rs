use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reads a comma-separated file with a mandatory header row.
///
/// The target column is extracted; every other column becomes a feature in
/// header order. Cells must parse as finite decimal numbers.
pub fn load_csv(path: &Path, target_name: &str, treatment_name: Option<&str>) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let target_col = headers
        .iter()
        .position(|h| h == target_name)
        .ok_or_else(|| Error::MissingColumn(target_name.to_string()))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != target_col).collect();
    let names: Vec<String> = feature_cols.iter().map(|&j| headers[j].clone()).collect();
    let treatment_index = match treatment_name {
        Some(t) => Some(
            names
                .iter()
                .position(|n| n == t)
                .ok_or_else(|| Error::MissingColumn(t.to_string()))?,
        ),
        None => None,
    };

    let mut data = Vec::new();
    let mut target = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |j: usize| -> Result<f64> {
            let cell = record.get(j).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::NonFinite(format!(
                    "column `{}` at data row {}",
                    headers[j],
                    row + 1
                ))),
                Err(_) => Err(Error::NonNumeric {
                    row: row + 1,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                }),
            }
        };
        target.push(parse(target_col)?);
        for &j in &feature_cols {
            data.push(parse(j)?);
        }
    }
    let features = Matrix::from_row_major(target.len(), feature_cols.len(), data)?;
    Dataset::new(features, names, target, treatment_index)
}

/// Shortest round-trip text for `v`, in exponent form outside `[1e-5, 1e16)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes features followed by the target column under `target_name`.
///
/// Numbers use the shortest representation that round-trips, so re-reading
/// the file reproduces the dataset bit for bit.
pub fn write_csv(ds: &Dataset, target_name: &str, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header: Vec<&str> = ds.names().iter().map(String::as_str).collect();
    header.push(target_name);
    writeln!(file, "{}", header.join(",")).map_err(io_err)?;
    for (i, row) in ds.features().rows().enumerate() {
        let mut line = String::new();
        for v in row {
            line.push_str(&fmt_num(*v));
            line.push(',');
        }
        line.push_str(&fmt_num(ds.target()[i]));
        writeln!(file, "{line}").map_err(io_err)?;
    }
    file.flush().map_err(io_err)
}
