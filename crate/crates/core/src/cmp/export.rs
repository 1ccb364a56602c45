use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("line {}: bad number `{}`", line_no + 1, cell.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid("ragged matrix rows"));
    }
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).map_err(|e| Error::invalid(e.to_string()))
}

/// Grayscale pixel for a distance: 0 maps to black, `max_distance` to white.
pub fn pixel(v: f64, max_distance: f64) -> u8 {
    ((v / max_distance).clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary 8-bit PGM (P5) heatmap of a matrix.
pub fn write_pgm(path: &Path, m: &Array2<f64>, max_distance: f64) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.len() + 32);
    write!(bytes, "P5\n{} {}\n255\n", m.ncols(), m.nrows()).expect("in-memory write");
    bytes.extend(m.iter().map(|&v| pixel(v, max_distance)));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
