//! CSV tables and SVG figures.

pub mod svg;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Shortest decimal that parses back to the same `f64`, in exponent form
/// outside `[1e-5, 1e16)`; non-finite values become `NaN`, `inf` or `-inf`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "NaN".into()
    } else if a.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Empty cell for a missing value.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Write a header and rows as comma-separated values with `\n` line ends.
pub fn write_csv<I, R, S>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// `write_csv` for rows of numbers.
pub fn write_numeric_csv<I, R>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    write_csv(
        path,
        header,
        rows.into_iter().map(|r| r.into_iter().map(fmt_f64).collect::<Vec<_>>()),
    )
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn ensure_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}
