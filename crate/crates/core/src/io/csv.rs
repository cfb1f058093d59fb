//! Complex arrays as CSV, one row per line, cells written `re+imj`.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shortest decimal forms that parse back to the same doubles.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Format(format!("not a complex cell: {s:?}"));
    let body = s.trim().strip_suffix('j').ok_or_else(bad)?;
    // The imaginary sign is the last '+' or '-' not following an exponent marker.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im: f64 = body[split..].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Row-major `rows x cols` complex array.
pub fn emit_csv(values: &[Complex64], rows: usize, cols: usize, path: &Path) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::Contract("array length does not match rows x cols".into()));
    }
    let mut w = writer(path)?;
    for row in values.chunks(cols.max(1)).take(rows) {
        w.write_record(row.iter().map(|z| format_complex(*z)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Row-major `rows x cols` real array.
pub fn emit_csv_real(values: &[f64], rows: usize, cols: usize, path: &Path) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::Contract("array length does not match rows x cols".into()));
    }
    let mut w = writer(path)?;
    for row in values.chunks(cols.max(1)).take(rows) {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a complex CSV written by [`emit_csv`]; returns rows.
pub fn read_csv(path: &Path) -> Result<Vec<Vec<Complex64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        rows.push(rec.iter().map(parse_complex).collect::<Result<Vec<_>>>()?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_format() {
        assert_eq!(format_complex(Complex64::new(0.0, 0.0)), "0+0j");
        assert_eq!(format_complex(Complex64::new(1.5, -2.0)), "1.5-2j");
        assert_eq!(format_complex(Complex64::new(-1e-300, 3.0)), format!("{}+3j", -1e-300));
        for z in [Complex64::new(0.1, -0.2), Complex64::new(1e-300, 2e300), Complex64::new(-3.0, 1e-7)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
        assert_eq!(parse_complex("1e-5-2E+3j").unwrap(), Complex64::new(1e-5, -2e3));
        assert!(parse_complex("1+2").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        emit_csv(&[Complex64::new(0.0, 0.0)], 1, 1, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "0+0j\r\n");

        let v = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 / 3.0, -std::f64::consts::PI),
        ];
        emit_csv(&v, 2, 2, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = read_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.iter().all(|r| r.len() == 2));
        for (a, b) in back.concat().iter().zip(&v) {
            assert!((a - b).norm() <= 1e-15);
        }
        assert!(emit_csv(&v, 3, 2, &p).is_err());
    }
}
