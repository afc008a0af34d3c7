//! Plain-text matrix and label files.
//!
//! Matrices are comma-separated, one row per line, no header. Labels hold
//! one non-negative integer per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (c, field) in line.split(',').enumerate() {
            let parse_err = |msg: String| Error::Parse {
                file: path.to_path_buf(),
                row: r + 1,
                col: c + 1,
                msg,
            };
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("not a number: {:?}", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {v}")));
            }
            data.push(v);
            count += 1;
        }
        match ncols {
            None => ncols = Some(count),
            Some(nc) if nc != count => {
                return Err(Error::Parse {
                    file: path.to_path_buf(),
                    row: r + 1,
                    col: count.min(nc) + 1,
                    msg: format!("expected {nc} fields, found {count}"),
                })
            }
            _ => {}
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Validation(format!("{} is empty", path.display())))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 20);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            // `{}` on f64 is the shortest representation that parses back exactly.
            write!(out, "{}", m[(r, c)]).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(r, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                file: path.to_path_buf(),
                row: r + 1,
                col: 1,
                msg: format!("not a non-negative integer label: {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
