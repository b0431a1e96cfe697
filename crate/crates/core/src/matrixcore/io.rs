//! HTUP1 tuple files.
//!
//! Line 1 is `HTUP1 <k> <n>`; then n blocks of k·k complex entries as
//! `<re> <im>` pairs, row-major, whitespace separated, with at least 17
//! significant digits so that values round-trip exactly.

use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{HermitianMatrix, MatrixError, MatrixTuple};
use crate::C64;

pub fn write_tuple(path: &Path, t: &MatrixTuple) -> Result<(), MatrixError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let k = t.dim();
    writeln!(w, "HTUP1 {} {}", k, t.len())?;
    for m in t.mats() {
        for i in 0..k {
            let mut row = String::new();
            for j in 0..k {
                let c = m.matrix()[(i, j)];
                if j > 0 {
                    row.push(' ');
                }
                row.push_str(&format!("{:.17e} {:.17e}", c.re, c.im));
            }
            writeln!(w, "{row}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_tuple(path: &Path) -> Result<MatrixTuple, MatrixError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = text.split_whitespace();
    match tokens.next() {
        Some("HTUP1") => {}
        other => {
            return Err(MatrixError::BadFormat(format!(
                "expected HTUP1 magic, got {other:?}"
            )))
        }
    }
    let k: usize = tokens
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MatrixError::BadFormat("missing dimension".into()))?;
    let n: usize = tokens
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MatrixError::BadFormat("missing tuple length".into()))?;
    if k == 0 || n == 0 {
        return Err(MatrixError::BadFormat("k and n must be positive".into()));
    }
    let mut mats = Vec::with_capacity(n);
    for b in 0..n {
        let mut m = DMatrix::<C64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let re: f64 = tokens
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| {
                        MatrixError::BadFormat(format!("block {b}: missing re at ({i},{j})"))
                    })?;
                let im: f64 = tokens
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| {
                        MatrixError::BadFormat(format!("block {b}: missing im at ({i},{j})"))
                    })?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        mats.push(HermitianMatrix::new(m)?);
    }
    if tokens.next().is_some() {
        return Err(MatrixError::BadFormat("trailing data".into()));
    }
    MatrixTuple::new(mats)
}
