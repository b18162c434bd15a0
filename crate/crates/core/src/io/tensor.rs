//! Sparse third-order tensor text format:
//!
//! ```text
//! %%STRB-TENSOR3
//! % optional comments
//! n1 n2 n3 nnz
//! i j m value      (1-based, one entry per line)
//! ```

use crate::error::{Error, Result};
use crate::fom::ConvectiveTensor;
use std::fmt::Write as _;
use std::path::Path;

pub const TENSOR_HEADER: &str = "%%STRB-TENSOR3";

pub fn parse_tensor(text: &str) -> Result<ConvectiveTensor> {
    let ctx = "tensor";
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TENSOR_HEADER => {}
        other => return Err(Error::format(ctx, format!("expected `{TENSOR_HEADER}`, found `{}`", other.unwrap_or("")))),
    }
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| Error::format(ctx, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::format(ctx, format!("bad size line `{size}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 4 || dims[0] != dims[1] || dims[1] != dims[2] {
        return Err(Error::format(ctx, format!("expected `n n n nnz`, found `{size}`")));
    }
    let (n, nnz) = (dims[0], dims[3]);
    let mut entries = Vec::with_capacity(nnz);
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(Error::format(ctx, format!("bad entry `{line}`")));
        }
        let mut idx = [0usize; 3];
        for k in 0..3 {
            idx[k] = t[k].parse().map_err(|_| Error::format(ctx, format!("bad index `{}`", t[k])))?;
            if idx[k] == 0 || idx[k] > n {
                return Err(Error::format(ctx, format!("index {} outside 1..={n}", idx[k])));
            }
        }
        let v: f64 = t[3].parse().map_err(|_| Error::format(ctx, format!("bad value `{}`", t[3])))?;
        entries.push((idx[0] - 1, idx[1] - 1, idx[2] - 1, v));
    }
    if entries.len() != nnz {
        return Err(Error::format(ctx, format!("expected {nnz} entries, found {}", entries.len())));
    }
    ConvectiveTensor::from_entries(n, &entries)
}

pub fn format_tensor(c: &ConvectiveTensor) -> String {
    let mut s = String::new();
    let n = c.dim();
    let _ = writeln!(s, "{TENSOR_HEADER}\n{n} {n} {n} {}", c.nnz());
    for &(i, j, m, v) in c.entries() {
        let _ = writeln!(s, "{} {} {} {:e}", i + 1, j + 1, m + 1, v);
    }
    s
}

pub fn read_tensor(path: &Path) -> Result<ConvectiveTensor> {
    parse_tensor(&std::fs::read_to_string(path)?)
}

pub fn write_tensor(path: &Path, c: &ConvectiveTensor) -> Result<()> {
    std::fs::write(path, format_tensor(c))?;
    Ok(())
}
