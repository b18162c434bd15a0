//! Matrix Market coordinate format (`real`, `general` or `symmetric`).

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use std::fmt::Write as _;
use std::path::Path;

pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let ctx = "Matrix Market";
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(ctx, "empty input"))?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::format(ctx, format!("unsupported header `{header}`")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::format(ctx, format!("unsupported field type `{}`", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::format(ctx, format!("unsupported symmetry `{other}`"))),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| Error::format(ctx, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::format(ctx, format!("bad size line `{size}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::format(ctx, format!("bad size line `{size}`")));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut trips = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut count = 0;
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::format(ctx, format!("bad entry `{line}`")));
        }
        let i: usize = t[0].parse().map_err(|_| Error::format(ctx, format!("bad row index `{}`", t[0])))?;
        let j: usize = t[1].parse().map_err(|_| Error::format(ctx, format!("bad column index `{}`", t[1])))?;
        let v: f64 = t[2].parse().map_err(|_| Error::format(ctx, format!("bad value `{}`", t[2])))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::format(ctx, format!("index ({i}, {j}) outside {nrows}x{ncols}")));
        }
        trips.push((i - 1, j - 1, v));
        if symmetric && i != j {
            trips.push((j - 1, i - 1, v));
        }
        count += 1;
    }
    if count != nnz {
        return Err(Error::format(ctx, format!("expected {nnz} entries, found {count}")));
    }
    CsrMatrix::from_triplets(nrows, ncols, &trips)
}

/// Writes the general coordinate form with shortest round-trip float text.
pub fn format_matrix_market(a: &CsrMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_market(&text).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path.display().to_string(), message),
        other => other,
    })
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    std::fs::write(path, format_matrix_market(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 4.5\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1.0\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 0.1), (1, 0, -1.0 / 3.0), (1, 1, 1e-300)]).unwrap();
        let b = parse_matrix_market(&format_matrix_market(&a)).unwrap();
        assert_eq!(a, b);
    }
}
