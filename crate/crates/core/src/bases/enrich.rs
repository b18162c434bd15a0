use crate::error::Result;
use crate::linalg::{orthonormal_extend, Cholesky, CsrMatrix};
use faer::{Mat, MatRef};

/// Remainders below this norm after orthogonalization are discarded.
pub const ENRICH_DROP_TOL: f64 = 1e-10;

/// Appends the supremizers `X_u⁻¹ Gᵀ φ` of every constraint mode `φ` to the
/// velocity basis, keeping it `X_u`-orthonormal. Returns the new basis and
/// how many columns were appended.
pub fn add_supremizers(
    velocity: MatRef<'_, f64>,
    norm_u: &CsrMatrix,
    constraints: &[(&CsrMatrix, MatRef<'_, f64>)],
) -> Result<(Mat<f64>, usize)> {
    let chol = Cholesky::new(norm_u.to_dense().as_ref())?;
    let mut cands: Vec<Mat<f64>> = Vec::new();
    for (op, basis) in constraints {
        let rhs = op.tr_mul_dense(*basis);
        cands.push(chol.solve(rhs.as_ref()));
    }
    let total: usize = cands.iter().map(|c| c.ncols()).sum();
    let n = velocity.nrows();
    let mut all = Mat::zeros(n, total);
    let mut off = 0;
    for c in &cands {
        all.subcols_mut(off, c.ncols()).copy_from(c);
        off += c.ncols();
    }
    Ok(orthonormal_extend(velocity, all.as_ref(), Some(norm_u), ENRICH_DROP_TOL))
}

/// Appends the constraint fields' temporal modes to the velocity temporal basis.
pub fn add_temporal_stabilizers(velocity: MatRef<'_, f64>, others: &[MatRef<'_, f64>]) -> (Mat<f64>, usize) {
    let total: usize = others.iter().map(|o| o.ncols()).sum();
    let mut all = Mat::zeros(velocity.nrows(), total);
    let mut off = 0;
    for o in others {
        all.subcols_mut(off, o.ncols()).copy_from(o);
        off += o.ncols();
    }
    orthonormal_extend(velocity, all.as_ref(), None, ENRICH_DROP_TOL)
}
