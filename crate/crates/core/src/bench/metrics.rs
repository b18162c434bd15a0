use crate::error::{Error, Result};
use crate::fom::{FomOperators, Trajectory};
use crate::linalg::{col_vec, CsrMatrix};
use faer::MatRef;

/// `Σ_n x_nᵀ X x_n` over the columns of `states`; Euclidean when `x` is absent.
pub fn st_norm_sq(states: MatRef<'_, f64>, x: Option<&CsrMatrix>) -> f64 {
    (0..states.ncols())
        .map(|n| {
            let v = col_vec(states, n);
            match x {
                Some(x) => x.quad_form(&v),
                None => v.iter().map(|a| a * a).sum(),
            }
        })
        .sum()
}

/// `‖a − b‖ / ‖b‖` in the block-diagonal space-time norm. `None` when the
/// reference has zero norm.
pub fn relative_error(a: MatRef<'_, f64>, b: MatRef<'_, f64>, x: Option<&CsrMatrix>) -> Result<Option<f64>> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "{}x{} reconstruction against a {}x{} reference",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let den = st_norm_sq(b, x);
    if den <= 0.0 {
        return Ok(None);
    }
    let diff = a - b;
    Ok(Some((st_norm_sq(diff.as_ref(), x).max(0.0) / den).sqrt()))
}

/// Relative errors of velocity, pressure and displacement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub u: Option<f64>,
    pub p: Option<f64>,
    pub d: Option<f64>,
}

impl FieldErrors {
    pub fn as_array(&self) -> [Option<f64>; 3] {
        [self.u, self.p, self.d]
    }
}

pub fn field_errors(rec: &Trajectory, reference: &Trajectory, ops: &FomOperators) -> Result<FieldErrors> {
    Ok(FieldErrors {
        u: relative_error(rec.u.as_ref(), reference.u.as_ref(), Some(&ops.norm_u))?,
        p: relative_error(rec.p.as_ref(), reference.p.as_ref(), Some(&ops.norm_p))?,
        d: relative_error(rec.d.as_ref(), reference.d.as_ref(), Some(&ops.norm_d))?,
    })
}

/// Sample-averaged relative errors. References with zero norm in a field are
/// left out of that field's average.
pub fn error_metrics(pairs: &[(&Trajectory, &Trajectory)], ops: &FomOperators) -> Result<FieldErrors> {
    let per: Vec<FieldErrors> = pairs.iter().map(|(r, f)| field_errors(r, f, ops)).collect::<Result<_>>()?;
    Ok(average_errors(&per))
}

pub fn average_errors(per: &[FieldErrors]) -> FieldErrors {
    let mean = |k: usize, name: &str| -> Option<f64> {
        let vals: Vec<f64> = per.iter().filter_map(|e| e.as_array()[k]).collect();
        let skipped = per.len() - vals.len();
        if skipped > 0 {
            log::warn!("{skipped} sample(s) with zero {name} reference excluded from the average");
        }
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    FieldErrors {
        u: mean(0, "velocity"),
        p: mean(1, "pressure"),
        d: mean(2, "displacement"),
    }
}

/// Full-order unknowns per time step.
pub fn full_spatial_dofs(ops: &FomOperators) -> usize {
    ops.n_u() + ops.n_p() + ops.n_lambda()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn identical_fields_have_zero_error_and_doubling_gives_one() {
        let b = Mat::from_fn(4, 3, |i, j| (i + 2 * j) as f64 - 1.5);
        let x = CsrMatrix::from_triplets(4, 4, &[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0), (3, 3, 0.5), (0, 1, 0.1), (1, 0, 0.1)]).unwrap();
        assert_eq!(relative_error(b.as_ref(), b.as_ref(), Some(&x)).unwrap(), Some(0.0));
        let two = Mat::from_fn(4, 3, |i, j| 2.0 * b[(i, j)]);
        let e = relative_error(two.as_ref(), b.as_ref(), Some(&x)).unwrap().unwrap();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_reference_is_excluded() {
        let z = Mat::<f64>::zeros(2, 2);
        assert_eq!(relative_error(z.as_ref(), z.as_ref(), None).unwrap(), None);
        let per = [
            FieldErrors { u: Some(0.2), p: None, d: Some(0.1) },
            FieldErrors { u: Some(0.4), p: Some(0.3), d: None },
        ];
        let avg = average_errors(&per);
        assert!((avg.u.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(avg.p, Some(0.3));
        assert_eq!(avg.d, Some(0.1));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Mat::<f64>::zeros(2, 3);
        let b = Mat::<f64>::zeros(3, 2);
        assert!(relative_error(a.as_ref(), b.as_ref(), None).is_err());
    }
}
