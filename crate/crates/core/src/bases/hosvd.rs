use super::pod::{pod, PodOptions, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use faer::{Mat, MatRef};

/// Spatial and temporal basis of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBasis {
    /// `N_s × n_s`, orthonormal in the field norm.
    pub spatial: Mat<f64>,
    /// `N_t × n_t`, Euclidean-orthonormal.
    pub temporal: Mat<f64>,
    pub spatial_spectrum: Option<Spectrum>,
    pub temporal_spectrum: Option<Spectrum>,
}

impl FieldBasis {
    pub fn new(spatial: Mat<f64>, temporal: Mat<f64>) -> Self {
        Self {
            spatial,
            temporal,
            spatial_spectrum: None,
            temporal_spectrum: None,
        }
    }

    pub fn n_space(&self) -> usize {
        self.spatial.ncols()
    }

    pub fn n_time(&self) -> usize {
        self.temporal.ncols()
    }

    /// Number of space-time modes, `n_s n_t`.
    pub fn size(&self) -> usize {
        self.n_space() * self.n_time()
    }

    /// Reduced coordinates `Φᵀ X S Ψ` of a trajectory `S` (`N_s × N_t`).
    pub fn project(&self, traj: MatRef<'_, f64>, norm: Option<&CsrMatrix>) -> Mat<f64> {
        let xs = match norm {
            Some(x) => x.mul_dense(traj),
            None => traj.to_owned(),
        };
        self.spatial.transpose() * xs * &self.temporal
    }

    /// `Φ Ŵ Ψᵀ` for a coefficient matrix `Ŵ` (`n_s × n_t`).
    pub fn expand(&self, coeffs: MatRef<'_, f64>) -> Mat<f64> {
        &self.spatial * coeffs * self.temporal.transpose()
    }
}

/// Sequentially truncated HOSVD of the snapshot tensor `N_s × N_t × M`:
/// spatial POD of the mode-1 unfolding, then temporal POD of the projected
/// coefficients' mode-2 unfolding.
pub fn st_hosvd(
    samples: &[MatRef<'_, f64>],
    norm: Option<&CsrMatrix>,
    spatial: &PodOptions,
    temporal: &PodOptions,
) -> Result<FieldBasis> {
    let first = samples.first().ok_or_else(|| Error::Missing("snapshots for ST-HOSVD".into()))?;
    let (ns, nt) = (first.nrows(), first.ncols());
    if samples.iter().any(|s| s.nrows() != ns || s.ncols() != nt) {
        return Err(Error::Dimension("snapshot samples differ in shape".into()));
    }
    let unfold = Mat::from_fn(ns, nt * samples.len(), |i, c| samples[c / nt][(i, c % nt)]);
    let (phi, sspec) = pod(unfold.as_ref(), norm, spatial)?;
    let coeffs: Vec<Mat<f64>> = samples
        .iter()
        .map(|s| {
            let xs = match norm {
                Some(x) => x.mul_dense(*s),
                None => s.to_owned(),
            };
            phi.transpose() * xs
        })
        .collect();
    let k = phi.ncols();
    let time_unfold = Mat::from_fn(nt, k * samples.len(), |n, c| coeffs[c / k.max(1)][(c % k.max(1), n)]);
    let (psi, tspec) = pod(time_unfold.as_ref(), None, temporal)?;
    Ok(FieldBasis {
        spatial: phi,
        temporal: psi,
        spatial_spectrum: Some(sspec),
        temporal_spectrum: Some(tspec),
    })
}
