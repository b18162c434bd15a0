use crate::error::{Error, Result};
use crate::fom::ConvectiveTensor;
use crate::par::{self, Execution};
use faer::{Mat, MatRef};

/// Affine decomposition of the reduced convective term and its Jacobian.
///
/// `k̄_{ab}[m] = Σ c_{ijm} φ_a[i] φ_b[j] φ_m` over pairs `a, b < n_c`, and
/// `K̄_ℓ = Φᵀ J(φ_ℓ) Φ` for `ℓ < n_cJ`, where `J(u)` is the full-order
/// convective Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvectiveAffineSet {
    pub n_c: usize,
    pub n_cj: usize,
    pub n_u: usize,
    /// `k̄` stored as `[(a n_c + b) n_u + m]`.
    pub kbar: Vec<f64>,
    pub kjac: Vec<Mat<f64>>,
}

impl ConvectiveAffineSet {
    pub fn new(tensor: &ConvectiveTensor, phi: MatRef<'_, f64>, n_c: usize, n_cj: usize, exec: Execution) -> Result<Self> {
        let n_u = phi.ncols();
        if n_c > n_u || n_cj > n_u {
            return Err(Error::RankOutOfRange {
                requested: n_c.max(n_cj),
                available: n_u,
            });
        }
        if tensor.dim() != phi.nrows() {
            return Err(Error::Dimension("tensor and basis sizes differ".into()));
        }
        let nf = phi.nrows();
        let entries = tensor.entries();
        let slabs = par::map_range(exec, n_c, |a| {
            // partial[b, m_full] = Σ c_ijm φ_a[i] φ_b[j]
            let mut partial = Mat::<f64>::zeros(n_c, nf);
            for &(i, j, m, v) in entries {
                let w = v * phi[(i, a)];
                if w == 0.0 {
                    continue;
                }
                for b in 0..n_c {
                    partial[(b, m)] += w * phi[(j, b)];
                }
            }
            &partial * phi
        });
        let mut kbar = vec![0.0; n_c * n_c * n_u];
        for (a, slab) in slabs.iter().enumerate() {
            for b in 0..n_c {
                for m in 0..n_u {
                    kbar[(a * n_c + b) * n_u + m] = slab[(b, m)];
                }
            }
        }
        let kjac = par::map_range(exec, n_cj, |l| {
            let col: Vec<f64> = (0..nf).map(|i| phi[(i, l)]).collect();
            let j = tensor.jacobian(&col);
            phi.transpose() * j.mul_dense(phi)
        });
        Ok(Self {
            n_c,
            n_cj,
            n_u,
            kbar,
            kjac,
        })
    }

    pub fn kbar(&self, a: usize, b: usize) -> &[f64] {
        let o = (a * self.n_c + b) * self.n_u;
        &self.kbar[o..o + self.n_u]
    }

    /// `c̄(ū) = Σ_{a,b<n_c} ū_a ū_b k̄_ab`.
    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_u];
        for a in 0..self.n_c {
            for b in 0..self.n_c {
                let w = u[a] * u[b];
                if w != 0.0 {
                    crate::linalg::axpy(w, self.kbar(a, b), &mut c);
                }
            }
        }
        c
    }

    /// `Σ_{ℓ<n_cJ} ū_ℓ K̄_ℓ`.
    pub fn jacobian(&self, u: &[f64]) -> Mat<f64> {
        let mut j = Mat::zeros(self.n_u, self.n_u);
        for (l, k) in self.kjac.iter().enumerate() {
            if u[l] != 0.0 {
                j += k * faer::Scale(u[l]);
            }
        }
        j
    }

    /// Derivative of the truncated `c̄` at `ū`: `Σ_a ū_a (k̄_ab + k̄_ba)` in column `b < n_c`.
    pub fn linearization(&self, u: &[f64]) -> Mat<f64> {
        let mut w = Mat::zeros(self.n_u, self.n_u);
        for a in 0..self.n_c {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..self.n_c {
                let (kab, kba) = (self.kbar(a, b), self.kbar(b, a));
                for m in 0..self.n_u {
                    w[(m, b)] += u[a] * (kab[m] + kba[m]);
                }
            }
        }
        w
    }
}
