//! Proper orthogonal decomposition with an energy tolerance, optionally in a
//! weighted inner product and optionally through a randomized range finder.

use crate::error::{Error, Result};
use crate::linalg::{left_svd, Cholesky, CsrMatrix};
use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest rank whose discarded energy is at most `ε²` of the total.
    Tolerance(f64),
    /// Fixed rank, capped by the numerical rank.
    Rank(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedSvd {
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for RandomizedSvd {
    fn default() -> Self {
        Self {
            oversampling: 10,
            power_iterations: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodOptions {
    pub truncation: Truncation,
    pub randomized: Option<RandomizedSvd>,
}

impl PodOptions {
    pub fn tolerance(eps: f64) -> Self {
        Self {
            truncation: Truncation::Tolerance(eps),
            randomized: None,
        }
    }

    pub fn rank(n: usize) -> Self {
        Self {
            truncation: Truncation::Rank(n),
            randomized: None,
        }
    }
}

/// Singular values (descending) and the truncation decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
    pub retained: usize,
    /// Discarded energy relative to the total, `Σ_{i>n} σ_i² / Σ σ_i²`.
    pub discarded_energy: f64,
    pub truncation: Truncation,
}

/// Smallest `n` with `Σ_{i≥n} σ_i² ≤ ε² Σ σ_i²`.
pub fn truncation_rank(sv: &[f64], eps: f64) -> usize {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut tail = total;
    for (n, s) in sv.iter().enumerate() {
        if tail <= eps * eps * total {
            return n;
        }
        tail -= s * s;
    }
    sv.len()
}

fn check_truncation(t: Truncation) -> Result<()> {
    match t {
        Truncation::Tolerance(eps) if !(eps > 0.0 && eps < 1.0) => Err(Error::InvalidTolerance(eps)),
        _ => Ok(()),
    }
}

/// POD basis of the columns of `snapshots`, orthonormal in the `norm` inner
/// product (Euclidean when `None`).
pub fn pod(snapshots: MatRef<'_, f64>, norm: Option<&CsrMatrix>, opts: &PodOptions) -> Result<(Mat<f64>, Spectrum)> {
    check_truncation(opts.truncation)?;
    let n = snapshots.nrows();
    let chol = match norm {
        Some(x) => {
            if x.nrows() != n {
                return Err(Error::Dimension(format!("norm of size {} for {n}-dim snapshots", x.nrows())));
            }
            Some(Cholesky::new(x.to_dense().as_ref())?)
        }
        None => None,
    };
    let weighted;
    let y = match &chol {
        Some(c) => {
            weighted = c.l().transpose() * snapshots;
            weighted.as_ref()
        }
        None => snapshots,
    };
    let (u, sv) = match opts.randomized {
        Some(r) => randomized_left_svd(y, opts.truncation, &r)?,
        None => left_svd(y)?,
    };
    let retained = match opts.truncation {
        Truncation::Tolerance(eps) => truncation_rank(&sv, eps),
        Truncation::Rank(k) => {
            let numerical = sv.iter().filter(|&&s| s > sv.first().copied().unwrap_or(0.0) * 1e-13).count();
            k.min(numerical)
        }
    };
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let kept: f64 = sv[..retained].iter().map(|s| s * s).sum();
    let discarded_energy = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
    let u = u.subcols(0, retained).to_owned();
    let basis = match &chol {
        Some(c) => c.solve((c.l() * &u).as_ref()),
        None => u,
    };
    Ok((
        basis,
        Spectrum {
            singular_values: sv,
            retained,
            discarded_energy,
            truncation: opts.truncation,
        },
    ))
}

/// Left singular pairs from a randomized range finder; the sketch size grows
/// until the requested tolerance or rank is resolved.
fn randomized_left_svd(y: MatRef<'_, f64>, trunc: Truncation, r: &RandomizedSvd) -> Result<(Mat<f64>, Vec<f64>)> {
    let (m, k) = (y.nrows(), y.ncols());
    let full = m.min(k);
    let total = y.squared_norm_l2();
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut target = match trunc {
        Truncation::Rank(n) => n.max(1),
        Truncation::Tolerance(_) => 8,
    };
    loop {
        let l = (target + r.oversampling).min(full);
        let omega = Mat::<f64>::from_fn(k, l, |_, _| StandardNormal.sample(&mut rng));
        let mut q = (y * &omega).qr().compute_thin_Q();
        for _ in 0..r.power_iterations {
            let z = (y.transpose() * &q).qr().compute_thin_Q();
            q = (y * &z).qr().compute_thin_Q();
        }
        let b = q.transpose() * y;
        let (ub, sv) = left_svd(b.as_ref())?;
        let u = &q * &ub;
        let resolved = l == full
            || match trunc {
                Truncation::Rank(n) => l >= n,
                Truncation::Tolerance(eps) => {
                    let kept: f64 = sv.iter().map(|s| s * s).sum();
                    let n = truncation_rank(&sv, eps);
                    total - kept <= eps * eps * total && n < l.saturating_sub(r.oversampling / 2).max(1)
                }
            };
        if resolved {
            return Ok((u, sv));
        }
        target *= 2;
    }
}
