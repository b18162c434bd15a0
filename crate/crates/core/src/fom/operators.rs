use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use std::collections::BTreeMap;
use std::ops::Range;

/// Third-order convective tensor: `c(u)_m = Σ_{i,j} u_i u_j c_{ijm}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvectiveTensor {
    n: usize,
    entries: Vec<(usize, usize, usize, f64)>,
}

impl ConvectiveTensor {
    /// Duplicate `(i, j, m)` entries are summed; entries are kept sorted.
    pub fn from_entries(n: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for &(i, j, m, v) in entries {
            if i >= n || j >= n || m >= n {
                return Err(Error::Dimension(format!("tensor entry ({i}, {j}, {m}) outside size {n}")));
            }
            *map.entry((i, j, m)).or_insert(0.0) += v;
        }
        Ok(Self {
            n,
            entries: map.into_iter().map(|((i, j, m), v)| (i, j, m, v)).collect(),
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|e| e.3 * e.3).sum::<f64>().sqrt()
    }

    /// Antisymmetric part in the last two indices, `(c_ijm - c_imj) / 2`,
    /// which makes `uᵀ c(u)` vanish identically.
    pub fn skew_symmetrized(&self) -> Self {
        let mut all = Vec::with_capacity(2 * self.entries.len());
        for &(i, j, m, v) in &self.entries {
            all.push((i, j, m, 0.5 * v));
            all.push((i, m, j, -0.5 * v));
        }
        let mut out = Self::from_entries(self.n, &all).expect("indices unchanged");
        out.entries.retain(|e| e.3 != 0.0);
        out
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for &(i, j, m, v) in &self.entries {
            c[m] += v * u[i] * u[j];
        }
        c
    }

    /// Jacobian `J_mi = Σ_j u_j (c_jim + c_ijm)` as triplets (row m, col i).
    pub fn jacobian_triplets(&self, u: &[f64], scale: f64, out: &mut Vec<(usize, usize, f64)>) {
        for &(i, j, m, v) in &self.entries {
            out.push((m, i, scale * v * u[j]));
            out.push((m, j, scale * v * u[i]));
        }
    }

    pub fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        let mut t = Vec::with_capacity(2 * self.entries.len());
        self.jacobian_triplets(u, 1.0, &mut t);
        CsrMatrix::from_triplets(self.n, self.n, &t).expect("tensor indices in range")
    }
}

/// Lumped outflow resistance contributing `R q qᵀ` to the momentum block.
#[derive(Debug, Clone, PartialEq)]
pub struct Resistance {
    pub value: f64,
    pub flux: Vec<f64>,
}

/// Parameter-independent full-order operators of the coupled flow/wall problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FomOperators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub divergence: CsrMatrix,
    pub multiplier: CsrMatrix,
    pub wall_mass: CsrMatrix,
    pub wall_stiffness: [CsrMatrix; 2],
    pub resistances: Vec<Resistance>,
    pub convective: ConvectiveTensor,
    pub norm_u: CsrMatrix,
    pub norm_p: CsrMatrix,
    pub norm_d: CsrMatrix,
    /// Velocity DOFs on the compliant wall.
    pub wall_dofs: Vec<usize>,
    /// Number of multiplier rows owned by each Dirichlet boundary.
    pub multiplier_blocks: Vec<usize>,
    /// Spatial profile of the imposed velocity on each Dirichlet boundary.
    pub dirichlet_profiles: Vec<Vec<f64>>,
    /// Wall damping coefficient multiplying the wall mass in the stiffness term.
    pub wall_damping: f64,
}

impl FomOperators {
    pub fn n_u(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.divergence.nrows()
    }

    pub fn n_lambda(&self) -> usize {
        self.multiplier.nrows()
    }

    pub fn n_boundaries(&self) -> usize {
        self.multiplier_blocks.len()
    }

    pub fn n_space(&self) -> usize {
        self.n_u() + self.n_p() + self.n_lambda()
    }

    pub fn block_range(&self, k: usize) -> Range<usize> {
        let start: usize = self.multiplier_blocks[..k].iter().sum();
        start..start + self.multiplier_blocks[k]
    }

    /// Rows of the multiplier coupling owned by boundary `k`.
    pub fn multiplier_block(&self, k: usize) -> CsrMatrix {
        let r = self.block_range(k);
        let trips: Vec<_> = self
            .multiplier
            .triplets()
            .into_iter()
            .filter(|t| r.contains(&t.0))
            .map(|(i, j, v)| (i - r.start, j, v))
            .collect();
        CsrMatrix::from_triplets(r.len(), self.n_u(), &trips).expect("rows in range")
    }

    /// Constraint operators in field order: divergence, then one per boundary.
    pub fn constraint_operators(&self) -> Vec<CsrMatrix> {
        let mut out = vec![self.divergence.clone()];
        out.extend((0..self.n_boundaries()).map(|k| self.multiplier_block(k)));
        out
    }

    pub fn resistance_matrix(&self) -> CsrMatrix {
        let n = self.n_u();
        let mut trips = Vec::new();
        for r in &self.resistances {
            let support: Vec<usize> = (0..n).filter(|&i| r.flux[i] != 0.0).collect();
            for &i in &support {
                for &j in &support {
                    trips.push((i, j, r.value * r.flux[i] * r.flux[j]));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &trips).expect("flux indices in range")
    }

    /// `A + Σ_k R_k q_k q_kᵀ`.
    pub fn viscous_with_resistance(&self) -> CsrMatrix {
        self.stiffness
            .add_scaled(1.0, &self.resistance_matrix())
            .expect("same shape")
    }

    /// `μ̃₂ A_s¹ + μ̃₃ A_s² + c_s M_s` for wall coefficients `μ̃`.
    pub fn wall_operator(&self, coeffs: &[f64; 3]) -> CsrMatrix {
        self.wall_stiffness[0]
            .scaled(coeffs[1])
            .add_scaled(coeffs[2], &self.wall_stiffness[1])
            .and_then(|m| m.add_scaled(self.wall_damping, &self.wall_mass))
            .expect("same shape")
    }

    /// Shape consistency of every operator.
    pub fn check_shapes(&self) -> Result<()> {
        let (nu, np, nl) = (self.n_u(), self.n_p(), self.n_lambda());
        let square = [
            ("mass", &self.mass),
            ("stiffness", &self.stiffness),
            ("wall mass", &self.wall_mass),
            ("wall stiffness 1", &self.wall_stiffness[0]),
            ("wall stiffness 2", &self.wall_stiffness[1]),
            ("velocity norm", &self.norm_u),
            ("displacement norm", &self.norm_d),
        ];
        for (name, m) in square {
            if m.nrows() != nu || m.ncols() != nu {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {nu}x{nu}", m.nrows(), m.ncols())));
            }
        }
        if self.divergence.ncols() != nu || self.multiplier.ncols() != nu {
            return Err(Error::Dimension("constraint operators must have N_u columns".into()));
        }
        if self.norm_p.nrows() != np || self.norm_p.ncols() != np {
            return Err(Error::Dimension("pressure norm shape".into()));
        }
        if self.multiplier_blocks.iter().sum::<usize>() != nl {
            return Err(Error::Dimension("multiplier blocks do not sum to N_lambda".into()));
        }
        if self.dirichlet_profiles.len() != self.multiplier_blocks.len()
            || self.dirichlet_profiles.iter().zip(&self.multiplier_blocks).any(|(g, &n)| g.len() != n)
        {
            return Err(Error::Dimension("Dirichlet profiles do not match multiplier blocks".into()));
        }
        if self.convective.dim() != nu {
            return Err(Error::Dimension("convective tensor size".into()));
        }
        if self.resistances.iter().any(|r| r.flux.len() != nu) {
            return Err(Error::Dimension("resistance flux length".into()));
        }
        if self.wall_dofs.iter().any(|&i| i >= nu) {
            return Err(Error::Dimension("wall DOF out of range".into()));
        }
        Ok(())
    }

    /// Relative energy injected by the convective term, `|uᵀ c(u)| / (‖u‖³ ‖C‖)`.
    pub fn convective_energy(&self, u: &[f64]) -> f64 {
        let nu = crate::linalg::norm2(u);
        let nc = self.convective.frobenius();
        if nu == 0.0 || nc == 0.0 {
            return 0.0;
        }
        dot(u, &self.convective.eval(u)).abs() / (nu.powi(3) * nc)
    }
}
