use crate::error::{Error, Result};
use crate::fom::FomOperators;
use crate::linalg::{weighted_gram, CsrMatrix};
use faer::{Mat, MatRef};

/// Galerkin projections of the full-order operators onto the spatial bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperators {
    pub mass: Mat<f64>,
    /// Projection of `A + Σ R_k q_k q_kᵀ`.
    pub viscous: Mat<f64>,
    pub wall_mass: Mat<f64>,
    pub wall_stiffness: [Mat<f64>; 2],
    /// `Φ_fᵀ G_f Φ_u` for each constraint field (`n_f × n_u`).
    pub constraints: Vec<Mat<f64>>,
    /// `Φ_{λ_k}ᵀ g_k` for each Dirichlet boundary.
    pub rhs_profiles: Vec<Vec<f64>>,
    pub wall_damping: f64,
}

fn project(phi: MatRef<'_, f64>, op: &CsrMatrix, psi: MatRef<'_, f64>) -> Mat<f64> {
    weighted_gram(phi, psi, Some(op))
}

impl SpatialOperators {
    pub fn new(ops: &FomOperators, velocity: MatRef<'_, f64>, constraints: &[MatRef<'_, f64>]) -> Result<Self> {
        let cops = ops.constraint_operators();
        if cops.len() != constraints.len() {
            return Err(Error::Dimension(format!(
                "{} constraint bases for {} constraint fields",
                constraints.len(),
                cops.len()
            )));
        }
        if velocity.nrows() != ops.n_u() {
            return Err(Error::Dimension("velocity basis rows".into()));
        }
        let proj_c = cops
            .iter()
            .zip(constraints)
            .map(|(g, phi)| {
                if phi.nrows() != g.nrows() {
                    return Err(Error::Dimension("constraint basis rows".into()));
                }
                Ok(phi.transpose() * g.mul_dense(velocity))
            })
            .collect::<Result<Vec<_>>>()?;
        let rhs_profiles = ops
            .dirichlet_profiles
            .iter()
            .zip(&constraints[1..])
            .map(|(g, phi)| crate::linalg::mat_tr_vec(*phi, g))
            .collect();
        Ok(Self {
            mass: project(velocity, &ops.mass, velocity),
            viscous: project(velocity, &ops.viscous_with_resistance(), velocity),
            wall_mass: project(velocity, &ops.wall_mass, velocity),
            wall_stiffness: [
                project(velocity, &ops.wall_stiffness[0], velocity),
                project(velocity, &ops.wall_stiffness[1], velocity),
            ],
            constraints: proj_c,
            rhs_profiles,
            wall_damping: ops.wall_damping,
        })
    }

    pub fn n_u(&self) -> usize {
        self.mass.nrows()
    }

    /// `μ̃₂ Ā_s¹ + μ̃₃ Ā_s² + c_s M̄_s`.
    pub fn wall_operator(&self, coeffs: &[f64; 3]) -> Mat<f64> {
        let mut k = &self.wall_stiffness[0] * faer::Scale(coeffs[1]) + &self.wall_stiffness[1] * faer::Scale(coeffs[2]);
        k += &self.wall_mass * faer::Scale(self.wall_damping);
        k
    }
}
