//! Reduced bases: POD, space-time HOSVD and the supremizer / temporal
//! stabilizer enrichments.

pub mod enrich;
pub mod hosvd;
pub mod pod;

pub use enrich::{add_supremizers, add_temporal_stabilizers};
pub use hosvd::{st_hosvd, FieldBasis};
pub use pod::{pod, truncation_rank, PodOptions, RandomizedSvd, Spectrum, Truncation};

use crate::error::{Error, Result};
use crate::fom::{FomOperators, SnapshotSet};
use faer::{Mat, MatRef};

#[derive(Debug, Clone, PartialEq)]
pub struct BasisOptions {
    pub velocity_space: PodOptions,
    pub velocity_time: PodOptions,
    pub pressure_space: PodOptions,
    pub pressure_time: PodOptions,
    pub multiplier_space: PodOptions,
    pub multiplier_time: PodOptions,
    pub supremizers: bool,
    pub stabilizers: bool,
    /// Build the bases from snapshots minus their initial state.
    pub lifting: bool,
}

impl BasisOptions {
    /// Same tolerance for every field, both enrichments on, no lifting.
    pub fn uniform(eps: f64) -> Self {
        let o = PodOptions::tolerance(eps);
        Self {
            velocity_space: o,
            velocity_time: o,
            pressure_space: o,
            pressure_time: o,
            multiplier_space: o,
            multiplier_time: o,
            supremizers: true,
            stabilizers: true,
            lifting: false,
        }
    }

    pub fn with_randomized(mut self, r: Option<RandomizedSvd>) -> Self {
        for o in [
            &mut self.velocity_space,
            &mut self.velocity_time,
            &mut self.pressure_space,
            &mut self.pressure_time,
            &mut self.multiplier_space,
            &mut self.multiplier_time,
        ] {
            o.randomized = r;
        }
        self
    }
}

/// Velocity basis plus one basis per constraint field (pressure first, then
/// one per Dirichlet boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasisSet {
    pub velocity: FieldBasis,
    pub constraints: Vec<FieldBasis>,
    /// Leading velocity spatial modes that come from POD (the rest are supremizers).
    pub velocity_pod_modes: usize,
    pub supremizers: usize,
    pub stabilizers: usize,
    pub lifted: bool,
}

impl ReducedBasisSet {
    /// Unenriched bases built directly from given modes.
    pub fn from_fields(velocity: FieldBasis, constraints: Vec<FieldBasis>) -> Self {
        Self {
            velocity_pod_modes: velocity.n_space(),
            velocity,
            constraints,
            supremizers: 0,
            stabilizers: 0,
            lifted: false,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.velocity.temporal.nrows()
    }

    /// Space-time sizes of all fields in unknown order.
    pub fn field_sizes(&self) -> Vec<usize> {
        std::iter::once(&self.velocity).chain(&self.constraints).map(FieldBasis::size).collect()
    }

    pub fn total_size(&self) -> usize {
        self.field_sizes().iter().sum()
    }

    pub fn check(&self, ops: &FomOperators) -> Result<()> {
        let nt = self.n_steps();
        if self.velocity.spatial.nrows() != ops.n_u() {
            return Err(Error::Dimension("velocity basis rows".into()));
        }
        let ops_c = ops.constraint_operators();
        if ops_c.len() != self.constraints.len() {
            return Err(Error::Dimension(format!(
                "{} constraint bases for {} constraint fields",
                self.constraints.len(),
                ops_c.len()
            )));
        }
        for (b, op) in self.constraints.iter().zip(&ops_c) {
            if b.spatial.nrows() != op.nrows() || b.temporal.nrows() != nt {
                return Err(Error::Dimension("constraint basis shape".into()));
            }
        }
        Ok(())
    }
}

fn minus_column(m: &Mat<f64>, v: &[f64], rows: std::ops::Range<usize>) -> Mat<f64> {
    let off = rows.start;
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(off + i, j)] - v[off + i])
}

/// Builds all field bases from a snapshot set.
pub fn build_bases(ops: &FomOperators, set: &SnapshotSet, opts: &BasisOptions) -> Result<ReducedBasisSet> {
    if set.is_empty() {
        return Err(Error::Missing("snapshots for basis construction".into()));
    }
    let lift = |m: &Mat<f64>, v: &[f64], rows: std::ops::Range<usize>| -> Mat<f64> {
        if opts.lifting {
            minus_column(m, v, rows)
        } else {
            m.subrows(rows.start, rows.len()).to_owned()
        }
    };
    let tr = &set.trajectories;
    let us: Vec<Mat<f64>> = tr.iter().map(|t| lift(&t.u, &t.initial.u[0], 0..ops.n_u())).collect();
    let ps: Vec<Mat<f64>> = tr.iter().map(|t| lift(&t.p, &t.initial.p, 0..ops.n_p())).collect();

    let mut velocity = st_hosvd(&refs(&us), Some(&ops.norm_u), &opts.velocity_space, &opts.velocity_time)?;
    let mut constraints = vec![st_hosvd(&refs(&ps), Some(&ops.norm_p), &opts.pressure_space, &opts.pressure_time)?];
    for k in 0..ops.n_boundaries() {
        let r = ops.block_range(k);
        let ls: Vec<Mat<f64>> = tr.iter().map(|t| lift(&t.lambda, &t.initial.lambda, r.clone())).collect();
        constraints.push(st_hosvd(&refs(&ls), None, &opts.multiplier_space, &opts.multiplier_time)?);
    }
    let velocity_pod_modes = velocity.n_space();
    let mut supremizers = 0;
    if opts.supremizers {
        let cops = ops.constraint_operators();
        let pairs: Vec<_> = cops.iter().zip(&constraints).map(|(op, b)| (op, b.spatial.as_ref())).collect();
        let (enriched, added) = add_supremizers(velocity.spatial.as_ref(), &ops.norm_u, &pairs)?;
        velocity.spatial = enriched;
        supremizers = added;
    }
    let mut stabilizers = 0;
    if opts.stabilizers {
        let others: Vec<_> = constraints.iter().map(|b| b.temporal.as_ref()).collect();
        let (enriched, added) = add_temporal_stabilizers(velocity.temporal.as_ref(), &others);
        velocity.temporal = enriched;
        stabilizers = added;
    }
    Ok(ReducedBasisSet {
        velocity,
        constraints,
        velocity_pod_modes,
        supremizers,
        stabilizers,
        lifted: opts.lifting,
    })
}

fn refs(v: &[Mat<f64>]) -> Vec<MatRef<'_, f64>> {
    v.iter().map(|m| m.as_ref()).collect()
}
