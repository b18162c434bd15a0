//! Seeded generator of synthetic operator families with the structure of a
//! finite-element discretization: SPD mass and viscous blocks over a local
//! graph, full-row-rank constraints, wall operators supported on a DOF subset
//! and an energy-neutral convective tensor.

use super::operators::{ConvectiveTensor, FomOperators, Resistance};
use crate::error::{Error, Result};
use crate::linalg::{left_svd, CsrMatrix};
use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_u: usize,
    pub n_p: usize,
    pub multiplier_blocks: Vec<usize>,
    /// Fraction of velocity DOFs on the compliant wall.
    pub wall_fraction: f64,
    pub n_resistances: usize,
    pub viscosity: f64,
    /// Magnitude of the convective tensor entries.
    pub convection: f64,
    /// Scale of the wall stiffness operators.
    pub wall_stiffness: f64,
    pub wall_damping: f64,
    /// Convective entries generated per output row before skew-symmetrization.
    pub convective_per_row: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_u: 240,
            n_p: 40,
            multiplier_blocks: vec![12, 8],
            wall_fraction: 0.2,
            n_resistances: 1,
            viscosity: 10.0,
            convection: 2.0,
            wall_stiffness: 1e-4,
            wall_damping: 1.0,
            convective_per_row: 4,
            seed: 1,
        }
    }
}

fn neighbors(adj: &[Vec<(usize, f64)>], i: usize) -> impl Iterator<Item = usize> + '_ {
    adj[i].iter().map(|e| e.0)
}

pub fn generate_operators(cfg: &SynthConfig) -> Result<FomOperators> {
    let n = cfg.n_u;
    let n_lambda: usize = cfg.multiplier_blocks.iter().sum();
    if n < 8 || cfg.n_p == 0 || cfg.multiplier_blocks.is_empty() || cfg.multiplier_blocks.contains(&0) {
        return Err(Error::Infeasible("generator needs N_u >= 8, N_p >= 1 and non-empty multiplier blocks".into()));
    }
    if cfg.n_p + n_lambda > n {
        return Err(Error::Infeasible(format!(
            "N_p + N_lambda = {} exceeds N_u = {n}",
            cfg.n_p + n_lambda
        )));
    }
    if !(0.0..1.0).contains(&cfg.wall_fraction) {
        return Err(Error::Infeasible("wall fraction must lie in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Local ring graph with second neighbours and a few chords.
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let add_edge = |adj: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
        if a != b && !adj[a].iter().any(|e| e.0 == b) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    };
    for i in 0..n {
        for step in 1..=2 {
            let w = rng.random_range(0.5..1.5) / step as f64;
            add_edge(&mut adj, i, (i + step) % n, w);
        }
    }
    for _ in 0..n / 10 {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(3..n.max(4) / 4 + 4)) % n;
        let w = rng.random_range(0.2..0.6);
        add_edge(&mut adj, a, b, w);
    }
    for row in adj.iter_mut() {
        row.sort_by_key(|e| e.0);
    }

    let mut lap = Vec::new();
    let mut mass = Vec::new();
    for i in 0..n {
        let deg: f64 = adj[i].iter().map(|e| e.1).sum();
        lap.push((i, i, cfg.viscosity * (deg + 0.05)));
        mass.push((i, i, 1.0 + 0.1 * rng.random::<f64>()));
        for &(j, w) in &adj[i] {
            lap.push((i, j, -cfg.viscosity * w));
            mass.push((i, j, 0.03 * w));
        }
    }
    let mass = CsrMatrix::from_triplets(n, n, &mass)?;
    let stiffness = CsrMatrix::from_triplets(n, n, &lap)?;
    let norm_u = mass.add_scaled(1.0, &stiffness)?;

    // Wall DOFs and operators supported on them.
    let n_wall = ((cfg.wall_fraction * n as f64).round() as usize).max(2);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut wall_dofs: Vec<usize> = perm[..n_wall].to_vec();
    wall_dofs.sort_unstable();
    let mut wm = Vec::new();
    let mut ws1 = Vec::new();
    let mut ws2 = Vec::new();
    for (k, &i) in wall_dofs.iter().enumerate() {
        wm.push((i, i, 0.5 + 0.5 * rng.random::<f64>()));
        ws1.push((i, i, cfg.wall_stiffness * 0.1));
        ws2.push((i, i, cfg.wall_stiffness * rng.random_range(0.5..1.5)));
        if let Some(&j) = wall_dofs.get(k + 1) {
            let w = cfg.wall_stiffness * rng.random_range(0.5..1.5);
            ws1.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
            wm.extend([(i, j, 0.05), (j, i, 0.05)]);
        }
    }
    let wall_mass = CsrMatrix::from_triplets(n, n, &wm)?;
    let wall_stiffness = [CsrMatrix::from_triplets(n, n, &ws1)?, CsrMatrix::from_triplets(n, n, &ws2)?];

    // Constraints: each row owns a distinct pivot column, other entries avoid
    // pivot columns, so the pivot submatrix is diagonal and [B; L] has full row rank.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let lambda_pivots = &perm[..n_lambda];
    let p_pivots = &perm[n_lambda..n_lambda + cfg.n_p];
    let mut is_pivot = vec![false; n];
    for &c in &perm[..n_lambda + cfg.n_p] {
        is_pivot[c] = true;
    }
    let mut lt = Vec::new();
    for (r, &c) in lambda_pivots.iter().enumerate() {
        lt.push((r, c, 1.0));
        for j in neighbors(&adj, c).filter(|&j| !is_pivot[j]).take(2) {
            lt.push((r, j, 0.3));
        }
    }
    let mut bt = Vec::new();
    for (r, &c) in p_pivots.iter().enumerate() {
        bt.push((r, c, 1.0));
        for (j, w) in adj[c].iter().copied().filter(|e| !is_pivot[e.0]).take(3) {
            bt.push((r, j, -0.4 * w));
        }
    }
    let multiplier = CsrMatrix::from_triplets(n_lambda, n, &lt)?;
    let divergence = CsrMatrix::from_triplets(cfg.n_p, n, &bt)?;

    let mut pn = Vec::new();
    for i in 0..cfg.n_p {
        pn.push((i, i, 1.0 + 0.2 * rng.random::<f64>()));
        if i + 1 < cfg.n_p {
            pn.extend([(i, i + 1, -0.2), (i + 1, i, -0.2)]);
        }
    }
    let norm_p = CsrMatrix::from_triplets(cfg.n_p, cfg.n_p, &pn)?;

    // Resistances read the flux through DOFs near the last boundary's pivots.
    let last = *cfg.multiplier_blocks.last().unwrap();
    let outlet = &lambda_pivots[n_lambda - last..];
    let mut resistances = Vec::new();
    for k in 0..cfg.n_resistances {
        let mut flux = vec![0.0; n];
        for &c in outlet.iter().skip(k).step_by(cfg.n_resistances.max(1)) {
            for j in neighbors(&adj, c).filter(|&j| !is_pivot[j]) {
                flux[j] = 0.2;
            }
        }
        resistances.push(Resistance {
            value: 0.5 * cfg.viscosity,
            flux,
        });
    }

    let mut entries = Vec::new();
    let scale = cfg.convection / (cfg.convective_per_row.max(1) as f64).sqrt();
    for m in 0..n {
        let local: Vec<usize> = std::iter::once(m).chain(neighbors(&adj, m)).collect();
        for _ in 0..cfg.convective_per_row {
            let i = local[rng.random_range(0..local.len())];
            let j = local[rng.random_range(0..local.len())];
            let v: f64 = StandardNormal.sample(&mut rng);
            entries.push((i, j, m, scale * v));
        }
    }
    let convective = ConvectiveTensor::from_entries(n, &entries)?.skew_symmetrized();

    let dirichlet_profiles = cfg
        .multiplier_blocks
        .iter()
        .enumerate()
        .map(|(k, &nb)| {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            (0..nb).map(|i| sign * (1.0 - 0.5 * i as f64 / nb as f64)).collect()
        })
        .collect();

    let ops = FomOperators {
        norm_d: wall_mass.clone(),
        mass,
        stiffness,
        divergence,
        multiplier,
        wall_mass,
        wall_stiffness,
        resistances,
        convective,
        norm_u,
        norm_p,
        wall_dofs,
        multiplier_blocks: cfg.multiplier_blocks.clone(),
        dirichlet_profiles,
        wall_damping: cfg.wall_damping,
    };
    ops.check_shapes()?;
    let smin = constraint_singular_value(&ops)?;
    if smin < 1e-8 {
        return Err(Error::Infeasible(format!("constraint block is rank deficient (sigma_min {smin:.3e})")));
    }
    Ok(ops)
}

/// Smallest singular value of the stacked constraint operator `[B; L]`.
pub fn constraint_singular_value(ops: &FomOperators) -> Result<f64> {
    let stacked = ops.divergence.to_dense();
    let l = ops.multiplier.to_dense();
    let rows = stacked.nrows() + l.nrows();
    let m = Mat::from_fn(rows, ops.n_u(), |i, j| {
        if i < stacked.nrows() {
            stacked[(i, j)]
        } else {
            l[(i - stacked.nrows(), j)]
        }
    });
    let (_, s) = left_svd(m.as_ref())?;
    Ok(s.last().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_u: 40,
            n_p: 6,
            multiplier_blocks: vec![3, 2],
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_operators() {
        let a = generate_operators(&small()).unwrap();
        let b = generate_operators(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_operators(&SynthConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.mass, c.mass);
    }

    #[test]
    fn infeasible_sizes_are_rejected() {
        let cfg = SynthConfig {
            n_u: 10,
            n_p: 8,
            multiplier_blocks: vec![3],
            ..SynthConfig::default()
        };
        assert!(matches!(generate_operators(&cfg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn wall_operators_live_on_wall_dofs() {
        let ops = generate_operators(&small()).unwrap();
        let on_wall = |i: usize| ops.wall_dofs.binary_search(&i).is_ok();
        for m in [&ops.wall_mass, &ops.wall_stiffness[0], &ops.wall_stiffness[1]] {
            assert!(m.triplets().iter().all(|&(i, j, _)| on_wall(i) && on_wall(j)));
        }
    }
}
