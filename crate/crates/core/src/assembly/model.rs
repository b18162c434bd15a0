use super::convective::ConvectiveAffineSet;
use super::index::IndexMap;
use super::kron::KronOp;
use super::space::SpatialOperators;
use super::temporal::TemporalFactors;
use crate::bases::ReducedBasisSet;
use crate::error::{Error, Result};
use crate::fom::{BdfScheme, FomOperators, TimeGrid, Waveform};
use crate::linalg::{axpy, mat_tr_vec};
use crate::par::Execution;
use faer::{Mat, MatMut, MatRef, Scale};

/// Truncation of the convective affine expansion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperSettings {
    /// Modes kept in the convective term; defaults to the POD velocity modes
    /// (or every velocity mode when `include_supremizers` is set).
    pub n_c: Option<usize>,
    /// Modes kept in the convective Jacobian; defaults to `n_c`.
    pub n_cj: Option<usize>,
    pub include_supremizers: bool,
}

impl HyperSettings {
    pub fn resolve(&self, bases: &ReducedBasisSet) -> Result<(usize, usize)> {
        let n_u = bases.velocity.n_space();
        let default = if self.include_supremizers { n_u } else { bases.velocity_pod_modes.min(n_u) };
        let n_c = self.n_c.unwrap_or(default);
        let n_cj = self.n_cj.unwrap_or(n_c);
        if n_c > n_u || n_cj > n_u {
            return Err(Error::RankOutOfRange {
                requested: n_c.max(n_cj),
                available: n_u,
            });
        }
        Ok((n_c, n_cj))
    }
}

/// Space-only reduced operators; enough for sequential time stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceModel {
    pub scheme: BdfScheme,
    pub dt: f64,
    pub operators: SpatialOperators,
    pub convective: ConvectiveAffineSet,
    pub velocity_basis: Mat<f64>,
    pub constraint_bases: Vec<Mat<f64>>,
}

impl SpaceModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ops: &FomOperators,
        velocity: Mat<f64>,
        constraints: Vec<Mat<f64>>,
        scheme: BdfScheme,
        dt: f64,
        n_c: usize,
        n_cj: usize,
        exec: Execution,
    ) -> Result<Self> {
        let crefs: Vec<MatRef<'_, f64>> = constraints.iter().map(|m| m.as_ref()).collect();
        let operators = SpatialOperators::new(ops, velocity.as_ref(), &crefs)?;
        let convective = ConvectiveAffineSet::new(&ops.convective, velocity.as_ref(), n_c, n_cj, exec)?;
        Ok(Self {
            scheme,
            dt,
            operators,
            convective,
            velocity_basis: velocity,
            constraint_bases: constraints,
        })
    }

    pub fn bdt(&self) -> f64 {
        self.scheme.beta * self.dt
    }

    pub fn n_u(&self) -> usize {
        self.velocity_basis.ncols()
    }

    pub fn constraint_sizes(&self) -> Vec<usize> {
        self.constraint_bases.iter().map(|b| b.ncols()).collect()
    }
}

/// Space-time reduced model: parameter-independent factors of every block.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub space: SpaceModel,
    pub bases: ReducedBasisSet,
    pub time: TemporalFactors,
    pub layout: IndexMap,
}

/// Linear part of the space-time operator at one parameter point.
#[derive(Debug, Clone)]
pub struct LinearBlocks {
    pub uu: KronOp,
    pub uf: Vec<KronOp>,
    pub fu: Vec<KronOp>,
}

impl ReducedModel {
    pub fn build(
        ops: &FomOperators,
        bases: ReducedBasisSet,
        scheme: &BdfScheme,
        dt: f64,
        hyper: &HyperSettings,
        exec: Execution,
    ) -> Result<Self> {
        bases.check(ops)?;
        let (n_c, n_cj) = hyper.resolve(&bases)?;
        let space = SpaceModel::new(
            ops,
            bases.velocity.spatial.clone(),
            bases.constraints.iter().map(|b| b.spatial.clone()).collect(),
            scheme.clone(),
            dt,
            n_c,
            n_cj,
            exec,
        )?;
        let time = TemporalFactors::new(&bases, scheme, dt);
        let shapes = std::iter::once(&bases.velocity)
            .chain(&bases.constraints)
            .map(|b| (b.n_space(), b.n_time()))
            .collect();
        Ok(Self {
            space,
            bases,
            time,
            layout: IndexMap::new(shapes),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.bases.n_steps()
    }

    pub fn size(&self) -> usize {
        self.layout.total()
    }

    pub fn velocity_size(&self) -> usize {
        self.layout.field_len(0)
    }

    pub fn bdt(&self) -> f64 {
        self.space.bdt()
    }

    pub fn grid(&self, t0: f64) -> TimeGrid {
        TimeGrid {
            t0,
            dt: self.space.dt,
            n_steps: self.n_steps(),
        }
    }

    /// Velocity-velocity block for wall coefficients `μ̃`: the time derivative
    /// and wall inertia, viscous terms, and wall stiffness acting through the
    /// displacement recursion.
    pub fn velocity_block(&self, coeffs: &[f64; 3]) -> KronOp {
        let op = &self.space.operators;
        let t = &self.time;
        let bdt = self.bdt();
        let n = (self.layout.shape(0).0, self.layout.shape(0).1);
        let h = &op.mass + &op.wall_mass * Scale(coeffs[0]);
        let mut k = KronOp::new(n, n);
        k.push(&h + &op.viscous * Scale(bdt), t.gram.clone());
        for (a, g) in self.space.scheme.alpha.iter().zip(&t.shifted) {
            k.push(&h * Scale(-a), g.clone());
        }
        k.push(op.wall_operator(coeffs) * Scale(bdt), t.primitive_gram.clone());
        k
    }

    pub fn linear_blocks(&self, coeffs: &[f64; 3]) -> LinearBlocks {
        let bdt = self.bdt();
        let nu = self.layout.shape(0);
        let mut uf = Vec::new();
        let mut fu = Vec::new();
        for (f, g) in self.space.operators.constraints.iter().enumerate() {
            let nf = self.layout.shape(f + 1);
            let cross = &self.time.cross[f];
            uf.push(KronOp::new(nu, nf).with(g.transpose() * Scale(bdt), cross.transpose().to_owned()));
            fu.push(KronOp::new(nf, nu).with(g * Scale(bdt), cross.clone()));
        }
        LinearBlocks {
            uu: self.velocity_block(coeffs),
            uf,
            fu,
        }
    }

    /// Dense linear operator `Â + Â^Γ + Â_s + Ê_s` with constraint couplings.
    pub fn assemble_lhs(&self, coeffs: &[f64; 3]) -> Mat<f64> {
        let n = self.size();
        let mut a = Mat::zeros(n, n);
        self.add_lhs(coeffs, a.as_mut());
        a
    }

    pub fn add_lhs(&self, coeffs: &[f64; 3], mut out: MatMut<'_, f64>) {
        let b = self.linear_blocks(coeffs);
        b.uu.add_to(out.as_mut(), 0, 0, 1.0);
        for f in 0..b.uf.len() {
            let off = self.layout.offset(f + 1);
            b.uf[f].add_to(out.as_mut(), 0, off, 1.0);
            b.fu[f].add_to(out.as_mut(), off, 0, 1.0);
        }
    }

    pub fn apply_lhs(&self, coeffs: &[f64; 3], x: &[f64]) -> Vec<f64> {
        let b = self.linear_blocks(coeffs);
        let mut y = vec![0.0; self.size()];
        let nu = self.velocity_size();
        b.uu.apply_add(&x[..nu], &mut y[..nu], 1.0);
        for f in 0..b.uf.len() {
            let r = self.layout.offset(f + 1)..self.layout.offset(f + 2);
            b.uf[f].apply_add(&x[r.clone()], &mut y[..nu], 1.0);
            b.fu[f].apply_add(&x[..nu], &mut y[r], 1.0);
        }
        y
    }

    /// Dirichlet forcing `F̂`, nonzero in the multiplier blocks only.
    pub fn assemble_rhs(&self, flow: &[f64], waveform: &Waveform, t0: f64) -> Vec<f64> {
        let grid = self.grid(t0);
        let bdt = self.bdt();
        let mut f = vec![0.0; self.size()];
        for (k, prof) in self.space.operators.rhs_profiles.iter().enumerate() {
            let field = k + 2;
            let psi = self.bases.constraints[k + 1].temporal.as_ref();
            let signal: Vec<f64> = (0..grid.n_steps).map(|n| waveform.eval(grid.time(n), flow, k)).collect();
            let tproj = mat_tr_vec(psi, &signal);
            let (ns, nt) = self.layout.shape(field);
            for is in 0..ns {
                for it in 0..nt {
                    f[self.layout.index(field, is, it)] = bdt * prof[is] * tproj[it];
                }
            }
        }
        f
    }

    /// Velocity coefficients as an `n_s × n_t` matrix.
    pub fn velocity_coefficients(&self, x: &[f64]) -> Mat<f64> {
        let (ns, nt) = self.layout.shape(0);
        Mat::from_fn(ns, nt, |i, j| x[i * nt + j])
    }

    /// `V_ℓ[b, c] = Σ_a Û[ℓ, a] ψ³[a, b, c]` for `ℓ < rows`.
    fn contract_triple(&self, u: MatRef<'_, f64>, rows: usize, nz: &[(usize, usize, usize, f64)]) -> Vec<Mat<f64>> {
        let nt = self.layout.shape(0).1;
        let mut v = vec![Mat::zeros(nt, nt); rows];
        for &(a, b, c, w) in nz {
            for (l, vl) in v.iter_mut().enumerate() {
                let ua = u[(l, a)];
                if ua != 0.0 {
                    vl[(b, c)] += w * ua;
                }
            }
        }
        v
    }

    /// Hyper-reduced convective term `ĉ(û)` over the velocity unknowns; with
    /// `ic` set, the velocity is `ū₀ ⊗ 1 + û`.
    pub fn convective_residual(&self, u_hat: &[f64], ic: Option<&[f64]>) -> Vec<f64> {
        let conv = &self.space.convective;
        let (ns, nt) = self.layout.shape(0);
        let bdt = self.bdt();
        let u = self.velocity_coefficients(u_hat);
        let nz = &self.time.triple_nz;
        let v = self.contract_triple(u.as_ref(), conv.n_c, nz);
        let uc = u.subrows(0, conv.n_c);
        let mut c = Mat::<f64>::zeros(ns, nt);
        for (a, va) in v.iter().enumerate() {
            let q = uc * va; // q[b, mt]
            for b in 0..conv.n_c {
                let kab = conv.kbar(a, b);
                for mt in 0..nt {
                    let w = q[(b, mt)];
                    if w != 0.0 {
                        for ms in 0..ns {
                            c[(ms, mt)] += w * kab[ms];
                        }
                    }
                }
            }
        }
        if let Some(a0) = ic {
            let c0 = conv.eval(a0);
            let lin = conv.linearization(a0);
            c += lin * (&u * &self.time.gram);
            for ms in 0..ns {
                for mt in 0..nt {
                    c[(ms, mt)] += c0[ms] * self.time.ones[mt];
                }
            }
        }
        let mut out = vec![0.0; ns * nt];
        for ms in 0..ns {
            for mt in 0..nt {
                out[ms * nt + mt] = bdt * c[(ms, mt)];
            }
        }
        out
    }

    /// Adds `scale · ∂ĉ/∂û` (truncated to `n_cJ` modes) to the velocity block of `out`.
    pub fn add_convective_jacobian(&self, u_hat: &[f64], ic: Option<&[f64]>, mut out: MatMut<'_, f64>, scale: f64) {
        let conv = &self.space.convective;
        if conv.n_cj == 0 {
            return;
        }
        let n = self.layout.shape(0);
        let bdt = self.bdt();
        let u = self.velocity_coefficients(u_hat);
        let nz = &self.time.triple_nz;
        let v = self.contract_triple(u.as_ref(), conv.n_cj, nz);
        for (l, vl) in v.into_iter().enumerate() {
            KronOp::new(n, n)
                .with(conv.kjac[l].clone(), vl)
                .add_to(out.as_mut(), 0, 0, scale * bdt);
        }
        if let Some(a0) = ic {
            let mut kj = Mat::zeros(n.0, n.0);
            for l in 0..conv.n_cj {
                kj += &conv.kjac[l] * Scale(a0[l]);
            }
            KronOp::new(n, n).with(kj, self.time.gram.clone()).add_to(out, 0, 0, scale * bdt);
        }
    }

    /// Residual `F − A ŵ − E ĉ(û)` for a right-hand side `f` that already
    /// contains any lifting contributions.
    pub fn residual(&self, coeffs: &[f64; 3], f: &[f64], w: &[f64], ic: Option<&[f64]>) -> Vec<f64> {
        let mut r = f.to_vec();
        axpy(-1.0, &self.apply_lhs(coeffs, w), &mut r);
        let nu = self.velocity_size();
        let c = self.convective_residual(&w[..nu], ic);
        axpy(-1.0, &c, &mut r[..nu]);
        r
    }

    /// Jacobian of [`Self::residual`] with respect to `ŵ`.
    pub fn residual_jacobian(&self, coeffs: &[f64; 3], w: &[f64], ic: Option<&[f64]>) -> Mat<f64> {
        let mut j = self.assemble_lhs(coeffs);
        let nu = self.velocity_size();
        self.add_convective_jacobian(&w[..nu], ic, j.as_mut(), 1.0);
        -j
    }
}
