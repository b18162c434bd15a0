use crate::bases::ReducedBasisSet;
use crate::fom::BdfScheme;
use faer::{Mat, MatRef};

/// Dense third-order tensor, first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[a + self.dims[0] * (b + self.dims[1] * c)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[a + self.dims[0] * (b + self.dims[1] * c)] = v;
    }

    /// Nonzero entries as `(a, b, c, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, usize, f64)> {
        let [n0, n1, _] = self.dims;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, &v)| (k % n0, (k / n0) % n1, k / (n0 * n1), v))
            .collect()
    }
}

/// Applies the displacement recursion `y_n = βΔt v_n + Σ_s α_s y_{n-s}` with
/// zero history to every column.
pub fn primitive(scheme: &BdfScheme, dt: f64, v: MatRef<'_, f64>) -> Mat<f64> {
    let bdt = scheme.beta * dt;
    let mut y = Mat::zeros(v.nrows(), v.ncols());
    for j in 0..v.ncols() {
        for n in 0..v.nrows() {
            let mut acc = bdt * v[(n, j)];
            for (s, a) in scheme.alpha.iter().enumerate() {
                if n > s {
                    acc += a * y[(n - s - 1, j)];
                }
            }
            y[(n, j)] = acc;
        }
    }
    y
}

/// `(G_s)_{ab} = Σ_n ψ_a[n] ψ_b[n - s]`.
pub fn shifted_gram(psi: MatRef<'_, f64>, s: usize) -> Mat<f64> {
    let (nt, k) = (psi.nrows(), psi.ncols());
    if s >= nt {
        return Mat::zeros(k, k);
    }
    psi.subrows(s, nt - s).transpose() * psi.subrows(0, nt - s)
}

pub fn triple_product(psi: MatRef<'_, f64>) -> Tensor3 {
    let (nt, k) = (psi.nrows(), psi.ncols());
    let mut t = Tensor3::zeros([k, k, k]);
    // Accumulate the sorted index triples a <= b <= c row by row, skipping
    // zeros so that sparse (e.g. identity) bases stay cheap.
    let mut row = Vec::with_capacity(k);
    for n in 0..nt {
        row.clear();
        row.extend((0..k).filter(|&j| psi[(n, j)] != 0.0).map(|j| (j, psi[(n, j)])));
        for (x, &(a, va)) in row.iter().enumerate() {
            for (y, &(b, vb)) in row.iter().enumerate().skip(x) {
                for &(c, vc) in &row[y..] {
                    let i = a + k * (b + k * c);
                    t.data[i] += va * vb * vc;
                }
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            for c in b..k {
                let v = t.get(a, b, c);
                for (x, y, z) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    t.set(x, y, z, v);
                }
            }
        }
    }
    t
}

fn column_sums(psi: MatRef<'_, f64>, from: usize) -> Vec<f64> {
    (0..psi.ncols())
        .map(|j| (from..psi.nrows()).map(|n| psi[(n, j)]).sum())
        .collect()
}

/// Parameter-independent temporal factors of the space-time blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalFactors {
    /// `Ψᵀ Ψ` of the velocity temporal basis.
    pub gram: Mat<f64>,
    /// Shifted Gram matrices `G_s`, `s = 1..S`.
    pub shifted: Vec<Mat<f64>>,
    /// Displacement recursion applied to each velocity temporal mode (`N_t × n_t`).
    pub primitive: Mat<f64>,
    /// `Ψᵀ P`.
    pub primitive_gram: Mat<f64>,
    /// `Ψ_fᵀ Ψ_u` for every constraint field.
    pub cross: Vec<Mat<f64>>,
    pub triple: Tensor3,
    /// Nonzero entries of `triple`.
    pub triple_nz: Vec<(usize, usize, usize, f64)>,
    /// `Σ_n ψ[n]` for the velocity modes.
    pub ones: Vec<f64>,
    /// `Σ_{n≥s} ψ[n]`, `s = 1..S`.
    pub shifted_ones: Vec<Vec<f64>>,
    /// Velocity modes paired with the response of the displacement to a unit velocity.
    pub ramp: Vec<f64>,
    /// Response of the displacement recursion to a unit velocity (`N_t`).
    pub ramp_signal: Vec<f64>,
    /// `Σ_n ψ[n]` for each constraint field.
    pub constraint_ones: Vec<Vec<f64>>,
}

impl TemporalFactors {
    pub fn new(bases: &ReducedBasisSet, scheme: &BdfScheme, dt: f64) -> Self {
        let psi = bases.velocity.temporal.as_ref();
        let nt = psi.nrows();
        let prim = primitive(scheme, dt, psi);
        let ones_col = Mat::from_fn(nt, 1, |_, _| 1.0);
        let ramp_col = primitive(scheme, dt, ones_col.as_ref());
        let ramp_signal: Vec<f64> = (0..nt).map(|n| ramp_col[(n, 0)]).collect();
        let mut f = Self {
            gram: psi.transpose() * psi,
            shifted: (1..=scheme.steps()).map(|s| shifted_gram(psi, s)).collect(),
            primitive_gram: psi.transpose() * &prim,
            primitive: prim,
            cross: bases.constraints.iter().map(|b| b.temporal.transpose() * psi).collect(),
            triple_nz: Vec::new(),
            triple: triple_product(psi),
            ones: column_sums(psi, 0),
            shifted_ones: (1..=scheme.steps()).map(|s| column_sums(psi, s)).collect(),
            ramp: crate::linalg::mat_tr_vec(psi, &ramp_signal),
            ramp_signal,
            constraint_ones: bases.constraints.iter().map(|b| column_sums(b.temporal.as_ref(), 0)).collect(),
        };
        f.triple_nz = f.triple.nonzeros();
        f
    }
}
