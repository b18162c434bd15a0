//! Sparse storage, dense helpers and factorization wrappers on top of faer.

use crate::error::{Error, Result};
use faer::linalg::solvers::PartialPivLu;
use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef, Side};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Result<Self> {
        let mut order: Vec<usize> = (0..trips.len()).collect();
        for &(i, j, v) in trips {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::format("sparse matrix", format!("non-finite entry at ({i}, {j})")));
            }
        }
        order.sort_by_key(|&k| (trips[k].0, trips[k].1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = trips[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(a: MatRef<'_, f64>) -> Self {
        let mut trips = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    trips.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &trips).expect("dense entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec length");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "tr_mul_vec length");
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.ncols, "mul_dense shape");
        let mut y = Mat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                y[(i, c)] = self.row(i).map(|(j, v)| v * x[(j, c)]).sum();
            }
        }
        y
    }

    pub fn tr_mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.nrows, "tr_mul_dense shape");
        let mut y = Mat::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                if xi != 0.0 {
                    for (j, v) in self.row(i) {
                        y[(j, c)] += v * xi;
                    }
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trips).expect("transpose stays in range")
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] += v;
            }
        }
        a
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("add_scaled shapes differ".into()));
        }
        let mut trips = self.triplets();
        trips.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, &trips)
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .expect("csr entries are valid")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn col_vec(a: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn vec_to_col(x: &[f64]) -> Mat<f64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len(), "mat_vec shape");
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += a[(i, j)] * xj;
            }
        }
    }
    y
}

pub fn mat_tr_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len(), "mat_tr_vec shape");
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)] * x[i]).sum())
        .collect()
}

pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

pub fn max_abs_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// `aᵀ X b` with `X = I` when `x` is `None`.
pub fn weighted_gram(a: MatRef<'_, f64>, b: MatRef<'_, f64>, x: Option<&CsrMatrix>) -> Mat<f64> {
    match x {
        Some(x) => a.transpose() * x.mul_dense(b),
        None => a.transpose() * b,
    }
}

/// Dense LU with partial pivoting that refuses singular or non-finite systems.
pub struct DenseLu {
    lu: PartialPivLu<f64>,
    n: usize,
    pivot_ratio: f64,
}

impl DenseLu {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("LU of {}x{} matrix", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if n > 0 && (!(lo > 0.0) || !hi.is_finite() || lo <= hi * 1e-15) {
            return Err(Error::Singular(format!(
                "LU pivot ratio {:.3e} in {n}x{n} system",
                if hi > 0.0 { lo / hi } else { 0.0 }
            )));
        }
        let pivot_ratio = if n == 0 { 1.0 } else { hi / lo };
        if pivot_ratio > 1e12 {
            log::warn!("ill-conditioned {n}x{n} system, pivot ratio {pivot_ratio:.3e}");
        }
        Ok(Self { lu, n, pivot_ratio })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of largest to smallest pivot, a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Dimension(format!("rhs {} for {}-dim LU", b.len(), self.n)));
        }
        let x = self.lu.solve(&vec_to_col(b));
        let out = col_vec(x.as_ref(), 0);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite LU solution".into()));
        }
        Ok(out)
    }

    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.lu.solve(b)
    }
}

/// Sparse LU of a square matrix.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::Dimension("sparse_solve shapes".into()));
    }
    let lu = a
        .to_faer()
        .sp_lu()
        .map_err(|e| Error::Singular(format!("sparse LU: {e:?}")))?;
    let x = lu.solve(&vec_to_col(b));
    let out = col_vec(x.as_ref(), 0);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite sparse LU solution".into()));
    }
    Ok(out)
}

/// Dense Cholesky of an SPD matrix, `A = L Lᵀ`.
pub struct Cholesky {
    l: Mat<f64>,
    llt: faer::linalg::solvers::Llt<f64>,
}

impl Cholesky {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        let llt = a
            .llt(Side::Lower)
            .map_err(|e| Error::NotSpd(format!("Cholesky failed: {e:?}")))?;
        let l = llt.L().to_owned();
        Ok(Self { l, llt })
    }

    pub fn l(&self) -> MatRef<'_, f64> {
        self.l.as_ref()
    }

    pub fn solve(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.llt.solve(b)
    }
}

/// Left singular vectors and singular values (descending) of `a`.
pub fn left_svd(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>)> {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return Ok((Mat::zeros(a.nrows(), 0), Vec::new()));
    }
    if a.nrows() <= a.ncols() {
        // Wide: the left factor comes from the transposed thin SVD.
        let at = a.transpose().to_owned();
        let svd = at.thin_svd().map_err(|e| Error::Singular(format!("SVD: {e:?}")))?;
        let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
        Ok((svd.V().to_owned(), s))
    } else {
        let svd = a.thin_svd().map_err(|e| Error::Singular(format!("SVD: {e:?}")))?;
        let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
        Ok((svd.U().to_owned(), s))
    }
}

/// Appends `candidates` to the `x`-orthonormal columns of `basis` by twice
/// repeated modified Gram-Schmidt. Candidates whose normalized remainder drops
/// below `drop_tol` are skipped. Returns the new basis and the appended count.
pub fn orthonormal_extend(
    basis: MatRef<'_, f64>,
    candidates: MatRef<'_, f64>,
    x: Option<&CsrMatrix>,
    drop_tol: f64,
) -> (Mat<f64>, usize) {
    let n = basis.nrows();
    let mut cols: Vec<Vec<f64>> = (0..basis.ncols()).map(|j| col_vec(basis, j)).collect();
    let mut xcols: Vec<Vec<f64>> = cols.iter().map(|c| apply_weight(x, c)).collect();
    let base = cols.len();
    for c in 0..candidates.ncols() {
        let mut v = col_vec(candidates, c);
        let nv = dot(&v, &apply_weight(x, &v)).max(0.0).sqrt();
        if nv == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|e| *e /= nv);
        for _ in 0..2 {
            for (q, xq) in cols.iter().zip(&xcols) {
                let h = dot(xq, &v);
                axpy(-h, q, &mut v);
            }
        }
        let xv = apply_weight(x, &v);
        let r = dot(&v, &xv).max(0.0).sqrt();
        if r < drop_tol {
            continue;
        }
        v.iter_mut().for_each(|e| *e /= r);
        let xv: Vec<f64> = xv.iter().map(|e| e / r).collect();
        cols.push(v);
        xcols.push(xv);
    }
    let out = Mat::from_fn(n, cols.len(), |i, j| cols[j][i]);
    (out, cols.len() - base)
}

fn apply_weight(x: Option<&CsrMatrix>, v: &[f64]) -> Vec<f64> {
    match x {
        Some(x) => x.mul_vec(v),
        None => v.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.triplets(), vec![(0, 1, 2.0), (1, 0, -1.0), (1, 2, 1.5)]);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 2.0]), vec![2.0, 2.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 2.0]), vec![-2.0, 2.0, 3.0]);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn lu_detects_singular() {
        let a = Mat::from_fn(2, 2, |i, _| i as f64 + 1.0);
        assert!(matches!(DenseLu::new(a.as_ref()), Err(Error::Singular(_))));
        let b = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let x = DenseLu::new(b.as_ref()).unwrap().solve_vec(&[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_extension_is_orthonormal() {
        let x = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0), (0, 1, 0.5), (1, 0, 0.5)]).unwrap();
        let cand = Mat::from_fn(3, 4, |i, j| ((i * i * 3 + j * j * 2 + i * j) % 7) as f64 + 0.5);
        let (q, added) = orthonormal_extend(Mat::<f64>::zeros(3, 0).as_ref(), cand.as_ref(), Some(&x), 1e-10);
        assert_eq!(added, 3);
        let g = weighted_gram(q.as_ref(), q.as_ref(), Some(&x));
        assert!(max_abs_diff(g.as_ref(), Mat::<f64>::identity(3, 3).as_ref()) < 1e-13);
    }

    #[test]
    fn left_svd_handles_wide_and_tall() {
        let a = Mat::from_fn(3, 7, |i, j| ((i * 7 + j) as f64).sin());
        let (u, s) = left_svd(a.as_ref()).unwrap();
        let (ut, st) = left_svd(a.transpose()).unwrap();
        assert_eq!(u.ncols(), 3);
        assert_eq!(ut.nrows(), 7);
        for (x, y) in s.iter().zip(&st) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }
}
