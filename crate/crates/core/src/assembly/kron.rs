use faer::{Mat, MatMut};

/// Sum of Kronecker products `Σ_k S_k ⊗ T_k` acting on space-time vectors
/// indexed `ℓ_s n_t + ℓ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronOp {
    rows: (usize, usize),
    cols: (usize, usize),
    terms: Vec<(Mat<f64>, Mat<f64>)>,
}

impl KronOp {
    /// Empty operator from `(n_s, n_t)` inputs to `(m_s, m_t)` outputs.
    pub fn new(rows: (usize, usize), cols: (usize, usize)) -> Self {
        Self {
            rows,
            cols,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, spatial: Mat<f64>, temporal: Mat<f64>) {
        assert_eq!((spatial.nrows(), temporal.nrows()), self.rows, "Kronecker term rows");
        assert_eq!((spatial.ncols(), temporal.ncols()), self.cols, "Kronecker term cols");
        self.terms.push((spatial, temporal));
    }

    pub fn with(mut self, spatial: Mat<f64>, temporal: Mat<f64>) -> Self {
        self.push(spatial, temporal);
        self
    }

    pub fn nrows(&self) -> usize {
        self.rows.0 * self.rows.1
    }

    pub fn ncols(&self) -> usize {
        self.cols.0 * self.cols.1
    }

    pub fn terms(&self) -> &[(Mat<f64>, Mat<f64>)] {
        &self.terms
    }

    /// `out[r0.., c0..] += scale · self`, skipping structural zeros of the factors.
    pub fn add_to(&self, mut out: MatMut<'_, f64>, r0: usize, c0: usize, scale: f64) {
        let (ms, mt) = self.rows;
        let (ns, nt) = self.cols;
        for (s, t) in &self.terms {
            let tnz: Vec<(usize, usize, f64)> = (0..nt)
                .flat_map(|b| (0..mt).map(move |a| (a, b)))
                .filter_map(|(a, b)| {
                    let v = t[(a, b)];
                    (v != 0.0).then_some((a, b, v))
                })
                .collect();
            for j in 0..ns {
                for i in 0..ms {
                    let sv = scale * s[(i, j)];
                    if sv == 0.0 {
                        continue;
                    }
                    for &(a, b, tv) in &tnz {
                        out[(r0 + i * mt + a, c0 + j * nt + b)] += sv * tv;
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut out = Mat::zeros(self.nrows(), self.ncols());
        self.add_to(out.as_mut(), 0, 0, 1.0);
        out
    }

    /// `y += scale · self · x` without forming the product.
    pub fn apply_add(&self, x: &[f64], y: &mut [f64], scale: f64) {
        let (ms, mt) = self.rows;
        let (ns, nt) = self.cols;
        assert_eq!(x.len(), ns * nt);
        assert_eq!(y.len(), ms * mt);
        let xm = Mat::from_fn(ns, nt, |i, j| x[i * nt + j]);
        for (s, t) in &self.terms {
            let ym = s * &xm * t.transpose();
            for i in 0..ms {
                for a in 0..mt {
                    y[i * mt + a] += scale * ym[(i, a)];
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.apply_add(x, &mut y, 1.0);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_vec, max_abs_diff};

    #[test]
    fn dense_and_matrix_free_agree() {
        let s1 = Mat::from_fn(2, 3, |i, j| (i + 2 * j) as f64 - 1.5);
        let t1 = Mat::from_fn(4, 2, |i, j| ((i * 3 + j) as f64).cos());
        let s2 = Mat::from_fn(2, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let t2 = Mat::from_fn(4, 2, |i, j| (i as f64) - (j as f64));
        let k = KronOp::new((2, 4), (3, 2)).with(s1.clone(), t1.clone()).with(s2, t2);
        let d = k.to_dense();
        // Entry check against the Kronecker definition.
        assert_eq!(d[(1 * 4 + 3, 2 * 2 + 1)], s1[(1, 2)] * t1[(3, 1)] + 0.0);
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let y1 = mat_vec(d.as_ref(), &x);
        let y2 = k.apply(&x);
        let diff = max_abs_diff(Mat::from_fn(8, 1, |i, _| y1[i]).as_ref(), Mat::from_fn(8, 1, |i, _| y2[i]).as_ref());
        assert!(diff < 1e-14);
    }
}
