//! Initial guesses for the space-time Newton iteration interpolated from
//! the reduced coordinates of training solutions. Parameter distances are
//! measured after mapping the parameter box to the unit cube.

use crate::error::{Error, Result};
use crate::fom::{ParamBox, ParameterSample};
use crate::linalg::DenseLu;
use faer::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStartStrategy {
    Zero,
    Average,
    /// Weighted combination of the `K` nearest training solutions.
    Knn(usize),
    /// Thin-plate spline interpolation of every coordinate, with an affine
    /// tail.
    Podi,
}

impl WarmStartStrategy {
    pub fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Average => "average".into(),
            Self::Knn(k) => format!("knn{k}"),
            Self::Podi => "podi".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NniWeighting {
    /// Weights proportional to the distance, `d_k / Σ d_j`.
    #[default]
    Proportional,
    /// Inverse-distance weights.
    Inverse,
}

/// `ζ(r) = r² ln r`, continuous at zero.
pub fn thin_plate(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

const COINCIDENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartStore {
    pub strategy: WarmStartStrategy,
    pub weighting: NniWeighting,
    pub domain: ParamBox,
    pub dim: usize,
    /// Normalized training parameters.
    pub points: Vec<Vec<f64>>,
    pub coords: Vec<Vec<f64>>,
    /// Deduplicated interpolation nodes and spline coefficients: one row per
    /// node, then the polynomial tail rows.
    pub podi_nodes: Vec<Vec<f64>>,
    pub podi_weights: Option<Mat<f64>>,
}

impl WarmStartStore {
    pub fn new(
        domain: ParamBox,
        params: &[ParameterSample],
        coords: Vec<Vec<f64>>,
        dim: usize,
        strategy: WarmStartStrategy,
        weighting: NniWeighting,
    ) -> Result<Self> {
        if params.len() != coords.len() {
            return Err(Error::Dimension(format!("{} parameters for {} coordinate vectors", params.len(), coords.len())));
        }
        if coords.iter().any(|c| c.len() != dim) {
            return Err(Error::Dimension(format!("training coordinates must have length {dim}")));
        }
        if strategy != WarmStartStrategy::Zero && coords.is_empty() {
            return Err(Error::EmptyStore);
        }
        if let WarmStartStrategy::Knn(0) = strategy {
            return Err(Error::Infeasible("nearest-neighbour count must be positive".into()));
        }
        let points: Vec<Vec<f64>> = params
            .iter()
            .map(|p| {
                let v = p.as_vec();
                if v.len() != domain.dim() {
                    return Err(Error::Dimension(format!("parameter of length {} for a {}-dim box", v.len(), domain.dim())));
                }
                Ok(domain.normalize(&v))
            })
            .collect::<Result<_>>()?;
        let mut store = Self {
            strategy,
            weighting,
            domain,
            dim,
            points,
            coords,
            podi_nodes: Vec::new(),
            podi_weights: None,
        };
        if strategy == WarmStartStrategy::Podi {
            store.fit_podi()?;
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn fit_podi(&mut self) -> Result<()> {
        // Merge coincident parameters, averaging their coordinates.
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut values: Vec<(Vec<f64>, usize)> = Vec::new();
        for (p, c) in self.points.iter().zip(&self.coords) {
            match nodes.iter().position(|q| distance(p, q) < COINCIDENT) {
                Some(k) => {
                    crate::linalg::axpy(1.0, c, &mut values[k].0);
                    values[k].1 += 1;
                }
                None => {
                    nodes.push(p.clone());
                    values.push((c.clone(), 1));
                }
            }
        }
        let m = nodes.len();
        let q = self.tail_len(m);
        // Kernel block bordered by the polynomial tail and its side conditions.
        let tail = |x: &[f64], j: usize| if j == 0 { 1.0 } else { x[j - 1] };
        let n = m + q;
        let z = Mat::from_fn(n, n, |i, j| match (i < m, j < m) {
            (true, true) => thin_plate(distance(&nodes[i], &nodes[j])),
            (true, false) => tail(&nodes[i], j - m),
            (false, true) => tail(&nodes[j], i - m),
            (false, false) => 0.0,
        });
        let rhs = Mat::from_fn(n, self.dim, |i, j| if i < m { values[i].0[j] / values[i].1 as f64 } else { 0.0 });
        let lu = match DenseLu::new(z.as_ref()) {
            Ok(lu) => lu,
            Err(_) => {
                let scale = crate::linalg::max_abs(z.as_ref()).max(1.0);
                log::warn!("thin-plate kernel matrix singular; adding diagonal jitter");
                let jittered = Mat::from_fn(n, n, |i, j| z[(i, j)] + if i == j && i < m { 1e-12 * scale } else { 0.0 });
                DenseLu::new(jittered.as_ref())?
            }
        };
        self.podi_weights = Some(lu.solve_mat(rhs.as_ref()));
        self.podi_nodes = nodes;
        Ok(())
    }

    /// Polynomial tail size: affine when the nodes can determine it, else
    /// a constant.
    fn tail_len(&self, nodes: usize) -> usize {
        let d = self.domain.dim();
        if nodes >= d + 1 {
            d + 1
        } else {
            1
        }
    }

    /// Initial guess for `param`.
    pub fn predict(&self, param: &ParameterSample) -> Result<Vec<f64>> {
        if self.strategy == WarmStartStrategy::Zero {
            return Ok(vec![0.0; self.dim]);
        }
        if self.is_empty() {
            return Err(Error::EmptyStore);
        }
        let x = self.domain.normalize(&param.as_vec());
        let mut out = vec![0.0; self.dim];
        match self.strategy {
            WarmStartStrategy::Zero => {}
            WarmStartStrategy::Average => {
                let w = 1.0 / self.len() as f64;
                for c in &self.coords {
                    crate::linalg::axpy(w, c, &mut out);
                }
            }
            WarmStartStrategy::Knn(k) => {
                let mut order: Vec<(f64, usize)> = self.points.iter().enumerate().map(|(i, p)| (distance(&x, p), i)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                order.truncate(k.min(order.len()));
                for (w, i) in self.knn_weights(&order) {
                    crate::linalg::axpy(w, &self.coords[i], &mut out);
                }
            }
            WarmStartStrategy::Podi => {
                let theta = self.podi_weights.as_ref().ok_or_else(|| Error::Missing("interpolation weights".into()))?;
                let m = self.podi_nodes.len();
                for (k, node) in self.podi_nodes.iter().enumerate() {
                    let z = thin_plate(distance(&x, node));
                    if z != 0.0 {
                        for (j, o) in out.iter_mut().enumerate() {
                            *o += z * theta[(k, j)];
                        }
                    }
                }
                for t in 0..self.tail_len(m) {
                    let v = if t == 0 { 1.0 } else { x[t - 1] };
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += v * theta[(m + t, j)];
                    }
                }
            }
        }
        Ok(out)
    }

    fn knn_weights(&self, nearest: &[(f64, usize)]) -> Vec<(f64, usize)> {
        let k = nearest.len() as f64;
        let exact: Vec<usize> = nearest.iter().filter(|(d, _)| *d < COINCIDENT).map(|e| e.1).collect();
        match self.weighting {
            NniWeighting::Proportional => {
                let total: f64 = nearest.iter().map(|e| e.0).sum();
                if total < COINCIDENT {
                    nearest.iter().map(|&(_, i)| (1.0 / k, i)).collect()
                } else {
                    nearest.iter().map(|&(d, i)| (d / total, i)).collect()
                }
            }
            NniWeighting::Inverse if !exact.is_empty() => {
                exact.iter().map(|&i| (1.0 / exact.len() as f64, i)).collect()
            }
            NniWeighting::Inverse => {
                let total: f64 = nearest.iter().map(|e| 1.0 / e.0).sum();
                nearest.iter().map(|&(d, i)| (1.0 / d / total, i)).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::MembraneParams;

    fn sample(a: f64, b: f64) -> ParameterSample {
        ParameterSample {
            flow: vec![a, b],
            membrane: MembraneParams::from_slice(&[0.1, 1.0, 1e6, 0.3]).unwrap(),
        }
    }

    fn domain() -> ParamBox {
        ParamBox::new(vec![0.0, 0.0, 0.05, 0.5, 1e5, 0.1], vec![1.0, 1.0, 0.2, 1.5, 1e7, 0.49]).unwrap()
    }

    fn store(strategy: WarmStartStrategy, weighting: NniWeighting) -> WarmStartStore {
        let params = vec![sample(0.1, 0.2), sample(0.8, 0.3), sample(0.4, 0.9), sample(0.6, 0.6)];
        let coords = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 1.0], vec![3.0, 3.0]];
        WarmStartStore::new(domain(), &params, coords, 2, strategy, weighting).unwrap()
    }

    #[test]
    fn thin_plate_at_zero_is_zero() {
        assert_eq!(thin_plate(0.0), 0.0);
        assert_eq!(thin_plate(1.0), 0.0);
        assert!(thin_plate(0.5) < 0.0);
    }

    #[test]
    fn single_neighbour_returns_nearest_for_both_weightings() {
        for w in [NniWeighting::Proportional, NniWeighting::Inverse] {
            let s = store(WarmStartStrategy::Knn(1), w);
            assert_eq!(s.predict(&sample(0.75, 0.35)).unwrap(), vec![0.0, 2.0]);
        }
    }

    #[test]
    fn opposite_coordinates_average_to_zero() {
        let params = vec![sample(0.1, 0.2), sample(0.8, 0.3)];
        let s = WarmStartStore::new(domain(), &params, vec![vec![1.5, -2.0], vec![-1.5, 2.0]], 2, WarmStartStrategy::Average, NniWeighting::Proportional).unwrap();
        assert_eq!(s.predict(&sample(0.5, 0.5)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn podi_interpolates_training_points() {
        let s = store(WarmStartStrategy::Podi, NniWeighting::Proportional);
        for (p, c) in [(sample(0.1, 0.2), [1.0, 0.0]), (sample(0.4, 0.9), [-1.0, 1.0])] {
            let y = s.predict(&p).unwrap();
            assert!((y[0] - c[0]).abs() < 1e-9 && (y[1] - c[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn podi_with_one_node_is_constant() {
        let params = vec![sample(0.3, 0.3), sample(0.3, 0.3)];
        let s = WarmStartStore::new(domain(), &params, vec![vec![1.0, 2.0], vec![3.0, 4.0]], 2, WarmStartStrategy::Podi, NniWeighting::Proportional).unwrap();
        assert_eq!(s.predict(&sample(0.3, 0.3)).unwrap(), vec![2.0, 3.0]);
        assert_eq!(s.predict(&sample(0.9, 0.1)).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn empty_store_is_rejected_except_for_zero() {
        let e = WarmStartStore::new(domain(), &[], vec![], 3, WarmStartStrategy::Average, NniWeighting::Proportional);
        assert!(matches!(e, Err(Error::EmptyStore)));
        let z = WarmStartStore::new(domain(), &[], vec![], 3, WarmStartStrategy::Zero, NniWeighting::Proportional).unwrap();
        assert_eq!(z.predict(&sample(0.5, 0.5)).unwrap(), vec![0.0; 3]);
    }
}
