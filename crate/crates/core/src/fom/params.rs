use crate::error::{Error, Result};

/// Backward differentiation scheme of order 1 or 2 written as
/// `y_{n+1} - Σ_s α_s y_{n+1-s} = β Δt f(y_{n+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    pub order: usize,
    pub beta: f64,
    pub alpha: Vec<f64>,
}

impl BdfScheme {
    pub fn new(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self {
                order,
                beta: 1.0,
                alpha: vec![1.0],
            }),
            2 => Ok(Self {
                order,
                beta: 2.0 / 3.0,
                alpha: vec![4.0 / 3.0, -1.0 / 3.0],
            }),
            s => Err(Error::UnsupportedOrder(s)),
        }
    }

    pub fn steps(&self) -> usize {
        self.order
    }
}

/// Grid of `n_steps` uniform steps of size `dt` starting after `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Infeasible(format!("time step {dt} must be positive")));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Time of step `n` (0-based), i.e. `t0 + (n + 1) dt`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + (n + 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps).map(|n| self.time(n)).collect()
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.n_steps as f64 * self.dt
    }
}

/// Physical wall parameters: thickness, density, Young modulus, Poisson ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneParams {
    pub thickness: f64,
    pub density: f64,
    pub young: f64,
    pub poisson: f64,
}

impl MembraneParams {
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 4 {
            return Err(Error::Dimension(format!("membrane parameters need 4 values, got {}", v.len())));
        }
        Ok(Self {
            thickness: v[0],
            density: v[1],
            young: v[2],
            poisson: v[3],
        })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.thickness, self.density, self.young, self.poisson]
    }

    /// Affine coefficients `[h ρ, h λ1, 2 h λ2]` of the wall mass and stiffness.
    pub fn coefficients(&self) -> Result<[f64; 3]> {
        let nu = self.poisson;
        if (1.0 - nu).abs() < 1e-12 || (1.0 + nu).abs() < 1e-12 {
            return Err(Error::DegeneratePoisson(nu));
        }
        let h = self.thickness;
        let lambda1 = self.young * nu / ((1.0 + nu) * (1.0 - nu));
        let lambda2 = self.young / (2.0 * (1.0 + nu));
        Ok([h * self.density, h * lambda1, 2.0 * h * lambda2])
    }
}

/// Full parameter point: flow-rate waveform parameters and wall parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSample {
    pub flow: Vec<f64>,
    pub membrane: MembraneParams,
}

impl ParameterSample {
    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = self.flow.clone();
        v.extend(self.membrane.to_vec());
        v
    }

    pub fn from_vec(v: &[f64], n_flow: usize) -> Result<Self> {
        if v.len() != n_flow + 4 {
            return Err(Error::Dimension(format!("parameter vector of length {}", v.len())));
        }
        Ok(Self {
            flow: v[..n_flow].to_vec(),
            membrane: MembraneParams::from_slice(&v[n_flow..])?,
        })
    }
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::Infeasible("parameter box bounds".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Maps into the unit cube; flat directions map to 0.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| if u > l { (v - l) / (u - l) } else { 0.0 })
            .collect()
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
            .collect()
    }

    pub fn concat(&self, other: &ParamBox) -> ParamBox {
        let mut lower = self.lower.clone();
        lower.extend(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend(&other.upper);
        ParamBox { lower, upper }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bdf_coefficients() {
        let b1 = BdfScheme::new(1).unwrap();
        assert_eq!((b1.beta, b1.alpha.clone()), (1.0, vec![1.0]));
        let b2 = BdfScheme::new(2).unwrap();
        assert_eq!(b2.beta, 2.0 / 3.0);
        assert_eq!(b2.alpha, vec![4.0 / 3.0, -1.0 / 3.0]);
        // Consistency: Σα = 1 so constants are steady states.
        assert!((b2.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(BdfScheme::new(3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn membrane_coefficients_worked_example() {
        let p = MembraneParams {
            thickness: 0.1,
            density: 1.2,
            young: 4e6,
            poisson: 0.5,
        };
        let c = p.coefficients().unwrap();
        assert!((c[0] - 0.12).abs() < 1e-15);
        let l1 = 4e6 * 0.5 / (1.5 * 0.5);
        let l2 = 4e6 / 3.0;
        assert!((c[1] - 0.1 * l1).abs() < 1e-6);
        assert!((c[2] - 0.2 * l2).abs() < 1e-6);
    }

    #[test]
    fn degenerate_poisson_is_rejected() {
        let p = MembraneParams {
            thickness: 0.1,
            density: 1.0,
            young: 1e6,
            poisson: 1.0,
        };
        assert!(matches!(p.coefficients(), Err(Error::DegeneratePoisson(_))));
    }

    #[test]
    fn box_normalization() {
        let b = ParamBox::new(vec![4.0, 0.1, 1.0], vec![8.0, 0.3, 1.0]).unwrap();
        assert_eq!(b.normalize(&[6.0, 0.1, 1.0]), vec![0.5, 0.0, 0.0]);
        assert!(b.contains(&[4.0, 0.3, 1.0]));
        assert!(!b.contains(&[3.9, 0.3, 1.0]));
    }
}
