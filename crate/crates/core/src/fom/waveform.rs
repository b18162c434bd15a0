use std::f64::consts::PI;

/// Temporal profile `g_k(t; μ)` of the flow rate imposed on Dirichlet boundary `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    /// `g(t) = 1 - cos(2πt/T) + μ₂ sin(2π μ₁ t/T)` on the first boundary,
    /// scaled by `μ₃` on the others.
    Periodic { period: f64 },
    /// `g(t) = exp(-rate t)` on every boundary.
    Decay { rate: f64 },
    Zero,
}

impl Waveform {
    pub fn eval(&self, t: f64, flow: &[f64], boundary: usize) -> f64 {
        match *self {
            Waveform::Periodic { period } => {
                let f = flow.first().copied().unwrap_or(1.0);
                let amp = flow.get(1).copied().unwrap_or(0.0);
                let base = 1.0 - (2.0 * PI * t / period).cos() + amp * (2.0 * PI * f * t / period).sin();
                if boundary == 0 {
                    base
                } else {
                    flow.get(2).copied().unwrap_or(1.0) * base
                }
            }
            Waveform::Decay { rate } => (-rate * t).exp(),
            Waveform::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_profile_values() {
        let w = Waveform::Periodic { period: 1.0 };
        let mu = [4.0, 0.2, 0.5];
        assert!(w.eval(0.0, &mu, 0).abs() < 1e-15);
        // Half period: 1 - cos(π) + 0.2 sin(4π) = 2.
        assert!((w.eval(0.5, &mu, 0) - 2.0).abs() < 1e-12);
        assert!((w.eval(0.5, &mu, 1) - 1.0).abs() < 1e-12);
        let t = 0.3;
        let expect = 1.0 - (2.0 * PI * t).cos() + 0.2 * (8.0 * PI * t).sin();
        assert!((w.eval(t, &mu, 0) - expect).abs() < 1e-15);
    }
}
