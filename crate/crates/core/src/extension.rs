//! Kreisselmeier extension filter
//!
//! ```text
//! φ̇ = −lφ + φ̄φ̄ᵀ,   ẏ = −ly + φ̄z,   φ(0) = 0, y(0) = 0
//! ```
//!
//! integrated with explicit Euler. The filter turns the scalar regression
//! `z = φ̄ᵀθ` into the square one `y = φθ`.

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, SquareMatrix};
use crate::signals::RegressorSample;

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionState {
    pub phi: SquareMatrix,
    pub y: Vec<f64>,
    pub l: f64,
    pub t: f64,
    steps: u64,
}

impl ExtensionState {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::config(format!("filter gain l must be positive, got {l}")));
        }
        if n == 0 {
            return Err(Error::config("dimension must be positive"));
        }
        Ok(ExtensionState {
            phi: SquareMatrix::zeros(n),
            y: vec![0.0; n],
            l,
            t: 0.0,
            steps: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// Advances the filter by one Euler step of length `tau_s`, using the
    /// sample taken at the left end of the step.
    pub fn step(&mut self, s: &RegressorSample, tau_s: f64) -> Result<()> {
        let decay = 1.0 - self.l * tau_s;
        if !(decay > 0.0) || !(tau_s > 0.0) {
            return Err(Error::StabilityViolation {
                product: self.l * tau_s,
            });
        }
        let n = self.dim();
        if s.phibar.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.phibar.len(),
            });
        }
        if (s.t - self.t).abs() > 1e-9 * self.t.abs().max(1.0) {
            return Err(Error::TimeMismatch {
                sample: s.t,
                state: self.t,
            });
        }
        for i in 0..n {
            for j in 0..n {
                self.phi[(i, j)] = decay * self.phi[(i, j)] + tau_s * (s.phibar[i] * s.phibar[j]);
            }
            self.y[i] = decay * self.y[i] + tau_s * (s.phibar[i] * s.z);
        }
        self.phi.symmetrize();
        self.steps += 1;
        // Time is recomputed from the step count so that long runs do not drift.
        self.t = self.steps as f64 * tau_s;
        Ok(())
    }

    /// `‖y − φθ‖∞`; zero in exact arithmetic for a noise-free regression.
    pub fn consistency_residual(&self, theta_true: &[f64]) -> Result<f64> {
        let phi_theta = self.phi.mul_vec(theta_true)?;
        let diff: Vec<f64> = self.y.iter().zip(&phi_theta).map(|(a, b)| a - b).collect();
        Ok(norm_inf(&diff))
    }
}
