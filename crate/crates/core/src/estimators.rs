//! Identification laws stepped with explicit Euler:
//!
//! * gradient: `θ̂̇ = −Γφ̄(φ̄ᵀθ̂ − z)`
//! * DREM: `θ̂̇_i = −γ ω (ω θ̂_i − Y_i)` with `ω = det φ`, `Y = adj{φ}y`
//! * regularized DREM: `θ̂̇ = −γ(t) ω (ω θ̂ − Υ)` with `ω = det Φ`, `Υ = adj{Φ}y`
//!
//! The switched gain `γ(t)` is `γ₁` while `ω ≤ min{λ_minⁿ, εⁿ}` and
//! `γ₀/ω²` otherwise, so the regularized law decays toward `Θ` at rate `γ₀`
//! whenever the regressor is excited.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{dot, SquareMatrix};
use crate::regularization::RegularizedRegression;
use crate::signals::RegressorSample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Law {
    Gradient,
    Drem,
    DremRegularized,
}

impl Law {
    pub const ALL: [Law; 3] = [Law::Gradient, Law::Drem, Law::DremRegularized];

    pub fn name(self) -> &'static str {
        match self {
            Law::Gradient => "gradient",
            Law::Drem => "drem",
            Law::DremRegularized => "drem-regularized",
        }
    }

    /// Suffix used in trace column names.
    pub fn column_tag(self) -> &'static str {
        match self {
            Law::Gradient => "grad",
            Law::Drem => "drem",
            Law::DremRegularized => "dremr",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gradient" | "grad" => Ok(Law::Gradient),
            "drem" => Ok(Law::Drem),
            "drem-regularized" | "dremr" => Ok(Law::DremRegularized),
            other => Err(Error::config(format!("unknown law `{other}`"))),
        }
    }
}

/// Switched gain: `γ₁` if `ω ≤ min{λ_minⁿ, εⁿ}`, else `γ₀/ω²`.
///
/// `lambda_min` is the smallest eigenvalue above the rank threshold, or 0
/// when there is none (which selects `γ₁`).
pub fn gain_schedule(omega: f64, lambda_min: f64, n: usize, eps: f64, gamma0: f64, gamma1: f64) -> f64 {
    let exp = n as i32;
    let threshold = lambda_min.powi(exp).min(eps.powi(exp));
    if omega <= threshold {
        gamma1
    } else {
        gamma0 / (omega * omega)
    }
}

/// Gain of plain DREM.
#[derive(Clone, Debug, PartialEq)]
pub enum DremGain {
    /// Fixed `γ_i` per element.
    PerElement(Vec<f64>),
    /// Switched normalising gain, same schedule as the regularized law.
    Normalized { gamma0: f64, gamma1: f64, eps: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawConfig {
    Gradient { gain: SquareMatrix },
    Drem { gain: DremGain },
    DremRegularized { gamma0: f64, gamma1: f64 },
}

impl LawConfig {
    pub fn law(&self) -> Law {
        match self {
            LawConfig::Gradient { .. } => Law::Gradient,
            LawConfig::Drem { .. } => Law::Drem,
            LawConfig::DremRegularized { .. } => Law::DremRegularized,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    pub theta_hat: Vec<f64>,
    pub config: LawConfig,
    /// Gain applied on the most recent step (NaN before the first step and for the gradient law).
    pub last_gamma: f64,
    /// Steps where the no-overshoot guard replaced the Euler update.
    pub clamped_steps: u64,
}

impl EstimatorState {
    pub fn new(theta0: Vec<f64>, config: LawConfig) -> Result<Self> {
        let n = theta0.len();
        match &config {
            LawConfig::Gradient { gain } => {
                if gain.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: gain.dim(),
                    });
                }
                if gain.asymmetry() > 1e-12 * gain.max_abs().max(1.0) {
                    return Err(Error::config("gradient gain Γ must be symmetric"));
                }
                let eig = crate::linalg::eig_sym(gain, 0.0)?;
                if eig.values.iter().any(|&l| l <= 0.0) {
                    return Err(Error::config("gradient gain Γ must be positive definite"));
                }
            }
            LawConfig::Drem {
                gain: DremGain::PerElement(g),
            } => {
                if g.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: g.len(),
                    });
                }
                if g.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::config("DREM gains γ_i must be positive"));
                }
            }
            LawConfig::Drem {
                gain: DremGain::Normalized { gamma0, gamma1, eps },
            } => {
                check_switched(*gamma0, *gamma1)?;
                if !(*eps > 0.0) {
                    return Err(Error::config("eps must be positive"));
                }
            }
            LawConfig::DremRegularized { gamma0, gamma1 } => check_switched(*gamma0, *gamma1)?,
        }
        Ok(EstimatorState {
            theta_hat: theta0,
            config,
            last_gamma: f64::NAN,
            clamped_steps: 0,
        })
    }

    pub fn law(&self) -> Law {
        self.config.law()
    }

    fn wrong_law(&self, expected: Law) -> Error {
        Error::WrongLaw {
            expected: expected.name(),
            actual: self.law().name(),
        }
    }

    /// `θ̂ ← θ̂ − τ Γ φ̄ (φ̄ᵀθ̂ − z)`
    pub fn gradient_step(&mut self, s: &RegressorSample, tau_s: f64) -> Result<()> {
        let LawConfig::Gradient { gain } = &self.config else {
            return Err(self.wrong_law(Law::Gradient));
        };
        let tilde_z = dot(&s.phibar, &self.theta_hat) - s.z;
        let direction: Vec<f64> = s.phibar.iter().map(|p| p * tilde_z).collect();
        let update = gain.mul_vec(&direction)?;
        for (th, u) in self.theta_hat.iter_mut().zip(update) {
            *th -= tau_s * u;
        }
        Ok(())
    }

    /// Plain DREM step from the unregularized `ω = det φ`, `Y = adj{φ}y`.
    ///
    /// `lambda_min` is the smallest eigenvalue of `φ` above the rank
    /// threshold (only used by the normalised gain).
    pub fn drem_step(&mut self, omega: f64, mixed: &[f64], lambda_min: f64, tau_s: f64) -> Result<()> {
        let LawConfig::Drem { gain } = &self.config else {
            return Err(self.wrong_law(Law::Drem));
        };
        let n = self.theta_hat.len();
        match gain {
            DremGain::PerElement(gammas) => {
                for i in 0..n {
                    let g = gammas[i];
                    self.theta_hat[i] -= tau_s * g * omega * (omega * self.theta_hat[i] - mixed[i]);
                }
                self.last_gamma = f64::NAN;
            }
            &DremGain::Normalized { gamma0, gamma1, eps } => {
                let g = gain_schedule(omega, lambda_min, n, eps, gamma0, gamma1);
                mixed_update(&mut self.theta_hat, omega, mixed, g, tau_s);
                self.last_gamma = g;
            }
        }
        Ok(())
    }

    /// Regularized DREM step with the switched gain.
    ///
    /// If `τ·γ·ω² > 1` the explicit step would overshoot the equilibrium;
    /// the estimate is then set to `Υ/ω` directly.
    pub fn dremr_step(&mut self, reg: &RegularizedRegression, lambda_min: f64, tau_s: f64) -> Result<()> {
        let &LawConfig::DremRegularized { gamma0, gamma1 } = &self.config else {
            return Err(self.wrong_law(Law::DremRegularized));
        };
        let n = self.theta_hat.len();
        let omega = reg.omega;
        let g = gain_schedule(omega, lambda_min, n, reg.eps, gamma0, gamma1);
        self.last_gamma = g;
        if tau_s * g * omega * omega > 1.0 {
            warn!(
                "regularized DREM step clamped: tau*gamma*omega^2 = {}",
                tau_s * g * omega * omega
            );
            self.clamped_steps += 1;
            for (th, u) in self.theta_hat.iter_mut().zip(&reg.upsilon) {
                *th = u / omega;
            }
            return Ok(());
        }
        mixed_update(&mut self.theta_hat, omega, &reg.upsilon, g, tau_s);
        Ok(())
    }
}

fn check_switched(gamma0: f64, gamma1: f64) -> Result<()> {
    if !(gamma0 > 0.0 && gamma1 > 0.0) {
        return Err(Error::config(format!(
            "switched gains must be positive (gamma0 = {gamma0}, gamma1 = {gamma1})"
        )));
    }
    Ok(())
}

/// `θ̂_i ← θ̂_i − τ γ ω (ω θ̂_i − m_i)`; shared by both DREM variants.
fn mixed_update(theta_hat: &mut [f64], omega: f64, mixed: &[f64], gamma: f64, tau_s: f64) {
    for (th, &m) in theta_hat.iter_mut().zip(mixed) {
        *th -= tau_s * gamma * omega * (omega * *th - m);
    }
}
