//! Eigenvalue substitution and mixing.
//!
//! Eigenvalues of the extended regressor `φ = V Λ Vᵀ` that fall below `ε̄`
//! are replaced by `ε`, giving a full-rank `Φ = V Λ̄ Vᵀ`. Multiplying the
//! extended regression by `adj Φ` yields `n` scalar regressions
//! `Υ_i = ω Θ_i` with the common regressor `ω = det Φ`, where
//! `Θ = θ − V₂V₂ᵀθ` and `V₂` spans the eigenvectors that were substituted.

use crate::error::{Error, Result};
use crate::linalg::{adjugate_spectral, recompose, EigenDecomposition, SquareMatrix};

/// Default tolerance for treating a row of `V₂` as zero.
pub const ROW_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    /// Value substituted for eigenvalues below `eps_bar`.
    pub eps: f64,
    /// Absolute threshold separating retained eigenvalues from zeros.
    pub eps_bar: f64,
}

impl RegularizationParams {
    pub fn new(eps: f64, eps_bar: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config(format!("eps must be positive, got {eps}")));
        }
        if !(eps_bar >= 0.0 && eps_bar.is_finite()) {
            return Err(Error::config(format!(
                "eps_bar must be non-negative, got {eps_bar}"
            )));
        }
        Ok(RegularizationParams { eps, eps_bar })
    }
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams {
            eps: 0.4,
            eps_bar: 1e-10,
        }
    }
}

/// `Λ̄` and `Ξ = Λ̄ − Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutedSpectrum {
    pub lambda_bar: Vec<f64>,
    pub xi: Vec<f64>,
    /// True when every eigenvalue was below `eps_bar`; `Λ̄` is then zero.
    pub degenerate: bool,
}

/// Applies the substitution rule `λ̄_i = λ_i if λ_i ≥ ε̄ else ε`.
///
/// When every eigenvalue is substituted the result is the zero spectrum
/// instead of `εI`. A genuine eigenvalue that happens to equal `ε` does not
/// count as substituted.
pub fn regularize(eig: &EigenDecomposition, eps: f64, eps_bar: f64) -> Result<SubstitutedSpectrum> {
    if !(eps > 0.0) {
        return Err(Error::config(format!("eps must be positive, got {eps}")));
    }
    let retained = eig.values.iter().filter(|&&l| l >= eps_bar).count();
    let degenerate = retained == 0;
    let lambda_bar: Vec<f64> = if degenerate {
        vec![0.0; eig.dim()]
    } else {
        eig.values
            .iter()
            .map(|&l| if l >= eps_bar { l } else { eps })
            .collect()
    };
    let xi = lambda_bar.iter().zip(&eig.values).map(|(b, l)| b - l).collect();
    Ok(SubstitutedSpectrum {
        lambda_bar,
        xi,
        degenerate,
    })
}

/// Mixed regression `Υ = adj{Φ}·y = ω Θ` built from the regularized regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedRegression {
    pub lambda_bar: Vec<f64>,
    pub xi: Vec<f64>,
    pub phi_reg: SquareMatrix,
    pub adj_phi_reg: SquareMatrix,
    pub omega: f64,
    pub upsilon: Vec<f64>,
    /// Eigenvectors whose eigenvalues are below `eps_bar`.
    pub nullspace: Vec<Vec<f64>>,
    pub eps: f64,
    pub eps_bar: f64,
}

impl RegularizedRegression {
    /// `‖adj(Φ)·Φ − ωI‖∞` (largest absolute entry).
    pub fn adjugate_residual(&self) -> f64 {
        let n = self.phi_reg.dim();
        let prod = self.adj_phi_reg.matmul(&self.phi_reg).expect("same dimension");
        prod.sub(&SquareMatrix::identity(n).scaled(self.omega))
            .expect("same dimension")
            .max_abs()
    }

    pub fn substituted(&self) -> bool {
        self.xi.iter().any(|&x| x != 0.0)
    }
}

/// Forms `Φ`, `ω = ∏ λ̄_i` and `Υ = adj{Φ}·y`, with `adj{Φ}` computed from
/// the eigenstructure.
pub fn mix(
    eig: &EigenDecomposition,
    spectrum: &SubstitutedSpectrum,
    y: &[f64],
    params: RegularizationParams,
) -> Result<RegularizedRegression> {
    let n = eig.dim();
    for len in [spectrum.lambda_bar.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let phi_reg = recompose(&eig.vectors, &spectrum.lambda_bar)?;
    let (omega, adj_phi_reg, upsilon) = if spectrum.degenerate {
        let adj = if n == 1 {
            SquareMatrix::identity(1)
        } else {
            SquareMatrix::zeros(n)
        };
        (0.0, adj, vec![0.0; n])
    } else {
        let adj = adjugate_spectral(&eig.vectors, &spectrum.lambda_bar)?;
        let upsilon = adj.mul_vec(y)?;
        (spectrum.lambda_bar.iter().product(), adj, upsilon)
    };
    let nullspace = eig
        .values
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l < params.eps_bar)
        .map(|(j, _)| eig.vectors.column(j))
        .collect();
    Ok(RegularizedRegression {
        lambda_bar: spectrum.lambda_bar.clone(),
        xi: spectrum.xi.clone(),
        phi_reg,
        adj_phi_reg,
        omega,
        upsilon,
        nullspace,
        eps: params.eps,
        eps_bar: params.eps_bar,
    })
}

/// Ground-truth split `θ = Θ + d` with `d = V₂V₂ᵀθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleDecomposition {
    pub d: Vec<f64>,
    pub theta_new: Vec<f64>,
    /// Indices (0-based) of the zero rows of `V₂`; for these `Θ_i = θ_i`.
    pub identifiable: Vec<usize>,
}

impl OracleDecomposition {
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.identifiable {
            m[i] = true;
        }
        m
    }
}

/// Splits `theta_true` into the identifiable part `Θ` and the disturbance `d`.
pub fn oracle_decompose(nullspace: &[Vec<f64>], theta_true: &[f64], row_tol: f64) -> OracleDecomposition {
    let n = theta_true.len();
    let mut d = vec![0.0; n];
    for v in nullspace {
        let c: f64 = v.iter().zip(theta_true).map(|(a, b)| a * b).sum();
        for (di, vi) in d.iter_mut().zip(v) {
            *di += vi * c;
        }
    }
    let theta_new = theta_true.iter().zip(&d).map(|(t, d)| t - d).collect();
    let identifiable = (0..n)
        .filter(|&i| nullspace.iter().all(|v| v[i].abs() <= row_tol))
        .collect();
    OracleDecomposition {
        d,
        theta_new,
        identifiable,
    }
}
