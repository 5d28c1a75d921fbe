//! Post-hoc analysis of logged trajectories: excitation classification from
//! the eigenvalues of the extended regressor, nullspace switch detection,
//! error bookkeeping, and the contraction / monotonicity checks.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, SquareMatrix};

/// Thresholds for runtime excitation classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitationConfig {
    /// Eigenvalue floor `μ`.
    pub mu: f64,
    /// Window length `T` in seconds.
    pub window: f64,
    /// Window multiplier `k ≥ 1`; persistence is judged on `t ≥ k·T`.
    pub k: f64,
    /// Rank threshold `ε̄`.
    pub eps_bar: f64,
    /// Shortest interval that counts as finite excitation.
    pub delta_min: f64,
}

impl ExcitationConfig {
    pub fn for_step(tau_s: f64) -> Self {
        ExcitationConfig {
            mu: 1e-6,
            window: 0.5,
            k: 1.0,
            eps_bar: 1e-10,
            delta_min: 10.0 * tau_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.window > 0.0 && self.k >= 1.0 && self.delta_min > 0.0) {
            return Err(Error::config(format!("invalid excitation config {self:?}")));
        }
        Ok(())
    }
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self::for_step(1e-4)
    }
}

/// Strongest excitation property established by [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExcitationClass {
    Pe,
    Fe,
    SemiPe,
    SemiFe,
    None,
}

impl fmt::Display for ExcitationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExcitationClass::Pe => "PE",
            ExcitationClass::Fe => "FE",
            ExcitationClass::SemiPe => "s-PE",
            ExcitationClass::SemiFe => "s-FE",
            ExcitationClass::None => "none",
        })
    }
}

/// A maximal run of logged instants with a constant number `rank ≥ 1` of
/// eigenvalues above `μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualifyingInterval {
    pub start: f64,
    pub end: f64,
    pub rank: usize,
}

impl QualifyingInterval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationReport {
    pub pe: bool,
    pub fe: bool,
    /// Minimum number of eigenvalues above `μ` over `t ≥ k·T`, if at least one.
    pub semi_pe_rank: Option<usize>,
    pub semi_fe: bool,
    /// `(t, r(t))` with `r` counted against `ε̄`.
    pub rank_trace: Vec<(f64, usize)>,
    pub qualifying_intervals: Vec<QualifyingInterval>,
    /// Instants where `r(t)` changes.
    pub switch_times: Vec<f64>,
}

impl ExcitationReport {
    pub fn class(&self) -> ExcitationClass {
        if self.pe {
            ExcitationClass::Pe
        } else if self.fe {
            ExcitationClass::Fe
        } else if self.semi_pe_rank.is_some() {
            ExcitationClass::SemiPe
        } else if self.semi_fe {
            ExcitationClass::SemiFe
        } else {
            ExcitationClass::None
        }
    }

    /// First interval where all `n` eigenvalues exceed `μ`.
    pub fn first_fe_interval(&self, n: usize) -> Option<QualifyingInterval> {
        self.qualifying_intervals.iter().copied().find(|q| q.rank == n)
    }
}

/// Number of eigenvalues `≥ eps_bar`.
pub fn rank_of(lambda: &[f64], eps_bar: f64) -> usize {
    lambda.iter().filter(|&&l| l >= eps_bar).count()
}

/// Classifies excitation from the eigenvalue trajectory of the extended
/// regressor, using the eigenvalue characterisations of PE/FE/s-PE/s-FE.
pub fn classify(lambda_trace: &[(f64, Vec<f64>)], cfg: &ExcitationConfig) -> Result<ExcitationReport> {
    cfg.validate()?;
    let span = match (lambda_trace.first(), lambda_trace.last()) {
        (Some(a), Some(b)) => b.0 - a.0,
        _ => 0.0,
    };
    if span < cfg.window {
        return Err(Error::InsufficientData {
            span,
            window: cfg.window,
        });
    }
    let n = lambda_trace[0].1.len();
    let above = |l: &[f64]| l.iter().filter(|&&x| x > cfg.mu).count();

    let rank_trace: Vec<(f64, usize)> = lambda_trace
        .iter()
        .map(|(t, l)| (*t, rank_of(l, cfg.eps_bar)))
        .collect();
    let switch_times = rank_trace
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| w[1].0)
        .collect();

    // Runs of constant positive count above μ.
    let mut qualifying_intervals = Vec::new();
    let mut run: Option<QualifyingInterval> = None;
    for (t, l) in lambda_trace {
        let r = above(l);
        match run.as_mut() {
            Some(q) if q.rank == r => q.end = *t,
            _ => {
                if let Some(q) = run.take() {
                    if q.length() >= cfg.delta_min {
                        qualifying_intervals.push(q);
                    }
                }
                if r > 0 {
                    run = Some(QualifyingInterval {
                        start: *t,
                        end: *t,
                        rank: r,
                    });
                }
            }
        }
    }
    if let Some(q) = run {
        if q.length() >= cfg.delta_min {
            qualifying_intervals.push(q);
        }
    }

    let t0 = lambda_trace[0].0;
    let tail_start = t0 + cfg.k * cfg.window;
    let tail_min = lambda_trace
        .iter()
        .filter(|(t, _)| *t >= tail_start)
        .map(|(_, l)| above(l))
        .min();
    let pe = tail_min == Some(n);
    let fe = pe || qualifying_intervals.iter().any(|q| q.rank == n);
    let semi_pe_rank = tail_min.filter(|&r| r >= 1);
    let semi_fe = fe || semi_pe_rank.is_some() || !qualifying_intervals.is_empty();

    Ok(ExcitationReport {
        pe,
        fe,
        semi_pe_rank,
        semi_fe,
        rank_trace,
        qualifying_intervals,
        switch_times,
    })
}

/// Instants where the nullspace projector `V₂V₂ᵀ` jumps by more than
/// `threshold` (largest absolute entry) between consecutive samples.
pub fn nullspace_switches(projectors: &[(f64, SquareMatrix)], threshold: f64) -> Vec<f64> {
    projectors
        .windows(2)
        .filter(|w| {
            w[0].1.dim() != w[1].1.dim()
                || w[1]
                    .1
                    .sub(&w[0].1)
                    .map(|d| d.max_abs() > threshold)
                    .unwrap_or(true)
        })
        .map(|w| w[1].0)
        .collect()
}

/// Parameter and regression errors at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    /// `θ̂ − θ`
    pub tilde_theta: Vec<f64>,
    /// `θ̂ − Θ`
    pub tilde_big_theta: Vec<f64>,
    /// `φ̄ᵀθ̃`
    pub tilde_z: f64,
}

impl ErrorRecord {
    pub fn new(t: f64, phibar: &[f64], theta_hat: &[f64], theta: &[f64], d: &[f64]) -> Self {
        let tilde_theta: Vec<f64> = theta_hat.iter().zip(theta).map(|(a, b)| a - b).collect();
        let tilde_big_theta = tilde_theta.iter().zip(d).map(|(a, b)| a + b).collect();
        let tilde_z = dot(phibar, &tilde_theta);
        ErrorRecord {
            t,
            tilde_theta,
            tilde_big_theta,
            tilde_z,
        }
    }

    pub fn tilde_theta_norm(&self) -> f64 {
        norm2(&self.tilde_theta)
    }

    pub fn tilde_big_theta_norm(&self) -> f64 {
        norm2(&self.tilde_big_theta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub t_start: f64,
    pub t_end: f64,
    pub theta_max: f64,
    /// `‖θ̃(t_r⁺)‖ / θ_max`
    pub beta1: f64,
    /// `e^{−0.5γ₀δ} + 1/β₁`
    pub beta: f64,
    pub error_start: f64,
    pub error_end: f64,
    pub tilde_z_start: f64,
    pub tilde_z_end: f64,
    /// `β₁ > 1` and `β < 1`.
    pub sufficient_condition: bool,
    pub parameter_contracted: bool,
    pub regression_contracted: bool,
}

impl ContractionReport {
    pub fn holds(&self) -> bool {
        self.parameter_contracted && self.regression_contracted
    }
}

/// Evaluates the contraction goal `‖θ̃(t_e)‖ ≤ β‖θ̃(t_r⁺)‖`,
/// `|z̃(t_e)| ≤ β|z̃(t_r⁺)|` over `[t_start, t_end]`, together with the
/// sufficient condition `β₁ > 1`, `e^{−0.5γ₀δ} + 1/β₁ < 1`.
pub fn contraction_check(
    errors: &[ErrorRecord],
    t_start: f64,
    t_end: f64,
    theta_max: f64,
    gamma0: f64,
) -> Result<ContractionReport> {
    let first = errors
        .iter()
        .find(|e| e.t >= t_start)
        .ok_or_else(|| Error::config(format!("no record at or after t = {t_start}")))?;
    let last = errors
        .iter()
        .rev()
        .find(|e| e.t <= t_end)
        .ok_or_else(|| Error::config(format!("no record at or before t = {t_end}")))?;
    if last.t < first.t {
        return Err(Error::config(format!("empty interval [{t_start}, {t_end}]")));
    }
    let delta = last.t - first.t;
    let error_start = first.tilde_theta_norm();
    let error_end = last.tilde_theta_norm();
    let beta1 = error_start / theta_max;
    let beta = (-0.5 * gamma0 * delta).exp() + 1.0 / beta1;
    let contracted = |end: f64, start: f64| (start == 0.0 && end == 0.0) || end <= beta * start;
    Ok(ContractionReport {
        t_start: first.t,
        t_end: last.t,
        theta_max,
        beta1,
        beta,
        error_start,
        error_end,
        tilde_z_start: first.tilde_z,
        tilde_z_end: last.tilde_z,
        sufficient_condition: beta1 > 1.0 && beta > 0.0 && beta < 1.0,
        parameter_contracted: contracted(error_end, error_start),
        regression_contracted: contracted(last.tilde_z.abs(), first.tilde_z.abs()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub increase: f64,
}

/// Reports every consecutive pair of samples where some `|Θ̃_i|` grows by
/// more than `tol`, skipping pairs that straddle a switch time.
pub fn monotonicity_check(series: &[(f64, Vec<f64>)], switch_times: &[f64], tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for w in series.windows(2) {
        let (t0, a) = (&w[0].0, &w[0].1);
        let (t1, b) = (&w[1].0, &w[1].1);
        if switch_times.iter().any(|&s| s > *t0 && s <= *t1) {
            continue;
        }
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let increase = y.abs() - x.abs();
            if increase > tol {
                out.push(Violation {
                    index: i,
                    t: *t1,
                    increase,
                });
            }
        }
    }
    out
}

/// Largest ratio `‖Θ̃(t)‖ / (e^{−rate(t − t_s)}‖Θ̃(t_s)‖)` over each
/// inter-switch interval starting at `t_s`. Values below `floor` (the
/// numerical noise level) are inside the envelope by definition.
pub fn envelope_ratio(norms: &[(f64, f64)], switch_times: &[f64], rate: f64, floor: f64) -> f64 {
    let mut worst = 0.0_f64;
    let mut anchor: Option<(f64, f64)> = None;
    let mut prev_t = f64::NEG_INFINITY;
    for &(t, v) in norms {
        let switched = switch_times.iter().any(|&s| s > prev_t && s <= t);
        if anchor.is_none() || switched {
            anchor = Some((t, v));
        }
        prev_t = t;
        if let Some((ts, vs)) = anchor {
            if vs >= floor && v >= floor {
                worst = worst.max(v / ((-rate * (t - ts)).exp() * vs));
            }
        }
    }
    worst
}
