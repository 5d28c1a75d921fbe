//! Simulation driver: scenario → extension filter → regularization →
//! estimators, with per-step diagnostics logged into a [`TraceLog`].

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::{
    classify, contraction_check, monotonicity_check, nullspace_switches, ContractionReport, ErrorRecord,
    ExcitationConfig, ExcitationReport,
};
use crate::error::{Error, Result};
use crate::estimators::{gain_schedule, DremGain, EstimatorState, Law, LawConfig};
use crate::extension::ExtensionState;
use crate::linalg::{adjugate, determinant, dot, eig_sym, norm2, SquareMatrix};
use crate::regularization::{mix, oracle_decompose, regularize, RegularizationParams, ROW_TOL};
use crate::signals::{preset, ScenarioSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub laws: Vec<Law>,
    pub tau_s: f64,
    pub l: f64,
    pub eps: f64,
    pub eps_bar: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    /// Gradient gain `Γ`.
    pub gradient_gain: SquareMatrix,
    /// Fixed per-element DREM gains; `None` selects the normalised schedule.
    pub drem_gains: Option<Vec<f64>>,
    pub theta0: Vec<f64>,
    pub log_stride: usize,
    pub row_tol: f64,
}

impl RunConfig {
    /// Defaults shared by all experiments; `Γ = γ_grad·I`.
    pub fn new(scenario: ScenarioSpec, gradient_gain: f64) -> Self {
        let n = scenario.dim();
        RunConfig {
            laws: Law::ALL.to_vec(),
            tau_s: 1e-4,
            l: 100.0,
            eps: 0.4,
            eps_bar: 1e-10,
            gamma0: 5.0,
            gamma1: 1.0,
            gradient_gain: SquareMatrix::identity(n).scaled(gradient_gain),
            drem_gains: None,
            theta0: vec![0.0; n],
            log_stride: 10,
            row_tol: ROW_TOL,
            scenario,
        }
    }

    /// One of the embedded experiments with its published parameters.
    pub fn preset(name: &str) -> Result<Self> {
        let spec = preset(name)?;
        let gain = if name == "exp-a" { 5.0 } else { 1.0 };
        Ok(Self::new(spec, gain))
    }

    pub fn with_theta0(mut self, theta0: Vec<f64>) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.theta0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.theta0.len(),
            });
        }
        if !(self.tau_s > 0.0 && self.tau_s.is_finite()) {
            return Err(Error::config(format!(
                "tau_s must be positive, got {}",
                self.tau_s
            )));
        }
        if !(self.l * self.tau_s < 1.0) {
            return Err(Error::StabilityViolation {
                product: self.l * self.tau_s,
            });
        }
        if self.log_stride == 0 {
            return Err(Error::config("log stride must be at least 1"));
        }
        if self.laws.is_empty() {
            return Err(Error::config("at least one law must be selected"));
        }
        RegularizationParams::new(self.eps, self.eps_bar)?;
        for law in &self.laws {
            EstimatorState::new(self.theta0.clone(), self.law_config(*law))?;
        }
        Ok(())
    }

    fn law_config(&self, law: Law) -> LawConfig {
        match law {
            Law::Gradient => LawConfig::Gradient {
                gain: self.gradient_gain.clone(),
            },
            Law::Drem => LawConfig::Drem {
                gain: match &self.drem_gains {
                    Some(g) => DremGain::PerElement(g.clone()),
                    None => DremGain::Normalized {
                        gamma0: self.gamma0,
                        gamma1: self.gamma1,
                        eps: self.eps,
                    },
                },
            },
            Law::DremRegularized => LawConfig::DremRegularized {
                gamma0: self.gamma0,
                gamma1: self.gamma1,
            },
        }
    }

    fn settings(&self) -> CheckSettings {
        CheckSettings {
            eps: self.eps,
            eps_bar: self.eps_bar,
            gamma0: self.gamma0,
            tau_s: self.tau_s,
            row_tol: self.row_tol,
            monotonic_from: 0.0,
        }
    }
}

/// Estimate of one law at a logged instant.
#[derive(Clone, Debug, PartialEq)]
pub struct LawEstimate {
    pub theta_hat: Vec<f64>,
    pub tilde_theta: Vec<f64>,
    pub tilde_big_theta: Vec<f64>,
}

/// Quantities only available from an in-process run.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// `‖adj(Φ)·Φ − ωI‖∞`
    pub adjugate_residual: f64,
    /// `V₂V₂ᵀ`
    pub projector: SquareMatrix,
    /// `‖y − φθ‖∞`
    pub consistency_residual: f64,
    /// Unregularized `det φ`.
    pub omega_raw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub phibar: Vec<f64>,
    pub z: f64,
    pub lambda: Vec<f64>,
    pub rank: usize,
    pub omega: f64,
    pub gamma: f64,
    /// `φ̄ᵀθ̃` per law, indexed by [`Law::index`].
    pub tilde_z: [Option<f64>; 3],
    pub estimates: [Option<LawEstimate>; 3],
    pub d: Vec<f64>,
    pub identifiable: Vec<bool>,
    pub diagnostics: Option<StepDiagnostics>,
}

impl TraceRecord {
    pub fn estimate(&self, law: Law) -> Option<&LawEstimate> {
        self.estimates[law.index()].as_ref()
    }

    /// Smallest eigenvalue `≥ ε̄`, 0 if none.
    pub fn lambda_min(&self) -> f64 {
        if self.rank == 0 {
            0.0
        } else {
            self.lambda[self.rank - 1]
        }
    }
}

/// Parameters the post-hoc checks need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckSettings {
    pub eps: f64,
    pub eps_bar: f64,
    pub gamma0: f64,
    pub tau_s: f64,
    pub row_tol: f64,
    /// Monotonicity is only judged for `t ≥ monotonic_from`.
    pub monotonic_from: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings {
            eps: 0.4,
            eps_bar: 1e-10,
            gamma0: 5.0,
            tau_s: 1e-4,
            row_tol: ROW_TOL,
            monotonic_from: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceLog {
    pub n: usize,
    pub theta_true: Vec<f64>,
    pub theta_max: f64,
    pub laws: Vec<Law>,
    pub settings: CheckSettings,
    pub records: Vec<TraceRecord>,
    /// Instants where the nullspace projector (or rank) jumps.
    pub switch_times: Vec<f64>,
    /// Steps where the regularized law hit the no-overshoot guard.
    pub clamped_steps: u64,
}

impl TraceLog {
    pub fn errors(&self, law: Law) -> Vec<ErrorRecord> {
        self.records
            .iter()
            .filter_map(|r| {
                let e = r.estimate(law)?;
                Some(ErrorRecord {
                    t: r.t,
                    tilde_theta: e.tilde_theta.clone(),
                    tilde_big_theta: e.tilde_big_theta.clone(),
                    tilde_z: r.tilde_z[law.index()].unwrap_or_else(|| dot(&r.phibar, &e.tilde_theta)),
                })
            })
            .collect()
    }

    pub fn lambda_trace(&self) -> Vec<(f64, Vec<f64>)> {
        self.records.iter().map(|r| (r.t, r.lambda.clone())).collect()
    }

    pub fn excitation(&self) -> Result<ExcitationReport> {
        let mut cfg = ExcitationConfig::for_step(self.settings.tau_s);
        cfg.eps_bar = self.settings.eps_bar;
        classify(&self.lambda_trace(), &cfg)
    }

    pub fn record_at(&self, t: f64) -> Option<&TraceRecord> {
        self.records
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Runs the simulation described by `cfg`.
pub fn run(cfg: &RunConfig) -> Result<TraceLog> {
    cfg.validate()?;
    let n = cfg.dim();
    let spec = &cfg.scenario;
    let theta = &spec.theta_true;
    let params = RegularizationParams::new(cfg.eps, cfg.eps_bar)?;
    let tau = cfg.tau_s;
    let steps = (spec.horizon / tau).round() as u64;

    let mut ext = ExtensionState::new(n, cfg.l)?;
    let mut laws = cfg.laws.clone();
    laws.sort();
    laws.dedup();
    let mut estimators: Vec<EstimatorState> = laws
        .iter()
        .map(|&law| EstimatorState::new(cfg.theta0.clone(), cfg.law_config(law)))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity((steps / cfg.log_stride as u64 + 1) as usize);
    let mut projectors = Vec::with_capacity(records.capacity());

    for k in 0..=steps {
        let t = k as f64 * tau;
        let sample = spec.sample(t)?;
        let eig = eig_sym(&ext.phi, cfg.eps_bar)?;
        let spectrum = regularize(&eig, params.eps, params.eps_bar)?;
        let reg = mix(&eig, &spectrum, &ext.y, params)?;
        let lambda_min = eig.smallest_retained();
        let raw = if laws.contains(&Law::Drem) {
            Some((determinant(&ext.phi)?, adjugate(&ext.phi)?.mul_vec(&ext.y)?))
        } else {
            None
        };

        if k % cfg.log_stride as u64 == 0 {
            let oracle = oracle_decompose(&reg.nullspace, theta, cfg.row_tol);
            let mut tilde_z = [None; 3];
            let mut estimates: [Option<LawEstimate>; 3] = Default::default();
            for est in &estimators {
                let e = ErrorRecord::new(t, &sample.phibar, &est.theta_hat, theta, &oracle.d);
                tilde_z[est.law().index()] = Some(e.tilde_z);
                estimates[est.law().index()] = Some(LawEstimate {
                    theta_hat: est.theta_hat.clone(),
                    tilde_theta: e.tilde_theta,
                    tilde_big_theta: e.tilde_big_theta,
                });
            }
            let projector = eig.nullspace_projector();
            projectors.push((t, projector.clone()));
            records.push(TraceRecord {
                t,
                phibar: sample.phibar.clone(),
                z: sample.z,
                lambda: eig.values.clone(),
                rank: eig.rank,
                omega: reg.omega,
                gamma: gain_schedule(reg.omega, lambda_min, n, cfg.eps, cfg.gamma0, cfg.gamma1),
                tilde_z,
                estimates,
                identifiable: oracle.mask(n),
                d: oracle.d,
                diagnostics: Some(StepDiagnostics {
                    adjugate_residual: reg.adjugate_residual(),
                    projector,
                    consistency_residual: ext.consistency_residual(theta)?,
                    omega_raw: raw.as_ref().map_or(f64::NAN, |r| r.0),
                }),
            });
        }
        if k == steps {
            break;
        }

        for est in estimators.iter_mut() {
            match est.law() {
                Law::Gradient => est.gradient_step(&sample, tau)?,
                Law::Drem => {
                    let (omega_raw, y_raw) = raw.as_ref().expect("computed when DREM is selected");
                    est.drem_step(*omega_raw, y_raw, lambda_min, tau)?
                }
                Law::DremRegularized => est.dremr_step(&reg, lambda_min, tau)?,
            }
        }
        ext.step(&sample, tau)?;
    }

    let switch_times = nullspace_switches(&projectors, 10.0 * cfg.row_tol);
    let clamped_steps = estimators.iter().map(|e| e.clamped_steps).sum();
    Ok(TraceLog {
        n,
        theta_true: theta.clone(),
        theta_max: spec.theta_max,
        laws,
        settings: cfg.settings(),
        records,
        switch_times,
        clamped_steps,
    })
}

// ---------------------------------------------------------------------------
// CSV

/// Column names in trace order for dimension `n`.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "z",
        "omega",
        "gamma",
        "rank",
        "tilde_z_grad",
        "tilde_z_drem",
        "tilde_z_dremr",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for group in [
        "phibar",
        "lambda",
        "thetahat_dremr",
        "tilde_theta_dremr",
        "tilde_Theta",
        "d",
        "identifiable",
    ] {
        h.extend((1..=n).map(|i| format!("{group}_{i}")));
    }
    h
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Writes the trace as CSV: a header row then one row per record.
pub fn write_csv<W: Write>(trace: &TraceLog, out: W) -> std::io::Result<()> {
    let n = trace.n;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n))?;
    let mut row: Vec<String> = Vec::with_capacity(8 + 7 * n);
    for r in &trace.records {
        row.clear();
        row.push(fmt_num(r.t));
        row.push(fmt_num(r.z));
        row.push(fmt_num(r.omega));
        row.push(fmt_num(r.gamma));
        row.push(r.rank.to_string());
        for law in Law::ALL {
            row.push(fmt_opt(r.tilde_z[law.index()]));
        }
        row.extend(r.phibar.iter().map(|&x| fmt_num(x)));
        row.extend(r.lambda.iter().map(|&x| fmt_num(x)));
        match r.estimate(Law::DremRegularized) {
            Some(e) => {
                row.extend(e.theta_hat.iter().map(|&x| fmt_num(x)));
                row.extend(e.tilde_theta.iter().map(|&x| fmt_num(x)));
                row.extend(e.tilde_big_theta.iter().map(|&x| fmt_num(x)));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 3 * n)),
        }
        row.extend(r.d.iter().map(|&x| fmt_num(x)));
        row.extend(
            r.identifiable
                .iter()
                .map(|&b| if b { "1" } else { "0" }.to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn emit_csv(trace: &TraceLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_csv(trace, &mut buf).map_err(|e| Error::io(path, e))?;
    buf.flush().map_err(|e| Error::io(path, e))
}

/// Parses a trace written by [`write_csv`]. Only the regularized law's
/// estimates survive the round trip; `θ` is recovered as `θ̂ − θ̃`.
pub fn read_csv<R: Read>(input: R, settings: CheckSettings, origin: &Path) -> Result<TraceLog> {
    let bad = |message: String| Error::Trace {
        path: origin.to_path_buf(),
        message,
    };
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = header.iter().filter(|h| h.starts_with("phibar_")).count();
    if n == 0 || header != csv_header(n) {
        return Err(bad("unexpected header".into()));
    }

    let mut records = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<Option<f64>> {
            let s = row.get(i).unwrap_or("").trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| bad(format!("row {}: column `{}`: {e}", line + 2, header[i])))
        };
        let req = |i: usize| -> Result<f64> {
            field(i)?.ok_or_else(|| bad(format!("row {}: column `{}` is empty", line + 2, header[i])))
        };
        let vec_at = |start: usize| -> Result<Vec<f64>> { (start..start + n).map(&req).collect() };
        let opt_vec_at = |start: usize| -> Result<Option<Vec<f64>>> {
            let v: Vec<Option<f64>> = (start..start + n).map(&field).collect::<Result<_>>()?;
            Ok(v.into_iter().collect())
        };

        let base = 8;
        let dremr = match (
            opt_vec_at(base + 2 * n)?,
            opt_vec_at(base + 3 * n)?,
            opt_vec_at(base + 4 * n)?,
        ) {
            (Some(theta_hat), Some(tilde_theta), Some(tilde_big_theta)) => Some(LawEstimate {
                theta_hat,
                tilde_theta,
                tilde_big_theta,
            }),
            _ => None,
        };
        let identifiable = (base + 6 * n..base + 7 * n)
            .map(|i| match row.get(i).map(str::trim) {
                Some("1") => Ok(true),
                Some("0") => Ok(false),
                other => Err(bad(format!("row {}: bad mask value {other:?}", line + 2))),
            })
            .collect::<Result<Vec<bool>>>()?;
        records.push(TraceRecord {
            t: req(0)?,
            z: req(1)?,
            omega: req(2)?,
            gamma: field(3)?.unwrap_or(f64::NAN),
            rank: row
                .get(4)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| bad(format!("row {}: rank: {e}", line + 2)))?,
            tilde_z: [field(5)?, field(6)?, field(7)?],
            phibar: vec_at(base)?,
            lambda: vec_at(base + n)?,
            estimates: [None, None, dremr],
            d: vec_at(base + 5 * n)?,
            identifiable,
            diagnostics: None,
        });
    }

    let theta_true = records
        .iter()
        .find_map(|r| r.estimate(Law::DremRegularized))
        .map(|e| {
            e.theta_hat
                .iter()
                .zip(&e.tilde_theta)
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>()
        })
        .unwrap_or_default();
    let theta_max = norm2(&theta_true);
    let laws = Law::ALL
        .into_iter()
        .filter(|l| records.first().is_some_and(|r| r.tilde_z[l.index()].is_some()))
        .collect();

    // Without projectors, switches are inferred from rank changes and jumps in d.
    let d_threshold = 10.0 * settings.row_tol * theta_max.max(1.0);
    let switch_times = records
        .windows(2)
        .filter(|w| {
            w[0].rank != w[1].rank
                || w[0]
                    .d
                    .iter()
                    .zip(&w[1].d)
                    .any(|(a, b)| (a - b).abs() > d_threshold)
        })
        .map(|w| w[1].t)
        .collect();

    Ok(TraceLog {
        n,
        theta_true,
        theta_max,
        laws,
        settings,
        records,
        switch_times,
        clamped_steps: 0,
    })
}

pub fn load_csv(path: &Path, settings: CheckSettings) -> Result<TraceLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), settings, path)
}

// ---------------------------------------------------------------------------
// Checks

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    /// `‖adj(Φ)Φ − ωI‖∞ ≤ 1e-9·max(1, |ω|)`
    Adjugate,
    /// `ω ≥ min{λ_minⁿ, εⁿ} − 1e-12` whenever the rank is positive.
    LowerBound,
    /// `|Θ̃_i|` non-increasing between switches.
    Monotonicity,
    /// Zero rows of `V₂` carry no disturbance.
    Identifiability,
    /// Contraction over the first qualifying excitation interval.
    Contraction,
    /// `z̃ = φ̄ᵀθ̃`
    ZIdentity,
    /// `‖θ̃‖ ≤ θ_max + 1e-6` at the final record.
    SetBound,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Adjugate,
        Check::LowerBound,
        Check::Monotonicity,
        Check::Identifiability,
        Check::Contraction,
        Check::ZIdentity,
        Check::SetBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Adjugate => "adjugate",
            Check::LowerBound => "lower-bound",
            Check::Monotonicity => "monotonicity",
            Check::Identifiability => "identifiability",
            Check::Contraction => "contraction",
            Check::ZIdentity => "z-identity",
            Check::SetBound => "set-bound",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownCheck(name.to_string()))
    }

    /// Expands a suite name (`all`, a single check, or a comma-separated list).
    pub fn suite(name: &str) -> Result<Vec<Check>> {
        if name == "all" {
            return Ok(Check::ALL.to_vec());
        }
        name.split(',').map(|s| Check::parse(s.trim())).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}\t{}\tmeasured={:.6e}\tbound={:.6e}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.measured,
            self.bound
        )?;
        if !self.detail.is_empty() {
            write!(f, "\t{}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    /// 0 when every selected check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

impl std::fmt::Display for AcceptanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        Ok(())
    }
}

/// Runs the selected checks against a trace.
pub fn acceptance(trace: &TraceLog, checks: &[Check]) -> Result<AcceptanceReport> {
    let outcomes = checks
        .iter()
        .map(|&c| run_check(trace, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(AcceptanceReport { outcomes })
}

fn need_dremr(trace: &TraceLog, check: Check) -> Result<()> {
    if trace.theta_true.is_empty() || !trace.laws.contains(&Law::DremRegularized) {
        return Err(Error::config(format!(
            "check `{}` needs the drem-regularized law in the trace",
            check.name()
        )));
    }
    Ok(())
}

fn run_check(trace: &TraceLog, check: Check) -> Result<CheckOutcome> {
    let s = &trace.settings;
    let name = check.name();
    let outcome = match check {
        Check::Adjugate => {
            let mut worst = 0.0_f64;
            let mut at = 0.0;
            for r in &trace.records {
                let diag = r.diagnostics.as_ref().ok_or_else(|| {
                    Error::config("check `adjugate` needs an in-process trace (Φ is not in the CSV)")
                })?;
                let ratio = diag.adjugate_residual / r.omega.abs().max(1.0);
                if ratio > worst {
                    worst = ratio;
                    at = r.t;
                }
            }
            CheckOutcome {
                name,
                passed: worst <= 1e-9,
                measured: worst,
                bound: 1e-9,
                detail: format!("worst at t={at}"),
            }
        }
        Check::LowerBound => {
            let mut worst_margin = f64::INFINITY;
            let mut at = f64::NAN;
            for r in trace.records.iter().filter(|r| r.rank >= 1) {
                let bound = r
                    .lambda_min()
                    .powi(trace.n as i32)
                    .min(s.eps.powi(trace.n as i32));
                let margin = r.omega - bound;
                if margin < worst_margin {
                    worst_margin = margin;
                    at = r.t;
                }
            }
            CheckOutcome {
                name,
                passed: worst_margin >= -1e-12,
                measured: worst_margin,
                bound: -1e-12,
                detail: format!("smallest omega - min(lambda_min^n, eps^n) at t={at}"),
            }
        }
        Check::Monotonicity => {
            need_dremr(trace, check)?;
            let series: Vec<(f64, Vec<f64>)> = trace
                .records
                .iter()
                .filter(|r| r.t >= s.monotonic_from)
                .filter_map(|r| Some((r.t, r.estimate(Law::DremRegularized)?.tilde_big_theta.clone())))
                .collect();
            let v = monotonicity_check(&series, &trace.switch_times, 1e-9);
            let worst = v.iter().map(|x| x.increase).fold(0.0, f64::max);
            CheckOutcome {
                name,
                passed: v.is_empty(),
                measured: v.len() as f64,
                bound: 0.0,
                detail: match v.first() {
                    Some(x) => format!(
                        "first violation: index {} at t={} (+{:e})",
                        x.index + 1,
                        x.t,
                        worst
                    ),
                    None => format!("{} switch(es) excluded", trace.switch_times.len()),
                },
            }
        }
        Check::Identifiability => {
            let mut worst = 0.0_f64;
            for r in &trace.records {
                for (i, &ok) in r.identifiable.iter().enumerate() {
                    if ok {
                        worst = worst.max(r.d[i].abs());
                    }
                }
            }
            let bound = s.row_tol * trace.theta_max.max(1.0);
            CheckOutcome {
                name,
                passed: worst <= bound,
                measured: worst,
                bound,
                detail: "max |d_i| over identifiable indices".into(),
            }
        }
        Check::Contraction => {
            need_dremr(trace, check)?;
            match contraction_report(trace)? {
                Some(rep) => CheckOutcome {
                    name,
                    passed: rep.holds(),
                    measured: rep.error_end,
                    bound: rep.beta * rep.error_start,
                    detail: format!(
                        "interval=[{:.4}, {:.4}] beta1={:.4} beta={:.4} sufficient={}{}",
                        rep.t_start,
                        rep.t_end,
                        rep.beta1,
                        rep.beta,
                        if rep.sufficient_condition { "yes" } else { "no" },
                        if rep.sufficient_condition {
                            ""
                        } else {
                            " (non-convergent mode)"
                        }
                    ),
                },
                None => CheckOutcome {
                    name,
                    passed: false,
                    measured: f64::NAN,
                    bound: f64::NAN,
                    detail: "no qualifying excitation interval".into(),
                },
            }
        }
        Check::ZIdentity => {
            need_dremr(trace, check)?;
            let worst = trace
                .errors(Law::DremRegularized)
                .iter()
                .zip(&trace.records)
                .map(|(e, r)| (e.tilde_z - dot(&r.phibar, &e.tilde_theta)).abs())
                .fold(0.0, f64::max);
            CheckOutcome {
                name,
                passed: worst <= 1e-12,
                measured: worst,
                bound: 1e-12,
                detail: String::new(),
            }
        }
        Check::SetBound => {
            need_dremr(trace, check)?;
            let errors = trace.errors(Law::DremRegularized);
            let last = errors
                .last()
                .ok_or_else(|| Error::config("trace has no records"))?;
            let measured = last.tilde_theta_norm();
            let peak = errors
                .iter()
                .map(ErrorRecord::tilde_theta_norm)
                .fold(0.0, f64::max);
            let bound = trace.theta_max + 1e-6;
            CheckOutcome {
                name,
                passed: measured <= bound,
                measured,
                bound,
                detail: format!("||tilde_theta|| at t={}; peak {peak:.6e}", last.t),
            }
        }
    };
    Ok(outcome)
}

/// Contraction of the regularized law over the first qualifying excitation interval.
pub fn contraction_report(trace: &TraceLog) -> Result<Option<ContractionReport>> {
    let exc = trace.excitation()?;
    let Some(q) = exc.qualifying_intervals.first() else {
        return Ok(None);
    };
    let errors = trace.errors(Law::DremRegularized);
    // The sample at a regime boundary already belongs to the next regime while
    // φ has not absorbed it yet, so the interval closes one record early.
    let closing = errors.iter().rposition(|e| e.t <= q.end);
    let t_end = match closing {
        Some(k) if k > 0 && errors[k - 1].t >= q.start => errors[k - 1].t,
        _ => q.end,
    };
    contraction_check(&errors, q.start, t_end, trace.theta_max, trace.settings.gamma0).map(Some)
}
