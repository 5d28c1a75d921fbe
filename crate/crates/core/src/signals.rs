//! Measurable regressor/regressand pairs `z(t) = φ̄ᵀ(t)θ` built from
//! piecewise elementary signals, plus the embedded experiment presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// One time instant of the measurable regression.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorSample {
    pub t: f64,
    pub phibar: Vec<f64>,
    pub z: f64,
}

impl RegressorSample {
    /// Scales the sample by `1 / (1 + ‖φ̄‖²)`, which bounds `‖φ̄‖ ≤ 1`.
    pub fn normalize(&self) -> RegressorSample {
        let ns = 1.0 / (1.0 + dot(&self.phibar, &self.phibar));
        RegressorSample {
            t: self.t,
            phibar: self.phibar.iter().map(|p| p * ns).collect(),
            z: self.z * ns,
        }
    }
}

/// Elementary signal shapes a regressor component can be assembled from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    /// `c·sin(a·t)`
    Sin { c: f64, a: f64 },
    /// `c·cos(a·t)·e^(−t)`
    CosExp { c: f64, a: f64 },
    /// `c·e^(−t)`
    Exp { c: f64 },
    /// `c`
    Constant { c: f64 },
    /// `c·e^(−t) + offset`
    ExpOffset { c: f64, offset: f64 },
}

impl Elementary {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Elementary::Sin { c, a } => c * (a * t).sin(),
            Elementary::CosExp { c, a } => c * ((a * t).cos() * (-t).exp()),
            Elementary::Exp { c } => c * (-t).exp(),
            Elementary::Constant { c } => c,
            Elementary::ExpOffset { c, offset } => c * (-t).exp() + offset,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Elementary::Sin { .. } => "sin",
            Elementary::CosExp { .. } => "cos-exp",
            Elementary::Exp { .. } => "exp",
            Elementary::Constant { .. } => "constant",
            Elementary::ExpOffset { .. } => "exp-offset",
        }
    }

    fn coefficients(&self) -> Vec<f64> {
        match *self {
            Elementary::Sin { c, a } | Elementary::CosExp { c, a } => vec![c, a],
            Elementary::Exp { c } | Elementary::Constant { c } => vec![c],
            Elementary::ExpOffset { c, offset } => vec![c, offset],
        }
    }

    fn from_parts(kind: &str, coefficients: &[f64]) -> Result<Self> {
        let need = |k: usize| -> Result<()> {
            if coefficients.len() != k {
                return Err(Error::config(format!(
                    "signal kind `{kind}` takes {k} coefficient(s), got {}",
                    coefficients.len()
                )));
            }
            Ok(())
        };
        let e = match kind {
            "sin" => {
                need(2)?;
                Elementary::Sin {
                    c: coefficients[0],
                    a: coefficients[1],
                }
            }
            "cos-exp" => {
                need(2)?;
                Elementary::CosExp {
                    c: coefficients[0],
                    a: coefficients[1],
                }
            }
            "exp" => {
                need(1)?;
                Elementary::Exp { c: coefficients[0] }
            }
            "constant" => {
                need(1)?;
                Elementary::Constant { c: coefficients[0] }
            }
            "exp-offset" => {
                need(2)?;
                Elementary::ExpOffset {
                    c: coefficients[0],
                    offset: coefficients[1],
                }
            }
            other => return Err(Error::config(format!("unknown signal kind `{other}`"))),
        };
        Ok(e)
    }
}

/// A signal on `[start, end)`; the last piece of a component is closed.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub signal: Elementary,
}

/// A regression scenario: dimension, true parameters and piecewise regressor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct ScenarioSpec {
    pub name: String,
    pub theta_true: Vec<f64>,
    pub theta_max: f64,
    pub horizon: f64,
    pub normalize: bool,
    pub components: Vec<Vec<Piece>>,
}

impl ScenarioSpec {
    pub fn new(
        name: impl Into<String>,
        theta_true: Vec<f64>,
        horizon: f64,
        normalize: bool,
        components: Vec<Vec<Piece>>,
    ) -> Result<Self> {
        let theta_max = norm2(&theta_true);
        let spec = ScenarioSpec {
            name: name.into(),
            theta_true,
            theta_max,
            horizon,
            normalize,
            components,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.theta_true.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::config("scenario dimension must be positive"));
        }
        if self.components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.components.len(),
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::config("horizon must be finite and non-negative"));
        }
        if self.theta_true.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("theta_true"));
        }
        if norm2(&self.theta_true) > self.theta_max * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "‖theta_true‖ = {} exceeds theta_max = {}",
                norm2(&self.theta_true),
                self.theta_max
            )));
        }
        for (k, pieces) in self.components.iter().enumerate() {
            let first = pieces
                .first()
                .ok_or_else(|| Error::config(format!("component {} has no pieces", k + 1)))?;
            if first.start != 0.0 {
                return Err(Error::config(format!("component {} does not start at 0", k + 1)));
            }
            for w in pieces.windows(2) {
                if w[0].end != w[1].start {
                    return Err(Error::config(format!(
                        "component {}: pieces must be contiguous (gap or overlap at {})",
                        k + 1,
                        w[0].end
                    )));
                }
            }
            for p in pieces {
                if !(p.end > p.start) && !(pieces.len() == 1 && p.end == p.start) {
                    return Err(Error::config(format!(
                        "component {}: empty interval [{}, {}]",
                        k + 1,
                        p.start,
                        p.end
                    )));
                }
            }
            let last = pieces.last().map(|p| p.end).unwrap_or_default();
            if last < self.horizon {
                return Err(Error::config(format!(
                    "component {} ends at {last} before the horizon {}",
                    k + 1,
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the regression at `t ∈ [0, horizon]` (normalised when the
    /// scenario asks for it).
    pub fn sample(&self, t: f64) -> Result<RegressorSample> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= 0.0 && t <= self.horizon + slack) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let phibar: Vec<f64> = self
            .components
            .iter()
            .map(|pieces| piece_at(pieces, t).signal.eval(t))
            .collect();
        let z = dot(&phibar, &self.theta_true);
        let s = RegressorSample { t, phibar, z };
        Ok(if self.normalize { s.normalize() } else { s })
    }

    /// Piece boundaries shared by any component, excluding 0 and the horizon.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| c.iter().skip(1).map(|p| p.start))
            .filter(|&t| t > 0.0 && t < self.horizon)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("scenario file: {e}")))
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }
}

fn piece_at(pieces: &[Piece], t: f64) -> &Piece {
    pieces
        .iter()
        .find(|p| p.start <= t && t < p.end)
        .unwrap_or_else(|| pieces.last().expect("validated non-empty"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: String,
    n: usize,
    theta_true: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_max: Option<f64>,
    horizon: f64,
    #[serde(default)]
    normalize: bool,
    components: Vec<ComponentFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    pieces: Vec<PieceFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceFile {
    interval: [f64; 2],
    kind: String,
    coefficients: Vec<f64>,
}

impl TryFrom<ScenarioFile> for ScenarioSpec {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        if f.n != f.theta_true.len() {
            return Err(Error::DimensionMismatch {
                expected: f.n,
                found: f.theta_true.len(),
            });
        }
        let components = f
            .components
            .into_iter()
            .map(|c| {
                c.pieces
                    .into_iter()
                    .map(|p| {
                        Ok(Piece {
                            start: p.interval[0],
                            end: p.interval[1],
                            signal: Elementary::from_parts(&p.kind, &p.coefficients)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let theta_max = f.theta_max.unwrap_or_else(|| norm2(&f.theta_true));
        let spec = ScenarioSpec {
            name: f.name,
            theta_true: f.theta_true,
            theta_max,
            horizon: f.horizon,
            normalize: f.normalize,
            components,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ScenarioSpec> for ScenarioFile {
    fn from(s: ScenarioSpec) -> Self {
        ScenarioFile {
            name: s.name,
            n: s.theta_true.len(),
            theta_max: Some(s.theta_max),
            theta_true: s.theta_true,
            horizon: s.horizon,
            normalize: s.normalize,
            components: s
                .components
                .into_iter()
                .map(|pieces| ComponentFile {
                    pieces: pieces
                        .into_iter()
                        .map(|p| PieceFile {
                            interval: [p.start, p.end],
                            kind: p.signal.kind().to_string(),
                            coefficients: p.signal.coefficients(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Names of the embedded scenarios.
pub const PRESETS: [&str; 3] = ["exp-a", "exp-b1", "exp-b2"];

const THETA: [f64; 3] = [4.0, -8.0, 12.0];

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    match name {
        "exp-a" => exp_a(),
        "exp-b1" => exp_b1(),
        "exp-b2" => exp_b2(),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn whole(end: f64, signal: Elementary) -> Vec<Piece> {
    vec![Piece {
        start: 0.0,
        end,
        signal,
    }]
}

fn pieces(breaks: &[f64], signals: &[Elementary]) -> Vec<Piece> {
    breaks
        .windows(2)
        .zip(signals)
        .map(|(w, &signal)| Piece {
            start: w[0],
            end: w[1],
            signal,
        })
        .collect()
}

/// `φ̄ = [−2e^{−t}cos t, e^{−t}cos t, e^{−t}]`: constant rank 2 and a fixed nullspace.
fn exp_a() -> Result<ScenarioSpec> {
    let h = 2.0;
    ScenarioSpec::new(
        "exp-a",
        THETA.to_vec(),
        h,
        false,
        vec![
            whole(h, Elementary::CosExp { c: -2.0, a: 1.0 }),
            whole(h, Elementary::CosExp { c: 1.0, a: 1.0 }),
            whole(h, Elementary::Exp { c: 1.0 }),
        ],
    )
}

/// Rank 1 on [0, 5), rank 2 on [5, 10), full rank on [10, 15), rank 1 afterwards.
fn exp_b1() -> Result<ScenarioSpec> {
    let h = 25.0;
    let s = |c| Elementary::Sin { c, a: 1.0 };
    ScenarioSpec::new(
        "exp-b1",
        THETA.to_vec(),
        h,
        false,
        vec![
            whole(h, s(9.0)),
            pieces(
                &[0.0, 5.0, 15.0, h],
                &[s(2.0), Elementary::Constant { c: 4.0 }, s(2.0)],
            ),
            pieces(
                &[0.0, 10.0, 15.0, h],
                &[s(1.0), Elementary::Sin { c: 1.0, a: 50.0 }, s(1.0)],
            ),
        ],
    )
}

/// Rank 2 throughout with the nullspace basis switching at t = 1 and t = 2.
fn exp_b2() -> Result<ScenarioSpec> {
    let h = 5.0;
    let b = [0.0, 1.0, 2.0, h];
    let m2 = Elementary::CosExp { c: -2.0, a: 1.0 };
    let c1 = Elementary::CosExp { c: 1.0, a: 1.0 };
    let e = Elementary::Exp { c: 1.0 };
    ScenarioSpec::new(
        "exp-b2",
        THETA.to_vec(),
        h,
        false,
        vec![
            pieces(&b, &[m2, e, c1]),
            pieces(&b, &[c1, m2, Elementary::ExpOffset { c: 1.0, offset: 0.1 }]),
            pieces(&b, &[e, c1, m2]),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exp_a_at_zero() {
        let s = preset("exp-a").unwrap().sample(0.0).unwrap();
        assert_eq!(s.phibar, vec![-2.0, 1.0, 1.0]);
        assert_eq!(s.z, -4.0);
    }

    #[test]
    fn exp_b1_at_half_pi() {
        let s = preset("exp-b1").unwrap().sample(FRAC_PI_2).unwrap();
        assert_eq!(s.phibar, vec![9.0, 2.0, 1.0]);
        assert_eq!(s.z, 32.0);
    }

    #[test]
    fn piece_boundaries_are_left_closed() {
        let spec = preset("exp-b1").unwrap();
        assert_eq!(spec.sample(5.0).unwrap().phibar[1], 4.0);
        assert_eq!(spec.sample(10.0).unwrap().phibar[2], (500.0_f64).sin());
        // final piece is closed on the right
        let end = spec.sample(25.0).unwrap();
        assert_eq!(end.phibar[1], 2.0 * 25.0_f64.sin());
        assert_eq!(spec.boundaries(), vec![5.0, 10.0, 15.0]);
    }

    #[test]
    fn exp_b2_offset_piece() {
        let spec = preset("exp-b2").unwrap();
        let s = spec.sample(3.0).unwrap();
        assert_eq!(s.phibar[1], (-3.0_f64).exp() + 0.1);
        assert_eq!(s.phibar[2], -2.0 * (3.0_f64.cos() * (-3.0_f64).exp()));
    }

    #[test]
    fn out_of_range() {
        let spec = preset("exp-a").unwrap();
        assert!(matches!(spec.sample(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(spec.sample(2.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn zero_theta_gives_zero_regressand() {
        let mut spec = preset("exp-b2").unwrap();
        spec.theta_true = vec![0.0; 3];
        for k in 0..=50 {
            assert_eq!(spec.sample(k as f64 * 0.1).unwrap().z, 0.0);
        }
    }

    #[test]
    fn normalization_arithmetic() {
        let s = RegressorSample {
            t: 0.0,
            phibar: vec![-2.0, 1.0, 1.0],
            z: -4.0,
        };
        let ns = s.normalize();
        assert_eq!(ns.phibar, vec![-2.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0]);
        assert_eq!(ns.z, -4.0 / 7.0);
        let zero = RegressorSample {
            t: 0.0,
            phibar: vec![0.0; 3],
            z: 0.0,
        };
        assert_eq!(zero.normalize(), zero);
    }

    #[test]
    fn normalized_samples_keep_the_model() {
        for name in PRESETS {
            let mut spec = preset(name).unwrap();
            spec.normalize = true;
            for k in 0..=500 {
                let s = spec.sample(k as f64 * spec.horizon / 500.0).unwrap();
                assert!(norm2(&s.phibar) <= 1.0);
                let model = dot(&s.phibar, &spec.theta_true);
                assert!((s.z - model).abs() <= 1e-15 * s.z.abs().max(1.0) * 4.0);
            }
        }
    }

    #[test]
    fn toml_round_trip_and_validation() {
        for name in PRESETS {
            let spec = preset(name).unwrap();
            assert_eq!(ScenarioSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        }
        let bad = preset("exp-a")
            .unwrap()
            .to_toml()
            .replace("kind = \"exp\"", "kind = \"tan\"");
        assert!(ScenarioSpec::from_toml(&bad).is_err());
        let gap = ScenarioSpec::new(
            "gap",
            vec![1.0],
            2.0,
            false,
            vec![vec![
                Piece {
                    start: 0.0,
                    end: 1.0,
                    signal: Elementary::Constant { c: 1.0 },
                },
                Piece {
                    start: 1.5,
                    end: 2.0,
                    signal: Elementary::Constant { c: 1.0 },
                },
            ]],
        );
        assert!(gap.is_err());
    }
}
