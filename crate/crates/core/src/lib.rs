//! Online identification of constant linear-regression parameters with
//! dynamic regressor extension, eigenvalue regularization and mixing.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod extension;
pub mod harness;
pub mod linalg;
pub mod regularization;
pub mod signals;

pub use diagnostics::{ContractionReport, ExcitationClass, ExcitationConfig, ExcitationReport};
pub use error::{Error, Result};
pub use estimators::{EstimatorState, Law, LawConfig};
pub use extension::ExtensionState;
pub use harness::{
    acceptance, run, AcceptanceReport, Check, CheckOutcome, CheckSettings, RunConfig, TraceLog, TraceRecord,
};
pub use linalg::{EigenDecomposition, SquareMatrix};
pub use regularization::{RegularizationParams, RegularizedRegression};
pub use signals::{RegressorSample, ScenarioSpec};
