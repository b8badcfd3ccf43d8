//! Multi-class classification with an abstain option and group-wise false
//! decision rate control.
//!
//! A pre-classifier proposes a label for every test subject; conformal
//! p-values (or e-values) built from a labelled hold-out set decide which of
//! those proposals to keep, so that within each label group the expected
//! proportion of wrong decisions stays below its target level.

pub mod cli;
pub mod engine;
pub mod error;
pub mod evalues;
pub mod exact;
pub mod extensions;
pub mod io;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod simlab;
pub mod types;

pub use engine::{psp_run, GroupView};
pub use error::{PspError, Result};
pub use evalues::epsp_run;
pub use types::{
    CalibrationState, ClassLabel, Decision, DecisionReport, EvidenceKind, GroupOutcome,
    GroupPartition, LabeledSample, ScoreMatrix,
};
