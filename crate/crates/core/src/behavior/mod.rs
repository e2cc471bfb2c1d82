//! Teammate behavior models: fast-and-frugal trees per action family, an
//! arbiter over their outputs, rollout prediction of grounded actions and
//! an agreement tracker that switches or relearns models.

mod cues;
mod ensemble;
mod fftree;
mod predict;
mod traces;
mod tracker;

pub use cues::{extract_cues, family, predicates_for, Cue, CueContext, CueVector, Predicate, NONE, RELATIONS};
pub use ensemble::{learn_ensemble, Arbiter, BehaviorEnsemble, ARBITER_DEPTH};
pub use fftree::{assign_exits, learn_fftree, Decision, FFTree, DEFAULT_DEPTH, FP_WEIGHT};
pub use predict::{ground_family, predict};
pub use traces::{read_traces, write_traces, TraceRecord, TRACE_HEADER};
pub use tracker::{observe_and_maybe_revise, AgreementTracker, Revision, DEFAULT_THETA, DEFAULT_WINDOW};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("{0}")]
    Precondition(String),
    #[error("every cue is constant in the examples for `{0}`")]
    Degenerate(String),
    #[error("trace file line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },
}
