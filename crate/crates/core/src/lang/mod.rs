//! The action-language DSL: parsing, pretty-printing, grounding into a
//! transition system, and zooming from coarse to fine resolution.

mod ast;
mod ground;
mod parse;
mod print;
mod system;
mod zoom;

pub use ast::{
    Axiom, AxiomKind, BodyItem, DomainDescription, Level, Resolution, SchemaAtom, SchemaLit, Term,
};
pub use ground::{ground, ground_with_budget, instance_counts, DEFAULT_ATOM_BUDGET};
pub use parse::parse_domain;
pub use print::pretty_print;
pub use system::{GroundCausal, GroundExec, TransitionSystem};
pub use zoom::{zoom, ZoomResult, Zoomer};

use thiserror::Error;

use crate::kernel::KernelError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("sort error (line {line}): {msg}")]
    Sort { line: usize, msg: String },
    #[error("semantic error (line {line}): {msg}")]
    Semantic { line: usize, msg: String },
    #[error("grounding would create {atoms} atoms, above the budget of {budget} (largest: {detail})")]
    AtomBudget { atoms: usize, budget: usize, detail: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("agent `{0}` was given more than one action in a step")]
    TwoActionsForActor(String),
    #[error("`{action}` is not executable: {condition}")]
    NotExecutable { action: String, condition: String },
    #[error("simultaneous effects disagree on `{0}`")]
    EffectConflict(String),
    #[error("coarse action `{action}` cannot be refined: {reason}")]
    Unrefinable { action: String, reason: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
