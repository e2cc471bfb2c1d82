//! Ad hoc teamwork stack: an action-language planner, fast-and-frugal
//! teammate models, LLM-backed task anticipation, a discrete household
//! simulator and the experiment harness that ties them together.

pub mod anticipation;
pub mod behavior;
pub mod data;
pub mod harness;
pub mod kernel;
pub mod lang;
pub mod planner;
pub mod sim;

pub use kernel::{
    close_state, goal_satisfied, holds, Action, Atom, Goal, HistoryEntry, HistoryRecord, KernelError, Literal, State,
};
pub use lang::{ground, parse_domain, DomainDescription, LangError, Resolution, TransitionSystem};
