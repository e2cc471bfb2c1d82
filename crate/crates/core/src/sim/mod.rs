//! Discrete household world and episode engine: synchronous stepping with
//! conflict resolution, the scripted human, the task generator and the
//! ad hoc agent loop.

mod adhoc;
mod config;
mod episode;
mod human;
mod tasks;
mod world;

pub use config::{ApplianceSpec, DayType, HumanProfile, ItemSpec, PastDay, PriorityRule, StartSpec, TaskSpec, WorldConfig};
pub use adhoc::{AdhocAgent, AnticipationRecord, ModelEvent, PolicyConfig, StepEnv};
pub use episode::{run_episode, state_digest, AgentHandle, AgentKind, EpisodeConfig, EpisodeLog, StepLog, DEFAULT_STEP_CAP};
pub use human::ScriptedHuman;
pub use tasks::{generate_tasks, RoutineSource, TaskRoutine};
pub use world::{ItemLoc, Outcome, PlanRequest, Snapshot, StepResult, World, EPISODE_NODE_BUDGET};

use thiserror::Error;

use crate::kernel::KernelError;
use crate::lang::LangError;
use crate::planner::PlanError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Config(String),
    #[error("unknown day type `{0}`")]
    UnknownDayType(String),
    #[error("{0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// 64-bit FNV-1a; used for state digests and the noisy mock's choices.
pub(crate) fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}
