//! Minimum-length planning over a grounded transition system, joint
//! current/anticipated goals, refinement across resolutions, and diagnosis
//! of histories by retracting initial defaults.

mod diagnose;
mod refine;
mod search;

pub use diagnose::{diagnose, DiagnosisResult, DEFAULT_RETRACTION_BOUND};
pub use refine::{plan_refined, RefineBudgets};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{goal_satisfied, Action, ActorKind, Bits, Goal, GroundLit, KernelError, State};
use crate::lang::{LangError, TransitionSystem};
use search::Search;

/// Default ceiling on search nodes per planning call.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("initial state is inconsistent: {0}")]
    InconsistentInitial(String),
    #[error("search exceeded the node budget of {0}")]
    Budget(usize),
    #[error("exogenous action `{0}` is not declared in this system")]
    UnknownExo(String),
    #[error("no retraction of at most {0} defaults explains the observations")]
    Undiagnosable(usize),
    #[error("coarse action `{action}` could not be implemented at fine resolution: {reason}")]
    RefinementFailure { action: String, reason: String },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Expected exogenous actions, keyed by the step at which they occur.
pub type ExoSchedule = BTreeMap<usize, Vec<Action>>;

/// One time step of a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    /// The planning agent's action; `None` is a noop.
    pub action: Option<Action>,
    /// Teammate actions expected (and executable) at this step.
    pub expected_exo: Vec<Action>,
}

/// A timed action sequence for one agent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actor: Option<String>,
    pub steps: Vec<PlanStep>,
    /// Goal label with the step at which it first holds on replay.
    pub achieves: Vec<(String, usize)>,
}

impl Plan {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The agent's actions, noops omitted.
    pub fn actions(&self) -> Vec<&Action> {
        self.steps.iter().filter_map(|s| s.action.as_ref()).collect()
    }
}

/// Result of a planning call; running out of horizon is not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanOutcome {
    Found(Plan),
    NoPlan,
}

impl PlanOutcome {
    pub fn plan(self) -> Option<Plan> {
        match self {
            PlanOutcome::Found(p) => Some(p),
            PlanOutcome::NoPlan => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, PlanOutcome::Found(_))
    }
}

/// Search limits and the acting agent.
#[derive(Clone, Debug)]
pub struct PlanConfig {
    pub max_horizon: usize,
    pub node_budget: usize,
    /// Agent whose actions are planned; `None` plans over all agent actions.
    pub actor: Option<String>,
    /// Explicit candidate actions in tie-break order. When set, it replaces
    /// the actor's full action list; unknown actions are skipped.
    pub candidates: Option<Vec<Action>>,
}

impl PlanConfig {
    pub fn new(max_horizon: usize) -> Self {
        PlanConfig {
            max_horizon,
            node_budget: DEFAULT_NODE_BUDGET,
            actor: None,
            candidates: None,
        }
    }

    pub fn for_actor(max_horizon: usize, actor: impl Into<String>) -> Self {
        PlanConfig {
            actor: Some(actor.into()),
            ..PlanConfig::new(max_horizon)
        }
    }
}

fn candidate_actions(ts: &TransitionSystem, cfg: &PlanConfig) -> Vec<usize> {
    if let Some(list) = &cfg.candidates {
        return list.iter().filter_map(|a| ts.action_id(a)).collect();
    }
    match cfg.actor.as_deref() {
        Some(a) => ts.actions_of(a).to_vec(),
        None => (0..ts.action_count())
            .filter(|&i| ts.actor_kind(i) == ActorKind::Agent)
            .collect(),
    }
}

fn exo_ids(ts: &TransitionSystem, exo: &ExoSchedule, actor: Option<&str>) -> Result<BTreeMap<usize, Vec<usize>>, PlanError> {
    let mut out = BTreeMap::new();
    for (step, actions) in exo {
        let mut ids = Vec::new();
        for a in actions {
            let id = ts.action_id(a).ok_or_else(|| PlanError::UnknownExo(a.to_string()))?;
            if actor.is_some() && a.args.first().map(String::as_str) == actor {
                continue;
            }
            ids.push(id);
        }
        if !ids.is_empty() {
            out.insert(*step, ids);
        }
    }
    Ok(out)
}

pub(crate) fn goal_lits(ts: &TransitionSystem, goal: &Goal) -> Result<Vec<GroundLit>, PlanError> {
    goal.conjuncts()
        .iter()
        .map(|l| ts.universe().ground_lit(l).map_err(PlanError::from))
        .collect()
}

fn check_initial(ts: &TransitionSystem, s0: &State) -> Result<(), PlanError> {
    if let Some(v) = ts.constraints().first_violation(s0.bits()) {
        return Err(PlanError::InconsistentInitial(v));
    }
    Ok(())
}

fn build_plan(ts: &TransitionSystem, actor: Option<&str>, path: Vec<search::PathStep>) -> Plan {
    Plan {
        actor: actor.map(str::to_string),
        steps: path
            .into_iter()
            .map(|(a, exo)| PlanStep {
                action: a.map(|a| ts.action(a).clone()),
                expected_exo: exo.into_iter().map(|e| ts.action(e).clone()).collect(),
            })
            .collect(),
        achieves: Vec::new(),
    }
}

/// A minimum-length plan reaching `goal` from `s0`, with the expected
/// exogenous actions injected at their steps when executable.
pub fn plan(
    ts: &TransitionSystem,
    s0: &State,
    goal: &Goal,
    cfg: &PlanConfig,
    exo: &ExoSchedule,
) -> Result<PlanOutcome, PlanError> {
    check_initial(ts, s0)?;
    let actor = cfg.actor.as_deref();
    let lits = goal_lits(ts, goal)?;
    let search = Search {
        ts,
        actions: candidate_actions(ts, cfg),
        exo: exo_ids(ts, exo, actor)?,
        max_horizon: cfg.max_horizon,
        node_budget: cfg.node_budget,
    };
    let path = search.run(s0.bits(), 0, &|_, _, p| Some(p), &|b, _| b.all(&lits))?;
    Ok(match path {
        Some(path) => {
            let mut p = build_plan(ts, actor, path);
            p.achieves.push((goal.label().to_string(), p.len()));
            PlanOutcome::Found(p)
        }
        None => PlanOutcome::NoPlan,
    })
}

/// Plans for the current goal while preparing an anticipated one.
///
/// The current goal must hold no later than the step at which a plan for it
/// alone would achieve it. Among such plans the search returns the shortest
/// one that also leaves the anticipated goal satisfied at its end. When the
/// anticipated goal cannot be reached even after finishing the current one,
/// the plan for the current goal is returned unchanged.
pub fn plan_joint(
    ts: &TransitionSystem,
    s0: &State,
    current: &Goal,
    anticipated: &Goal,
    cfg: &PlanConfig,
    exo: &ExoSchedule,
) -> Result<PlanOutcome, PlanError> {
    let base = match plan(ts, s0, current, cfg, exo)? {
        PlanOutcome::Found(p) => p,
        PlanOutcome::NoPlan => return Ok(PlanOutcome::NoPlan),
    };
    if anticipated.conjuncts().is_subset(current.conjuncts()) {
        return Ok(PlanOutcome::Found(base));
    }
    let t_current = base.len();
    // Sequential witness: finish the current goal, then plan the next one.
    let states = replay(ts, s0, &base)?;
    let end = states.last().expect("replay yields the initial state");
    let rest_exo: ExoSchedule = exo
        .range(t_current..)
        .map(|(s, a)| (s - t_current, a.clone()))
        .collect();
    let follow_cfg = PlanConfig {
        max_horizon: cfg.max_horizon.saturating_sub(t_current),
        ..cfg.clone()
    };
    let follow = match plan(ts, end, anticipated, &follow_cfg, &rest_exo)? {
        PlanOutcome::Found(p) => p,
        PlanOutcome::NoPlan => return Ok(PlanOutcome::Found(base)),
    };
    let bound = t_current + follow.len();
    if goal_satisfied(end, anticipated)? {
        let mut p = base;
        p.achieves.push((anticipated.label().to_string(), t_current));
        return Ok(PlanOutcome::Found(p));
    }
    let actor = cfg.actor.as_deref();
    let cur = goal_lits(ts, current)?;
    let ant = goal_lits(ts, anticipated)?;
    let search = Search {
        ts,
        actions: candidate_actions(ts, cfg),
        exo: exo_ids(ts, exo, actor)?,
        max_horizon: bound,
        node_budget: cfg.node_budget,
    };
    let advance = |b: &Bits, depth: usize, phase: u8| -> Option<u8> {
        if phase == 1 || b.all(&cur) {
            Some(1)
        } else if depth >= t_current {
            None
        } else {
            Some(0)
        }
    };
    let path = search.run(s0.bits(), 0, &advance, &|b, p| p == 1 && b.all(&ant))?;
    let Some(path) = path else {
        return Ok(PlanOutcome::Found(base));
    };
    let mut p = build_plan(ts, actor, path);
    let states = replay(ts, s0, &p)?;
    let first_current = states
        .iter()
        .position(|s| s.bits().all(&cur))
        .unwrap_or(t_current);
    p.achieves.push((current.label().to_string(), first_current));
    p.achieves.push((anticipated.label().to_string(), p.len()));
    Ok(PlanOutcome::Found(p))
}

/// Replays `plan` from `s0`: the agent's actions must be executable;
/// expected exo actions are applied when executable and skipped otherwise.
/// Returns the visited states, starting with `s0`.
pub fn replay(ts: &TransitionSystem, s0: &State, plan: &Plan) -> Result<Vec<State>, PlanError> {
    let mut states = vec![s0.clone()];
    let mut bits = s0.bits().clone();
    for step in &plan.steps {
        let mut ids = Vec::new();
        if let Some(a) = &step.action {
            let id = ts.action_id(a).ok_or_else(|| LangError::UnknownAction(a.to_string()))?;
            if let Some(c) = ts.blocking_condition(&bits, id) {
                return Err(LangError::NotExecutable {
                    action: a.to_string(),
                    condition: c.to_string(),
                }
                .into());
            }
            ids.push(id);
        }
        let agent_only = ids.clone();
        for e in &step.expected_exo {
            if let Some(id) = ts.action_id(e) {
                if ts.is_executable(&bits, id) {
                    ids.push(id);
                }
            }
        }
        bits = match ts.successor_ids(&bits, &ids, false) {
            Ok(b) => b,
            Err(_) if ids.len() > agent_only.len() => ts.successor_ids(&bits, &agent_only, false)?,
            Err(e) => return Err(e.into()),
        };
        states.push(ts.wrap_state(bits.clone()));
    }
    Ok(states)
}

