use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adhoc::{AdhocAgent, AnticipationRecord, ModelEvent, PolicyConfig, StepEnv};
use super::{fnv1a, Outcome, ScriptedHuman, SimError, TaskRoutine, World};
use crate::anticipation::{ContextFlags, Endpoint};
use crate::behavior::{extract_cues, family, BehaviorEnsemble, CueContext, TraceRecord, NONE};
use crate::kernel::{Action, State};

pub const DEFAULT_STEP_CAP: usize = 200;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Adhoc,
    ScriptedHuman,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentHandle {
    pub id: String,
    pub kind: AgentKind,
    pub policy: PolicyConfig,
}

impl AgentHandle {
    pub fn human(id: impl Into<String>) -> Self {
        AgentHandle {
            id: id.into(),
            kind: AgentKind::ScriptedHuman,
            policy: PolicyConfig::default(),
        }
    }

    pub fn adhoc(id: impl Into<String>, policy: PolicyConfig) -> Self {
        AgentHandle {
            id: id.into(),
            kind: AgentKind::Adhoc,
            policy,
        }
    }
}

/// Everything an episode needs besides the team, routine and seed.
pub struct EpisodeConfig<'a> {
    pub world: &'a World,
    pub endpoint: &'a Endpoint,
    /// Stored teammate models, keyed by id.
    pub library: &'a BTreeMap<String, BehaviorEnsemble>,
    pub flags: ContextFlags,
    pub human_profile: String,
    /// Switch the human to another profile at this step.
    pub profile_swap: Option<(usize, String)>,
    pub step_cap: usize,
    pub human_horizon: usize,
    pub episode_id: u64,
    /// Record the human's cues and actions.
    pub collect_traces: bool,
}

impl<'a> EpisodeConfig<'a> {
    pub fn new(
        world: &'a World,
        endpoint: &'a Endpoint,
        library: &'a BTreeMap<String, BehaviorEnsemble>,
        flags: ContextFlags,
    ) -> Self {
        EpisodeConfig {
            world,
            endpoint,
            library,
            flags,
            human_profile: "default".into(),
            profile_swap: None,
            step_cap: DEFAULT_STEP_CAP,
            human_horizon: 40,
            episode_id: 0,
            collect_traces: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub task: String,
    /// Proposals in team order; `None` is a noop.
    pub actions: Vec<Option<String>>,
    pub outcomes: Vec<Outcome>,
    /// Digest of the state after the step.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub team: Vec<String>,
    pub routine: Vec<String>,
    pub initial_digest: String,
    pub per_step: Vec<StepLog>,
    pub steps_taken: usize,
    pub wall_time: f64,
    /// Task labels with the number of steps taken when each was complete.
    pub tasks_completed: Vec<(String, usize)>,
    /// Simultaneous grabs of one item.
    pub conflicts: usize,
    /// The step cap was reached before the routine was done.
    pub failed: bool,
    pub traces: Vec<TraceRecord>,
    pub anticipations: Vec<(String, AnticipationRecord)>,
    pub model_events: Vec<(String, ModelEvent)>,
    pub llm_corrections: usize,
    pub llm_incidents: Vec<String>,
}

impl EpisodeLog {
    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.per_step {
            out.push_str(&serde_json::to_string(s).expect("step logs serialize"));
            out.push('\n');
        }
        out
    }
}

pub fn state_digest(world: &World, state: &State) -> String {
    format!("{:016x}", fnv1a(&format!("{:?}", world.snapshot(state))))
}

/// Runs one episode: tasks are dispatched one at a time, every agent
/// proposes an action each step, and the episode ends when the routine is
/// done or the step cap is reached. The team must list the world's agents
/// in order, the scripted human first.
pub fn run_episode(
    cfg: &EpisodeConfig,
    team: &[AgentHandle],
    routine: &TaskRoutine,
    seed: u64,
) -> Result<EpisodeLog, SimError> {
    let started = Instant::now();
    let world = cfg.world;
    if team.is_empty() || routine.tasks.is_empty() {
        return Err(SimError::Precondition("team and routine must be non-empty".into()));
    }
    let ids: Vec<&str> = team.iter().map(|a| a.id.as_str()).collect();
    if ids != world.team().iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(SimError::Precondition(format!(
            "team {ids:?} does not match the world's agents {:?}",
            world.team()
        )));
    }
    if team[0].kind != AgentKind::ScriptedHuman || team[1..].iter().any(|a| a.kind != AgentKind::Adhoc) {
        return Err(SimError::Precondition("the team is one scripted human followed by ad hoc agents".into()));
    }
    let config = world.config();
    let goals = routine
        .tasks
        .iter()
        .map(|t| config.task_goal(t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut human = ScriptedHuman::new(&team[0].id, config.profile(&cfg.human_profile)?, cfg.human_horizon);
    let mut agents: Vec<AdhocAgent> = team[1..]
        .iter()
        .map(|h| AdhocAgent::new(&h.id, h.policy.clone(), cfg.library))
        .collect();
    let mut state = world.initial_state(seed)?;
    let mut log = EpisodeLog {
        team: world.team().to_vec(),
        routine: routine.tasks.clone(),
        initial_digest: state_digest(world, &state),
        per_step: Vec::new(),
        steps_taken: 0,
        wall_time: 0.0,
        tasks_completed: Vec::new(),
        conflicts: 0,
        failed: false,
        traces: Vec::new(),
        anticipations: Vec::new(),
        model_events: Vec::new(),
        llm_corrections: 0,
        llm_incidents: Vec::new(),
    };
    let mut idx = 0;
    let mut human_prev = [NONE.to_string(), NONE.to_string()];
    let mut last_joint: Vec<Option<Action>> = vec![None; team.len()];
    let needs_cues = cfg.collect_traces || agents.iter().any(|a| a.policy.behavior_models);
    for step in 0..cfg.step_cap {
        let snap = world.snapshot(&state);
        while idx < goals.len() && goals[idx].conjuncts().iter().all(|c| snap.holds(c)) {
            log.tasks_completed.push((routine.tasks[idx].clone(), step));
            idx += 1;
        }
        if idx == goals.len() {
            break;
        }
        if let Some((at, profile)) = &cfg.profile_swap {
            if *at == step {
                human.set_profile(config.profile(profile)?);
            }
        }
        let label = routine.tasks[idx].as_str();
        let goal = &goals[idx];
        let done = &routine.tasks[..idx];
        let cues = needs_cues.then(|| {
            let ctx = CueContext {
                world,
                teammate: &team[0].id,
                task: Some((label, goal)),
                previous_task: done.last().map(String::as_str),
                flags: &cfg.flags,
                prev: human_prev.clone(),
            };
            extract_cues(&ctx, &state)
        });
        let mut proposals = Vec::with_capacity(team.len());
        proposals.push(human.act(world, &state, Some(goal))?);
        for agent in &mut agents {
            let env = StepEnv {
                world,
                endpoint: cfg.endpoint,
                library: cfg.library,
                flags: &cfg.flags,
                step,
                seed,
                task: label,
                goal,
                done,
                human: &team[0].id,
                human_prev: &human_prev,
                last_joint: &last_joint,
            };
            proposals.push(agent.act(&env, &state)?);
        }
        let result = world.step_world(&state, &proposals)?;
        log.conflicts += result.grab_conflicts;
        let human_family = match result.outcomes[0] {
            Outcome::Ok => family(proposals[0].as_ref()),
            _ => "noop".to_string(),
        };
        if let Some(c) = &cues {
            if cfg.collect_traces {
                log.traces.push(TraceRecord {
                    episode: cfg.episode_id,
                    step,
                    agent: team[0].id.clone(),
                    cues: c.clone(),
                    observed: human_family.clone(),
                });
            }
        }
        human.observe(&result.outcomes[0]);
        for (i, agent) in agents.iter_mut().enumerate() {
            let own = &result.outcomes[i + 1];
            match &cues {
                Some(c) => agent.observe(step, cfg.library, c, &human_family, own),
                None => agent.observe(step, cfg.library, &Default::default(), &human_family, own),
            }
        }
        human_prev = [human_family, std::mem::take(&mut human_prev[0])];
        log.per_step.push(StepLog {
            step,
            task: label.to_string(),
            actions: proposals.iter().map(|a| a.as_ref().map(ToString::to_string)).collect(),
            outcomes: result.outcomes,
            digest: state_digest(world, &result.state),
        });
        last_joint = proposals;
        state = result.state;
    }
    let steps = log.per_step.len();
    let snap = world.snapshot(&state);
    while idx < goals.len() && goals[idx].conjuncts().iter().all(|c| snap.holds(c)) {
        log.tasks_completed.push((routine.tasks[idx].clone(), steps));
        idx += 1;
    }
    log.failed = idx < goals.len();
    log.steps_taken = steps;
    for a in &agents {
        log.anticipations.extend(a.anticipations.iter().map(|r| (a.id.clone(), r.clone())));
        log.model_events.extend(a.model_events.iter().map(|e| (a.id.clone(), e.clone())));
        if let Some(actor) = a.llm_actor() {
            log.llm_corrections += actor.corrections;
            log.llm_incidents.extend(actor.incidents.iter().cloned());
        }
    }
    log.wall_time = started.elapsed().as_secs_f64();
    Ok(log)
}
