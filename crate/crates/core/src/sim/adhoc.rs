use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Outcome, PlanRequest, SimError, Snapshot, World};
use crate::anticipation::{anticipate, AnticipationOptions, ContextFlags, Endpoint, PromptSections};
use crate::behavior::{
    family, observe_and_maybe_revise, predict, AgreementTracker, BehaviorEnsemble, CueContext, CueVector, Revision,
    DEFAULT_THETA, DEFAULT_WINDOW,
};
use crate::harness::LlmActor;
use crate::kernel::{Action, Goal, Literal, State};
use crate::planner::{ExoSchedule, PlanStep};

/// Extra distance charged per object already given to a robot when the
/// robots split a goal between them.
const LOAD_PENALTY: usize = 2;

/// Which components an ad hoc agent uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub anticipation: bool,
    pub behavior_models: bool,
    /// Choose actions by querying the completion endpoint instead of planning.
    pub llm_actor: bool,
    pub sections: PromptSections,
    pub validator: bool,
    /// Prediction depth for teammate actions.
    pub k: usize,
    pub theta: f64,
    pub window: usize,
    pub horizon: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            anticipation: true,
            behavior_models: true,
            llm_actor: false,
            sections: PromptSections::full(),
            validator: true,
            k: 3,
            theta: DEFAULT_THETA,
            window: DEFAULT_WINDOW,
            horizon: 40,
        }
    }
}

/// What an ad hoc agent sees at one step besides the state.
pub struct StepEnv<'a> {
    pub world: &'a World,
    pub endpoint: &'a Endpoint,
    pub library: &'a BTreeMap<String, BehaviorEnsemble>,
    pub flags: &'a ContextFlags,
    pub step: usize,
    pub seed: u64,
    pub task: &'a str,
    pub goal: &'a Goal,
    pub done: &'a [String],
    pub human: &'a str,
    /// Families of the human's last two actions, most recent first.
    pub human_prev: &'a [String; 2],
    /// Joint action of the previous step, in team order.
    pub last_joint: &'a [Option<Action>],
}

impl StepEnv<'_> {
    fn previous_task(&self) -> Option<&str> {
        self.done.last().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnticipationRecord {
    pub step: usize,
    pub current: String,
    pub next: Option<String>,
    pub routine: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEvent {
    pub step: usize,
    /// `switch:<id>` or `relearn`.
    pub event: String,
}

#[derive(Clone, Debug)]
struct CachedPlan {
    current: Option<Goal>,
    anticipated: Option<Goal>,
    target: Goal,
    steps: Vec<PlanStep>,
}

/// An ad hoc robot: anticipates the next task, predicts the human with a
/// behavior model, and plans jointly for the current and anticipated task.
pub struct AdhocAgent {
    pub id: String,
    pub policy: PolicyConfig,
    current_task: Option<String>,
    anticipated: Option<String>,
    cached: Option<CachedPlan>,
    /// Objects left to the human for the rest of the current task.
    delegated: BTreeSet<String>,
    last_action: Option<Action>,
    model: Option<(String, BehaviorEnsemble)>,
    tracker: AgreementTracker,
    pending_prediction: Option<String>,
    recent: VecDeque<(CueVector, String)>,
    actor: Option<LlmActor>,
    pub anticipations: Vec<AnticipationRecord>,
    pub model_events: Vec<ModelEvent>,
}

impl AdhocAgent {
    /// The initial teammate model is the library entry `default` when
    /// present, else the first entry.
    pub fn new(id: impl Into<String>, policy: PolicyConfig, library: &BTreeMap<String, BehaviorEnsemble>) -> Self {
        let model = if policy.behavior_models {
            library
                .get_key_value("default")
                .or_else(|| library.iter().next())
                .map(|(k, m)| (k.clone(), m.clone()))
        } else {
            None
        };
        let active = model.as_ref().map_or("none".to_string(), |(k, _)| k.clone());
        AdhocAgent {
            id: id.into(),
            tracker: AgreementTracker::new(active, policy.window, policy.theta),
            actor: policy.llm_actor.then(LlmActor::default),
            policy,
            current_task: None,
            anticipated: None,
            cached: None,
            delegated: BTreeSet::new(),
            last_action: None,
            model,
            pending_prediction: None,
            recent: VecDeque::new(),
            anticipations: Vec::new(),
            model_events: Vec::new(),
        }
    }

    pub fn anticipated(&self) -> Option<&str> {
        self.anticipated.as_deref()
    }

    pub fn active_model(&self) -> Option<&str> {
        self.model.as_ref().map(|(k, _)| k.as_str())
    }

    pub fn llm_actor(&self) -> Option<&LlmActor> {
        self.actor.as_ref()
    }

    fn on_dispatch(&mut self, env: &StepEnv) {
        self.current_task = Some(env.task.to_string());
        self.cached = None;
        self.anticipated = None;
        self.delegated.clear();
        if !self.policy.anticipation {
            return;
        }
        let opts = AnticipationOptions {
            sections: self.policy.sections,
            validator: self.policy.validator,
            seed: env.seed,
        };
        let cfg = env.world.config();
        let mut rec = AnticipationRecord {
            step: env.step,
            current: env.task.to_string(),
            next: None,
            routine: Vec::new(),
            error: None,
        };
        match anticipate(cfg, env.endpoint, env.flags, env.done, Some(env.task), &opts) {
            Ok(a) => {
                rec.routine = a.routine.tasks.clone();
                rec.next = a.next.clone();
                // Labels outside the task library cannot be planned for.
                self.anticipated = a.next.filter(|t| cfg.tasks.contains_key(t));
            }
            Err(e) => {
                log::info!("{}: anticipation failed at step {}: {e}", self.id, env.step);
                rec.error = Some(e.to_string());
            }
        }
        self.anticipations.push(rec);
    }

    /// The next action (`None` = noop).
    pub fn act(&mut self, env: &StepEnv, state: &State) -> Result<Option<Action>, SimError> {
        if self.current_task.as_deref() != Some(env.task) {
            self.on_dispatch(env);
        }
        self.pending_prediction = None;
        self.last_action = None;
        if let Some(actor) = &mut self.actor {
            return Ok(actor.step(env, state, &self.id));
        }
        let world = env.world;
        let snap = world.snapshot(state);
        let exo = match &self.model {
            Some((_, ens)) => {
                let ctx = CueContext {
                    world,
                    teammate: env.human,
                    task: Some((env.task, env.goal)),
                    previous_task: env.previous_task(),
                    flags: env.flags,
                    prev: env.human_prev.clone(),
                };
                let predicted = predict(ens, &ctx, self.policy.k, state);
                self.pending_prediction = Some(family(predicted.first().and_then(Option::as_ref)));
                let mut exo = ExoSchedule::new();
                for (i, a) in predicted.into_iter().enumerate() {
                    let Some(a) = a else { continue };
                    if a.name != "exo_move*" && snap.holder(&a.args[1]) != Some(self.id.as_str()) {
                        self.delegated.insert(a.args[1].clone());
                    }
                    exo.insert(i, vec![a]);
                }
                exo
            }
            None => ExoSchedule::new(),
        };
        let anticipated_goal = match &self.anticipated {
            Some(t) if t != env.task => {
                let items = goal_objects(env.goal);
                world
                    .config()
                    .task_goal(t)?
                    .filter(|c| !c.atom.args.iter().any(|a| items.contains(a)))
            }
            _ => None,
        };
        let owners = if self.policy.behavior_models {
            split_among_robots(world, &snap, env.goal, anticipated_goal.as_ref())
        } else {
            BTreeMap::new()
        };
        let keep = |c: &Literal| self.keeps(&snap, &self.delegated, &owners, c);
        let current = env.goal.filter(keep);
        let anticipated = anticipated_goal.and_then(|g| g.filter(keep));
        if current.is_none() && anticipated.is_none() {
            self.cached = None;
            return Ok(None);
        }
        let reuse = self.cached.as_ref().is_some_and(|c| {
            c.current == current
                && c.anticipated == anticipated
                && !c.steps.is_empty()
                && world.plan_still_valid(state, &c.steps, &c.target)
        });
        if !reuse {
            self.cached = None;
            let req = PlanRequest {
                actor: &self.id,
                current: current.clone(),
                anticipated: anticipated.clone(),
                exo,
                preferred_regions: &[],
                max_horizon: self.policy.horizon,
            };
            if let Some(plan) = world.plan_for(state, &req)? {
                let achieved = |g: &Goal| plan.achieves.iter().any(|(l, _)| l == g.label());
                let target = match (&current, &anticipated) {
                    (Some(c), Some(a)) if achieved(a) => c.join(a),
                    (Some(c), _) => c.clone(),
                    (None, Some(a)) => a.clone(),
                    (None, None) => unreachable!(),
                };
                self.cached = Some(CachedPlan {
                    current,
                    anticipated,
                    target,
                    steps: plan.steps,
                });
            }
        }
        let Some(c) = &mut self.cached else { return Ok(None) };
        if c.steps.is_empty() {
            return Ok(None);
        }
        self.last_action = c.steps.remove(0).action;
        Ok(self.last_action.clone())
    }

    /// Whether this agent should work on goal conjunct `c`.
    fn keeps(
        &self,
        snap: &Snapshot,
        delegated: &BTreeSet<String>,
        owners: &BTreeMap<String, String>,
        c: &Literal,
    ) -> bool {
        let Some(obj) = c.atom.args.first() else { return true };
        if c.atom.name == "on" && snap.holder(obj).is_some_and(|h| h != self.id) {
            return false;
        }
        if !c.positive {
            return true;
        }
        if delegated.contains(obj) && snap.holder(obj) != Some(self.id.as_str()) {
            return false;
        }
        owners.get(obj).is_none_or(|o| *o == self.id)
    }

    /// Called after each step with the human's cues at that step, the
    /// human's observed action family and this agent's own outcome. An item
    /// lost in a grab conflict is left to the other agent for the rest of
    /// the task.
    pub fn observe(
        &mut self,
        env_step: usize,
        library: &BTreeMap<String, BehaviorEnsemble>,
        human_cues: &CueVector,
        human_family: &str,
        own_outcome: &Outcome,
    ) {
        if own_outcome.failed() {
            self.cached = None;
        }
        if let (Outcome::Conflict, Some(a)) = (own_outcome, &self.last_action) {
            if a.name == "grab" {
                if let Some(item) = a.args.get(1) {
                    self.delegated.insert(item.clone());
                }
            }
        }
        if self.model.is_none() {
            return;
        }
        self.recent.push_back((human_cues.clone(), human_family.to_string()));
        while self.recent.len() > 3 * self.policy.window {
            self.recent.pop_front();
        }
        let Some(predicted) = self.pending_prediction.take() else { return };
        let recent: Vec<(CueVector, String)> = self.recent.iter().cloned().collect();
        match observe_and_maybe_revise(&mut self.tracker, library, &predicted, human_family, &recent) {
            Revision::Keep => {}
            Revision::Switch(id) => {
                if let Some(m) = library.get(&id) {
                    self.model = Some((id.clone(), m.clone()));
                }
                self.model_events.push(ModelEvent {
                    step: env_step,
                    event: format!("switch:{id}"),
                });
            }
            Revision::Relearn(m) => {
                self.tracker.active_model = "relearned".into();
                self.model = Some(("relearned".into(), *m));
                self.model_events.push(ModelEvent {
                    step: env_step,
                    event: "relearn".into(),
                });
            }
        }
    }

    /// Agreement between predicted and observed families over the window.
    pub fn agreement(&self) -> Option<f64> {
        self.tracker.agreement_rate()
    }
}

fn goal_objects(goal: &Goal) -> BTreeSet<String> {
    goal.conjuncts()
        .iter()
        .filter(|c| c.atom.name == "on")
        .filter_map(|c| c.atom.args.first().cloned())
        .collect()
}

/// Splits the open objects of the current and anticipated goals among the
/// robots: an object a robot carries stays with it; otherwise it goes to
/// the robot with the smallest distance plus load, ties in team order.
fn split_among_robots(
    world: &World,
    snap: &Snapshot,
    current: &Goal,
    anticipated: Option<&Goal>,
) -> BTreeMap<String, String> {
    let cfg = world.config();
    let robots: Vec<&String> = world.team().iter().skip(1).collect();
    let mut owners = BTreeMap::new();
    if robots.len() < 2 {
        return owners;
    }
    let mut load = vec![0usize; robots.len()];
    for goal in std::iter::once(current).chain(anticipated) {
        for c in goal.conjuncts().iter().filter(|c| c.positive && !snap.holds(c)) {
            let obj = &c.atom.args[0];
            if owners.contains_key(obj) {
                continue;
            }
            if let Some(h) = snap.holder(obj) {
                if let Some(i) = robots.iter().position(|r| *r == h) {
                    load[i] += 1;
                    owners.insert(obj.clone(), h.to_string());
                }
                continue;
            }
            let place = if cfg.appliances.contains_key(obj) {
                cfg.place_of(obj)
            } else {
                snap.support(obj).and_then(|s| cfg.place_of(s))
            };
            let Some(place) = place else { continue };
            let best = (0..robots.len())
                .min_by_key(|&i| {
                    let at = snap.agent_at.get(robots[i].as_str()).map_or("", String::as_str);
                    (world.distance(at, place) + LOAD_PENALTY * load[i], i)
                })
                .expect("at least two robots");
            load[best] += 1;
            owners.insert(obj.clone(), robots[best].clone());
        }
    }
    owners
}
