use super::{HumanProfile, Outcome, PlanRequest, SimError, Snapshot, World};
use crate::kernel::{Action, Atom, Goal, Literal, State};
use crate::planner::{ExoSchedule, PlanStep};

/// The scripted human: plans for the current task alone, without any model
/// of its teammates, and follows the plan until the world diverges from it.
#[derive(Clone, Debug)]
pub struct ScriptedHuman {
    pub name: String,
    pub profile: HumanProfile,
    pub horizon: usize,
    cached: Option<(Goal, Vec<PlanStep>)>,
    acted_last: bool,
}

impl ScriptedHuman {
    pub fn new(name: impl Into<String>, profile: HumanProfile, horizon: usize) -> Self {
        ScriptedHuman {
            name: name.into(),
            profile,
            horizon,
            cached: None,
            acted_last: false,
        }
    }

    /// Swaps the behaviour profile; the current plan is dropped.
    pub fn set_profile(&mut self, profile: HumanProfile) {
        self.profile = profile;
        self.cached = None;
    }

    /// The part of `task` this human works on: conjuncts over items that a
    /// teammate is carrying are left to that teammate. A tidy human also
    /// wants the containers it uses closed again.
    pub fn goal_for(&self, world: &World, snap: &Snapshot, task: &Goal) -> Option<Goal> {
        let goal = task.filter(|c| !held_by_other(snap, &self.name, c))?;
        if !self.profile.tidy {
            return Some(goal);
        }
        let cfg = world.config();
        let mut lits: Vec<Literal> = goal.conjuncts().iter().cloned().collect();
        for c in goal.conjuncts() {
            for a in &c.atom.args {
                let home = cfg.items.get(a).map(|i| i.default.as_str());
                for e in [Some(a.as_str()), home].into_iter().flatten() {
                    if cfg.appliances.get(e).is_some_and(|s| s.container) {
                        lits.push(Literal::neg(Atom::new("opened", &[e])));
                    }
                }
            }
        }
        Goal::new(goal.label(), lits).ok()
    }

    /// The next action for the current task (`None` = noop).
    pub fn act(&mut self, world: &World, state: &State, task: Option<&Goal>) -> Result<Option<Action>, SimError> {
        let Some(task) = task else {
            self.cached = None;
            return Ok(None);
        };
        if self.profile.pause_after_action && self.acted_last {
            return Ok(None);
        }
        let snap = world.snapshot(state);
        let Some(goal) = self.goal_for(world, &snap, task) else {
            return Ok(None);
        };
        if goal.conjuncts().iter().all(|c| snap.holds(c)) {
            self.cached = None;
            return Ok(None);
        }
        let reuse = match &self.cached {
            Some((g, steps)) => *g == goal && !steps.is_empty() && world.plan_still_valid(state, steps, &goal),
            None => false,
        };
        if !reuse {
            let req = PlanRequest {
                actor: &self.name,
                current: Some(goal.clone()),
                anticipated: None,
                exo: ExoSchedule::new(),
                preferred_regions: &self.profile.preferred_regions,
                max_horizon: self.horizon,
            };
            self.cached = world.plan_for(state, &req)?.map(|p| (goal, p.steps));
        }
        let Some((_, steps)) = &mut self.cached else {
            return Ok(None);
        };
        if steps.is_empty() {
            return Ok(None);
        }
        Ok(steps.remove(0).action)
    }

    /// Records the outcome of this step's proposal.
    pub fn observe(&mut self, outcome: &Outcome) {
        self.acted_last = matches!(outcome, Outcome::Ok);
        if outcome.failed() {
            self.cached = None;
        }
    }
}

fn held_by_other(snap: &Snapshot, me: &str, lit: &Literal) -> bool {
    lit.atom.name == "on" && snap.holder(&lit.atom.args[0]).is_some_and(|h| h != me)
}
