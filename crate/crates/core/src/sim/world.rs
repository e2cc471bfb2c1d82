use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{SimError, WorldConfig};
use crate::kernel::{Action, Atom, AtomId, Goal, Literal, State};
use crate::lang::{ground, DomainDescription, Resolution, TransitionSystem};
use crate::planner::{plan, plan_joint, ExoSchedule, Plan, PlanConfig, PlanError, PlanOutcome};

/// Node budget for one planning call inside an episode.
pub const EPISODE_NODE_BUDGET: usize = 300_000;

/// Where an item currently is.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemLoc {
    On(String),
    Held(String),
}

/// Readable view of a world state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub agent_at: BTreeMap<String, String>,
    pub items: BTreeMap<String, ItemLoc>,
    pub opened: BTreeSet<String>,
    pub switched_on: BTreeSet<String>,
}

impl Snapshot {
    pub fn held_by(&self, agent: &str) -> BTreeSet<String> {
        self.items
            .iter()
            .filter(|(_, l)| matches!(l, ItemLoc::Held(a) if a == agent))
            .map(|(i, _)| i.clone())
            .collect()
    }

    pub fn holder(&self, item: &str) -> Option<&str> {
        match self.items.get(item) {
            Some(ItemLoc::Held(a)) => Some(a),
            _ => None,
        }
    }

    pub fn support(&self, item: &str) -> Option<&str> {
        match self.items.get(item) {
            Some(ItemLoc::On(s)) => Some(s),
            _ => None,
        }
    }

    /// Whether a goal literal holds in this view.
    pub fn holds(&self, lit: &Literal) -> bool {
        let a = &lit.atom;
        let v = match (a.name.as_str(), a.args.as_slice()) {
            ("on", [o, s]) => self.support(o) == Some(s.as_str()),
            ("holding", [ag, o]) => self.holder(o) == Some(ag.as_str()),
            ("at*", [ag, p]) => self.agent_at.get(ag) == Some(p),
            ("opened", [e]) => self.opened.contains(e),
            ("switched_on", [e]) => self.switched_on.contains(e),
            _ => false,
        };
        v == lit.positive
    }
}

/// Result of an agent's proposal in one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "reason")]
pub enum Outcome {
    Ok,
    Noop,
    Conflict,
    NotExecutable(String),
}

impl Outcome {
    pub fn failed(&self) -> bool {
        matches!(self, Outcome::Conflict | Outcome::NotExecutable(_))
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: State,
    /// One outcome per proposal, in team order.
    pub outcomes: Vec<Outcome>,
    /// Simultaneous grabs of one item in this step.
    pub grab_conflicts: usize,
}

/// What an agent wants planned.
#[derive(Clone, Debug)]
pub struct PlanRequest<'a> {
    pub actor: &'a str,
    pub current: Option<Goal>,
    pub anticipated: Option<Goal>,
    pub exo: ExoSchedule,
    pub preferred_regions: &'a [String],
    pub max_horizon: usize,
}

struct AtomIndex {
    at: Vec<(String, String, AtomId)>,
    on: Vec<(String, String, AtomId)>,
    holding: Vec<(String, String, AtomId)>,
    opened: Vec<(String, AtomId)>,
    switched: Vec<(String, AtomId)>,
}

/// The household for one team: the full fine-resolution system plus a
/// cache of groundings restricted to the objects a plan needs.
pub struct World {
    config: Arc<WorldConfig>,
    domain: DomainDescription,
    ts: Arc<TransitionSystem>,
    team: Vec<String>,
    index: AtomIndex,
    dist: BTreeMap<String, BTreeMap<String, usize>>,
    cache: Mutex<FxHashMap<BTreeSet<String>, Arc<TransitionSystem>>>,
    pub node_budget: usize,
}

impl World {
    /// Builds the world for the human plus `robots` (in priority order).
    pub fn new(config: Arc<WorldConfig>, domain_text: &str, robots: &[String]) -> Result<Self, SimError> {
        let domain = config.build_domain(domain_text, robots)?;
        let ts = Arc::new(ground(&domain, Resolution::Fine)?);
        let mut team = vec![config.human.clone()];
        team.extend(robots.iter().cloned());
        let mut index = AtomIndex {
            at: Vec::new(),
            on: Vec::new(),
            holding: Vec::new(),
            opened: Vec::new(),
            switched: Vec::new(),
        };
        for (id, atom, _) in ts.universe().iter() {
            match (atom.name.as_str(), atom.args.as_slice()) {
                ("at*", [a, p]) => index.at.push((a.clone(), p.clone(), id)),
                ("on", [o, s]) => index.on.push((o.clone(), s.clone(), id)),
                ("holding", [a, o]) => index.holding.push((a.clone(), o.clone(), id)),
                ("opened", [e]) => index.opened.push((e.clone(), id)),
                ("switched_on", [e]) => index.switched.push((e.clone(), id)),
                _ => {}
            }
        }
        let dist = config
            .places
            .keys()
            .map(|p| (p.clone(), config.distances_from(p)))
            .collect();
        Ok(World {
            config,
            domain,
            ts,
            team,
            index,
            dist,
            cache: Mutex::new(FxHashMap::default()),
            node_budget: EPISODE_NODE_BUDGET,
        })
    }

    pub fn config(&self) -> &Arc<WorldConfig> {
        &self.config
    }

    pub fn system(&self) -> &Arc<TransitionSystem> {
        &self.ts
    }

    pub fn domain(&self) -> &DomainDescription {
        &self.domain
    }

    /// Agents in priority order, human first.
    pub fn team(&self) -> &[String] {
        &self.team
    }

    pub fn distance(&self, a: &str, b: &str) -> usize {
        self.dist
            .get(a)
            .and_then(|m| m.get(b))
            .copied()
            .unwrap_or(usize::MAX / 4)
    }

    /// Seeded starting state. Draws are made for every robot in the
    /// scenario, so a trial's human and first robots start in the same
    /// places whatever the team size.
    pub fn initial_state(&self, seed: u64) -> Result<State, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1417);
        let mut atoms = Vec::new();
        for (item, spec) in &self.config.items {
            let support = if !spec.alternatives.is_empty() && rng.gen_bool(0.35) {
                &spec.alternatives[rng.gen_range(0..spec.alternatives.len())]
            } else {
                &spec.default
            };
            atoms.push(Atom::new("on", &[item, support]));
        }
        let starts = &self.config.start;
        let h = &starts.human[rng.gen_range(0..starts.human.len())];
        atoms.push(Atom::new("at*", &[&self.config.human, h]));
        for r in &self.config.robots {
            let p = &starts.robots[rng.gen_range(0..starts.robots.len())];
            if self.team.contains(r) {
                atoms.push(Atom::new("at*", &[r, p]));
            }
        }
        Ok(self.ts.state_from(&atoms, false)?)
    }

    pub fn snapshot(&self, state: &State) -> Snapshot {
        let mut s = Snapshot::default();
        for (a, p, id) in &self.index.at {
            if state.get(*id) {
                s.agent_at.insert(a.clone(), p.clone());
            }
        }
        for (o, sup, id) in &self.index.on {
            if state.get(*id) {
                s.items.insert(o.clone(), ItemLoc::On(sup.clone()));
            }
        }
        for (a, o, id) in &self.index.holding {
            if state.get(*id) {
                s.items.insert(o.clone(), ItemLoc::Held(a.clone()));
            }
        }
        for (e, id) in &self.index.opened {
            if state.get(*id) {
                s.opened.insert(e.clone());
            }
        }
        for (e, id) in &self.index.switched {
            if state.get(*id) {
                s.switched_on.insert(e.clone());
            }
        }
        s
    }

    /// Applies one proposal per team member (in team order; `None` is a
    /// noop). Inexecutable proposals fail; among conflicting executable
    /// proposals the earlier agent wins.
    pub fn step_world(&self, state: &State, proposals: &[Option<Action>]) -> Result<StepResult, SimError> {
        let bits = state.bits();
        let mut outcomes = vec![Outcome::Noop; proposals.len()];
        let mut claimed: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut survivors: Vec<(usize, usize)> = Vec::new();
        let mut grab_conflicts = 0;
        for (i, p) in proposals.iter().enumerate() {
            let Some(action) = p else { continue };
            let Some(id) = self.ts.action_id(action) else {
                outcomes[i] = Outcome::NotExecutable(format!("unknown action {action}"));
                continue;
            };
            if let Some(cond) = self.ts.blocking_condition(bits, id) {
                outcomes[i] = Outcome::NotExecutable(cond.to_string());
                continue;
            }
            if let Some(key) = contested(action) {
                if claimed.contains_key(&key) {
                    if key.0 == "grab" {
                        grab_conflicts += 1;
                    }
                    outcomes[i] = Outcome::Conflict;
                    continue;
                }
                claimed.insert(key, i);
            }
            survivors.push((i, id));
        }
        loop {
            let ids: Vec<usize> = survivors.iter().map(|(_, id)| *id).collect();
            match self.ts.successor_ids(bits, &ids, false) {
                Ok(next) => {
                    for (i, _) in &survivors {
                        outcomes[*i] = Outcome::Ok;
                    }
                    return Ok(StepResult {
                        state: self.ts.wrap_state(next),
                        outcomes,
                        grab_conflicts,
                    });
                }
                Err(_) => {
                    // Jointly inconsistent: the lowest-priority survivor yields.
                    let (i, _) = survivors.pop().expect("an empty action set cannot fail");
                    outcomes[i] = Outcome::Conflict;
                }
            }
        }
    }

    /// Restricted system over the places, regions, agents and the given
    /// items and appliances.
    pub fn restricted(&self, objects: &BTreeSet<String>) -> Result<Arc<TransitionSystem>, SimError> {
        if let Some(ts) = self.cache.lock().expect("cache lock").get(objects) {
            return Ok(ts.clone());
        }
        let mut keep: BTreeSet<String> = objects.clone();
        keep.extend(self.config.regions.iter().cloned());
        keep.extend(self.config.places.keys().cloned());
        keep.extend(self.team.iter().cloned());
        let ts = Arc::new(ground(&self.domain.restrict(&keep), Resolution::Fine)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(objects.clone(), ts.clone());
        Ok(ts)
    }

    /// Items and appliances a planning request needs.
    fn relevant_objects(&self, snap: &Snapshot, req: &PlanRequest) -> BTreeSet<String> {
        let mut rel = BTreeSet::new();
        let goals = req.current.iter().chain(req.anticipated.iter());
        for g in goals {
            for c in g.conjuncts() {
                rel.extend(c.atom.args.iter().filter(|a| self.is_thing(a)).cloned());
            }
        }
        rel.extend(snap.held_by(req.actor));
        for actions in req.exo.values() {
            for a in actions {
                rel.extend(a.args.iter().filter(|x| self.is_thing(x)).cloned());
            }
        }
        // Containers holding relevant items must be openable.
        let items: Vec<String> = rel.iter().filter(|o| self.config.items.contains_key(*o)).cloned().collect();
        for i in items {
            if let Some(s) = snap.support(&i) {
                if self.config.appliances.contains_key(s) {
                    rel.insert(s.to_string());
                }
            }
        }
        rel
    }

    fn is_thing(&self, o: &str) -> bool {
        self.config.items.contains_key(o) || self.config.appliances.contains_key(o)
    }

    /// Candidate actions of `actor` in `sys`: puts of goal items only onto
    /// their goal supports. Puts are tried first, then the other object
    /// actions, then moves (into preferred regions first), so among
    /// equal-length plans the one that delivers items soonest wins.
    fn candidates(&self, sys: &TransitionSystem, req: &PlanRequest) -> Vec<Action> {
        let mut targets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for g in req.current.iter().chain(req.anticipated.iter()) {
            for c in g.conjuncts() {
                if c.positive && c.atom.name == "on" {
                    targets.entry(&c.atom.args[0]).or_default().insert(&c.atom.args[1]);
                }
            }
        }
        let mut out: Vec<(usize, Action)> = sys
            .actions_of(req.actor)
            .iter()
            .map(|&id| sys.action(id))
            .filter(|a| {
                if a.name.trim_start_matches("exo_") != "put" {
                    return true;
                }
                match targets.get(a.args[1].as_str()) {
                    Some(t) => t.contains(a.args[2].as_str()),
                    None => true,
                }
            })
            .map(|a| {
                let rank = if a.name.ends_with("move*") {
                    2 + self
                        .config
                        .region_of(&a.args[1])
                        .and_then(|r| req.preferred_regions.iter().position(|p| p == r))
                        .unwrap_or(req.preferred_regions.len())
                } else if a.name.ends_with("put") {
                    0
                } else {
                    1
                };
                (rank, a.clone())
            })
            .collect();
        out.sort_by_key(|(r, _)| *r);
        out.into_iter().map(|(_, a)| a).collect()
    }

    /// Plans for `req` over a grounding restricted to the relevant objects.
    /// Running out of horizon or node budget yields `None`.
    pub fn plan_for(&self, state: &State, req: &PlanRequest) -> Result<Option<Plan>, SimError> {
        let snap = self.snapshot(state);
        let current = req.current.as_ref().filter(|g| !g.conjuncts().iter().all(|c| snap.holds(c)));
        let anticipated = req
            .anticipated
            .as_ref()
            .filter(|g| !g.conjuncts().iter().all(|c| snap.holds(c)));
        if current.is_none() && anticipated.is_none() {
            return Ok(None);
        }
        let sys = self.restricted(&self.relevant_objects(&snap, req))?;
        let local = sys.close_bits(&state.project(sys.universe()))?;
        let cfg = PlanConfig {
            max_horizon: req.max_horizon,
            node_budget: self.node_budget,
            actor: Some(req.actor.to_string()),
            candidates: Some(self.candidates(&sys, req)),
        };
        let outcome = match (current, anticipated) {
            (Some(c), Some(a)) => plan_joint(&sys, &local, c, a, &cfg, &req.exo),
            (Some(g), None) | (None, Some(g)) => plan(&sys, &local, g, &cfg, &req.exo),
            (None, None) => unreachable!(),
        };
        match outcome {
            Ok(PlanOutcome::Found(p)) => Ok(Some(p)),
            Ok(PlanOutcome::NoPlan) | Err(PlanError::Budget(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Checks that the agent part of `steps` still runs from `state` on the
    /// full system and ends with `goal` satisfied.
    pub fn plan_still_valid(&self, state: &State, steps: &[crate::planner::PlanStep], goal: &Goal) -> bool {
        let mut bits = state.bits().clone();
        for step in steps {
            let mut ids = Vec::new();
            if let Some(a) = &step.action {
                match self.ts.action_id(a) {
                    Some(id) if self.ts.is_executable(&bits, id) => ids.push(id),
                    _ => return false,
                }
            }
            let own = ids.clone();
            for e in &step.expected_exo {
                if let Some(id) = self.ts.action_id(e) {
                    if self.ts.is_executable(&bits, id) {
                        ids.push(id);
                    }
                }
            }
            bits = match self.ts.successor_ids(&bits, &ids, false) {
                Ok(b) => b,
                Err(_) => match self.ts.successor_ids(&bits, &own, false) {
                    Ok(b) => b,
                    Err(_) => return false,
                },
            };
        }
        let end = self.ts.wrap_state(bits);
        let snap = self.snapshot(&end);
        goal.conjuncts().iter().all(|c| snap.holds(c))
    }
}

/// Resource two agents cannot act on in the same step.
fn contested(action: &Action) -> Option<(String, String)> {
    let base = action.name.trim_start_matches("exo_");
    match base {
        "grab" => Some(("grab".into(), action.args.get(1)?.clone())),
        "open" | "close" | "switch_on" | "switch_off" => Some(("appliance".into(), action.args.get(1)?.clone())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(robots: &[&str]) -> World {
        let robots: Vec<String> = robots.iter().map(|s| s.to_string()).collect();
        World::new(Arc::new(WorldConfig::shipped()), crate::data::HOUSE_DOMAIN, &robots).unwrap()
    }

    fn act(s: &str) -> Option<Action> {
        Some(s.parse().unwrap())
    }

    #[test]
    fn initial_state_is_seeded_and_legal() {
        let w = world(&["robot1"]);
        let a = w.initial_state(7).unwrap();
        let b = w.initial_state(7).unwrap();
        assert_eq!(a, b);
        assert!(w.system().constraints().first_violation(a.bits()).is_none());
        let snap = w.snapshot(&a);
        assert_eq!(snap.items.len(), 15);
        assert_eq!(snap.agent_at.len(), 2);
    }

    #[test]
    fn all_noop_leaves_the_state_unchanged() {
        let w = world(&["robot1"]);
        let s = w.initial_state(1).unwrap();
        let r = w.step_world(&s, &[None, None]).unwrap();
        assert_eq!(r.state, s);
        assert_eq!(r.outcomes, vec![Outcome::Noop, Outcome::Noop]);
    }

    #[test]
    fn simultaneous_grab_goes_to_the_human() {
        let w = world(&["robot1"]);
        let s = w
            .system()
            .state_from(
                &[
                    "at*(human, kitchen_counter)".parse::<Atom>().unwrap(),
                    "at*(robot1, kitchen_counter)".parse().unwrap(),
                    "on(cupcake, kitchen_counter)".parse().unwrap(),
                ],
                false,
            )
            .unwrap();
        let r = w
            .step_world(&s, &[act("exo_grab(human, cupcake)"), act("grab(robot1, cupcake)")])
            .unwrap();
        assert_eq!(r.outcomes, vec![Outcome::Ok, Outcome::Conflict]);
        assert_eq!(r.grab_conflicts, 1);
        assert_eq!(w.snapshot(&r.state).holder("cupcake"), Some("human"));
    }

    #[test]
    fn grabbing_from_elsewhere_is_not_executable() {
        let w = world(&["robot1"]);
        let s = w
            .system()
            .state_from(
                &[
                    "at*(human, bed)".parse::<Atom>().unwrap(),
                    "at*(robot1, sofa)".parse().unwrap(),
                    "on(eggs, kitchen_table)".parse().unwrap(),
                ],
                false,
            )
            .unwrap();
        let r = w.step_world(&s, &[None, act("grab(robot1, eggs)")]).unwrap();
        assert!(matches!(&r.outcomes[1], Outcome::NotExecutable(c) if c.contains("at*(robot1, sofa)")));
        assert_eq!(r.state, s);
    }
}
