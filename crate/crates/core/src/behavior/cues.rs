use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::anticipation::ContextFlags;
use crate::kernel::{Goal, Literal, State};
use crate::sim::{Snapshot, World};

/// Label used for missing history and absent tasks.
pub const NONE: &str = "none";

/// Relational cues derived from the state and the teammate's task. They
/// stand in for the position/orientation rows of the attribute table,
/// which have no meaning in a discrete world.
pub const RELATIONS: [&str; 9] = [
    "item_here",
    "item_here_closed",
    "holding_goal_item",
    "at_target",
    "target_closed_here",
    "switch_here",
    "hands_full",
    "nothing_left",
    "open_container_here",
];

/// What an observer knows about one teammate at one step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CueVector {
    pub prev_action1: String,
    pub prev_action2: String,
    pub location: String,
    pub goal_objects: BTreeSet<String>,
    pub held_by_agent: BTreeSet<String>,
    pub held_by_others: BTreeSet<String>,
    pub current_task: String,
    pub previous_task: String,
    pub weekday: bool,
    pub going_to_office: bool,
    pub guests_expected: bool,
    /// Names from [`RELATIONS`] that hold.
    pub relations: BTreeSet<String>,
}

impl Default for CueVector {
    fn default() -> Self {
        CueVector {
            prev_action1: NONE.into(),
            prev_action2: NONE.into(),
            location: NONE.into(),
            goal_objects: BTreeSet::new(),
            held_by_agent: BTreeSet::new(),
            held_by_others: BTreeSet::new(),
            current_task: NONE.into(),
            previous_task: NONE.into(),
            weekday: false,
            going_to_office: false,
            guests_expected: false,
            relations: BTreeSet::new(),
        }
    }
}

impl CueVector {
    pub fn has(&self, relation: &str) -> bool {
        self.relations.contains(relation)
    }

    pub fn flag(&self, i: usize) -> bool {
        [self.weekday, self.going_to_office, self.guests_expected][i]
    }
}

/// Family label of an action: its name, or `noop`.
pub fn family(action: Option<&crate::kernel::Action>) -> String {
    action.map_or_else(|| "noop".to_string(), |a| a.name.clone())
}

/// Inputs to cue extraction besides the state.
#[derive(Clone)]
pub struct CueContext<'a> {
    pub world: &'a World,
    pub teammate: &'a str,
    /// Current task label and goal.
    pub task: Option<(&'a str, &'a Goal)>,
    pub previous_task: Option<&'a str>,
    pub flags: &'a ContextFlags,
    /// Families of the teammate's last two actions, most recent first.
    pub prev: [String; 2],
}

/// Task-relative view of the state used by cues and by argument grounding.
pub(crate) struct TaskView<'a> {
    pub snap: Snapshot,
    /// Unsatisfied goal conjuncts this teammate can still work on.
    pub open: Vec<&'a Literal>,
}

impl<'a> TaskView<'a> {
    pub fn new(world: &World, state: &State, teammate: &str, goal: Option<&'a Goal>) -> Self {
        let snap = world.snapshot(state);
        let open = goal
            .map(|g| {
                g.conjuncts()
                    .iter()
                    .filter(|c| !snap.holds(c))
                    .filter(|c| !(c.atom.name == "on" && snap.holder(&c.atom.args[0]).is_some_and(|h| h != teammate)))
                    .collect()
            })
            .unwrap_or_default();
        TaskView { snap, open }
    }

    /// (item, target support) for open placement conjuncts.
    pub fn placements(&self) -> impl Iterator<Item = (&str, &str)> {
        self.open
            .iter()
            .filter(|c| c.positive && c.atom.name == "on")
            .map(|c| (c.atom.args[0].as_str(), c.atom.args[1].as_str()))
    }

    pub fn switches(&self) -> impl Iterator<Item = &str> {
        self.open
            .iter()
            .filter(|c| c.positive && c.atom.name == "switched_on")
            .map(|c| c.atom.args[0].as_str())
    }

    /// Places the teammate would head for next.
    pub fn needed_places<'w>(&self, world: &'w World, teammate: &str) -> BTreeSet<&'w str> {
        let cfg = world.config();
        let mut out = BTreeSet::new();
        for (item, target) in self.placements() {
            let place = if self.snap.holder(item) == Some(teammate) {
                cfg.place_of(target)
            } else {
                self.snap.support(item).and_then(|s| cfg.place_of(s))
            };
            out.extend(place);
        }
        for e in self.switches() {
            out.extend(cfg.place_of(e));
        }
        out
    }
}

/// Deterministic cue extraction for `ctx.teammate` in `state`.
pub fn extract_cues(ctx: &CueContext, state: &State) -> CueVector {
    let world = ctx.world;
    let cfg = world.config();
    let me = ctx.teammate;
    let view = TaskView::new(world, state, me, ctx.task.map(|(_, g)| g));
    let snap = &view.snap;
    let here = snap.agent_at.get(me).cloned().unwrap_or_else(|| NONE.into());
    let is_here = |support: &str| cfg.place_of(support) == Some(here.as_str());
    let closed = |support: &str| cfg.appliances.get(support).is_some_and(|a| a.container) && !snap.opened.contains(support);
    let held = snap.held_by(me);
    let mut rel = BTreeSet::new();
    for (item, target) in view.placements() {
        match snap.holder(item) {
            Some(h) if h == me => {
                rel.insert("holding_goal_item");
                if is_here(target) {
                    rel.insert(if closed(target) { "target_closed_here" } else { "at_target" });
                }
            }
            Some(_) => {}
            None => {
                if let Some(s) = snap.support(item) {
                    if is_here(s) {
                        rel.insert(if closed(s) { "item_here_closed" } else { "item_here" });
                    }
                }
            }
        }
    }
    if view.switches().any(is_here) {
        rel.insert("switch_here");
    }
    if held.len() >= 2 {
        rel.insert("hands_full");
    }
    if ctx.task.is_some() && view.open.is_empty() {
        rel.insert("nothing_left");
    }
    if snap.opened.iter().any(|e| is_here(e)) {
        rel.insert("open_container_here");
    }
    let goal_objects = ctx
        .task
        .map(|(_, g)| {
            g.conjuncts()
                .iter()
                .flat_map(|c| c.atom.args.iter())
                .filter(|a| cfg.items.contains_key(*a))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    let held_by_others = snap
        .items
        .iter()
        .filter(|(_, l)| matches!(l, crate::sim::ItemLoc::Held(a) if a != me))
        .map(|(i, _)| i.clone())
        .collect();
    CueVector {
        prev_action1: ctx.prev[0].clone(),
        prev_action2: ctx.prev[1].clone(),
        location: here,
        goal_objects,
        held_by_agent: held,
        held_by_others,
        current_task: ctx.task.map_or(NONE, |(l, _)| l).to_string(),
        previous_task: ctx.previous_task.unwrap_or(NONE).to_string(),
        weekday: ctx.flags.weekday,
        going_to_office: ctx.flags.going_to_office,
        guests_expected: ctx.flags.guests_expected,
        relations: rel.into_iter().map(str::to_string).collect(),
    }
}

/// A one-hot test over a categorical cue field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cue {
    Prev1(String),
    Prev2(String),
    Location(String),
    GoalObject(String),
    Holds(String),
    OthersHold(String),
    CurrentTask(String),
    PreviousTask(String),
    Flag(usize),
    Relation(String),
}

/// A cue test, possibly negated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub cue: Cue,
    pub negated: bool,
}

impl Predicate {
    pub fn eval(&self, c: &CueVector) -> bool {
        let v = match &self.cue {
            Cue::Prev1(a) => c.prev_action1 == *a,
            Cue::Prev2(a) => c.prev_action2 == *a,
            Cue::Location(l) => c.location == *l,
            Cue::GoalObject(o) => c.goal_objects.contains(o),
            Cue::Holds(o) => c.held_by_agent.contains(o),
            Cue::OthersHold(o) => c.held_by_others.contains(o),
            Cue::CurrentTask(t) => c.current_task == *t,
            Cue::PreviousTask(t) => c.previous_task == *t,
            Cue::Flag(i) => c.flag(*i),
            Cue::Relation(r) => c.relations.contains(r),
        };
        v != self.negated
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        match &self.cue {
            Cue::Prev1(a) => write!(f, "prevAction1={a}"),
            Cue::Prev2(a) => write!(f, "prevAction2={a}"),
            Cue::Location(l) => write!(f, "location={l}"),
            Cue::GoalObject(o) => write!(f, "goalObjects∋{o}"),
            Cue::Holds(o) => write!(f, "heldByAgent∋{o}"),
            Cue::OthersHold(o) => write!(f, "heldByOthers∋{o}"),
            Cue::CurrentTask(t) => write!(f, "currentTask={t}"),
            Cue::PreviousTask(t) => write!(f, "previousTask={t}"),
            Cue::Flag(i) => write!(f, "{}", ["weekday", "going_to_office", "guests_expected"][*i]),
            Cue::Relation(r) => write!(f, "{r}"),
        }
    }
}

/// Every one-hot predicate (both polarities) over values seen in `cues`,
/// in a fixed order.
pub fn predicates_for<'a>(cues: impl IntoIterator<Item = &'a CueVector>) -> Vec<Predicate> {
    let mut set = BTreeSet::new();
    for c in cues {
        set.insert(Cue::Prev1(c.prev_action1.clone()));
        set.insert(Cue::Prev2(c.prev_action2.clone()));
        set.insert(Cue::Location(c.location.clone()));
        set.extend(c.goal_objects.iter().cloned().map(Cue::GoalObject));
        set.extend(c.held_by_agent.iter().cloned().map(Cue::Holds));
        set.extend(c.held_by_others.iter().cloned().map(Cue::OthersHold));
        set.insert(Cue::CurrentTask(c.current_task.clone()));
        set.insert(Cue::PreviousTask(c.previous_task.clone()));
        set.extend(c.relations.iter().cloned().map(Cue::Relation));
    }
    set.extend((0..3).map(Cue::Flag));
    set.extend(RELATIONS.iter().map(|r| Cue::Relation(r.to_string())));
    set.into_iter()
        .flat_map(|cue| {
            [
                Predicate {
                    cue: cue.clone(),
                    negated: false,
                },
                Predicate { cue, negated: true },
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernel::Atom;
    use crate::sim::WorldConfig;

    fn world() -> World {
        World::new(Arc::new(WorldConfig::shipped()), crate::data::HOUSE_DOMAIN, &["robot1".to_string()]).unwrap()
    }

    #[test]
    fn first_step_has_empty_history() {
        let w = world();
        let s = w.initial_state(0).unwrap();
        let flags = ContextFlags::new(true, false, false);
        let ctx = CueContext {
            world: &w,
            teammate: "human",
            task: None,
            previous_task: None,
            flags: &flags,
            prev: [NONE.into(), NONE.into()],
        };
        let c = extract_cues(&ctx, &s);
        assert_eq!(c.prev_action1, NONE);
        assert_eq!(c.prev_action2, NONE);
        assert_eq!((c.weekday, c.going_to_office, c.guests_expected), (true, false, false));
    }

    #[test]
    fn held_items_are_read_directly() {
        let w = world();
        let s = w
            .system()
            .state_from(
                &[
                    "at*(human, kitchen_table)".parse::<Atom>().unwrap(),
                    "at*(robot1, bed)".parse().unwrap(),
                    "holding(human, eggs)".parse().unwrap(),
                    "holding(human, plate)".parse().unwrap(),
                    "on(bread, kitchen_table)".parse().unwrap(),
                ],
                false,
            )
            .unwrap();
        let flags = ContextFlags::new(true, false, false);
        let goal = w.config().task_goal("prepare_breakfast").unwrap();
        let ctx = CueContext {
            world: &w,
            teammate: "human",
            task: Some(("prepare_breakfast", &goal)),
            previous_task: None,
            flags: &flags,
            prev: ["exo_grab".into(), "exo_move*".into()],
        };
        let c = extract_cues(&ctx, &s);
        assert_eq!(c.held_by_agent, ["eggs", "plate"].iter().map(|s| s.to_string()).collect());
        assert!(c.has("hands_full"));
        assert!(c.has("at_target"));
        assert!(c.has("holding_goal_item"));
        assert!(!c.has("item_here"));
    }

    #[test]
    fn predicates_come_in_both_polarities() {
        let c = CueVector::default();
        let preds = predicates_for([&c]);
        assert_eq!(preds.len() % 2, 0);
        for pair in preds.chunks(2) {
            assert_ne!(pair[0].eval(&c), pair[1].eval(&c));
        }
    }
}
