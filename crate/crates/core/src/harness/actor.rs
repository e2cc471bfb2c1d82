//! The LLM-as-actor baseline: the endpoint proposes the robot's next
//! low-level action directly, with feasibility feedback on bad proposals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::anticipation::{AnticipationError, RenderedPrompt};
use crate::kernel::{Action, Atom, Goal, State};
use crate::sim::{fnv1a, StepEnv, World};

pub const ACTIONS_HEADER: &str = "## Actions";
pub const RULES_HEADER: &str = "## Action Feasibility Rules";
pub const ADJACENCY_HEADER: &str = "## Adjacency";
pub const STATE_HEADER: &str = "## World state";
pub const TASK_HEADER: &str = "## Task";
pub const EXAMPLE_HEADER: &str = "## Example";
pub const FEEDBACK_HEADER: &str = "## Feedback";
pub const ANSWER_HEADER: &str = "## Answer";

/// Corrections allowed per trial.
pub const MAX_CORRECTIONS: usize = 3;

pub const FEASIBILITY_RULES: [&str; 5] = [
    "Movement Limitation (critical): must only move to adjacent locations defined by the next_to relationships. Always check adjacency before predicting a move.",
    "Object Location: must be in the same location as an object to act on it (e.g., grab, put).",
    "Carrying Limit: cannot hold more than two objects. When holding two objects, actions like open, close, switch-on, or switch-off require you to put at least one object down first.",
    "Appliance Safety: for safety, you should not open appliance doors when they are switched on.",
    "If the human is holding an object, they will handle all actions with the object. Do not attempt to grab or interact with this object. Instead, focus on other parts of the goal.",
];

const ACTION_CATALOG: [(&str, &str); 7] = [
    ("move*(agent, place)", "move the agent to an adjacent place"),
    ("grab(agent, object)", "pick up an object at the agent's place"),
    ("put(agent, object, support)", "put a held object on a support at the agent's place"),
    ("open(agent, appliance)", "open the door of a container appliance"),
    ("close(agent, appliance)", "close the door of a container appliance"),
    ("switch_on(agent, appliance)", "switch an appliance on"),
    ("switch_off(agent, appliance)", "switch an appliance off"),
];

const WORKED_EXAMPLE: &str = "Agent robot1 is at sofa, the goal is on(book, coffee_table), and the book is on(book, bookshelf). \
bookshelf is at desk, and desk is not next to sofa, so robot1 first moves towards desk through adjacent places. \
Sequence: move*(robot1, entrance), move*(robot1, desk), grab(robot1, book), move*(robot1, entrance), move*(robot1, coffee_table), put(robot1, book, coffee_table).\n\
Action: move*(robot1, entrance)";

/// Renders the action prompt for `actor`.
pub fn render_action_prompt(env: &StepEnv, state: &State, actor: &str, feedback: Option<&str>) -> RenderedPrompt {
    let world = env.world;
    let cfg = world.config();
    let system = format!(
        "## System message\n{} You control the robot `{actor}` and choose its next low-level action.",
        cfg.persona
    );
    let mut u = String::new();
    u.push_str(ACTIONS_HEADER);
    u.push('\n');
    for (sig, purpose) in ACTION_CATALOG {
        u.push_str(&format!("{sig}: {purpose}\n"));
    }
    u.push('\n');
    u.push_str(RULES_HEADER);
    u.push('\n');
    for (i, r) in FEASIBILITY_RULES.iter().enumerate() {
        u.push_str(&format!("{}. {r}\n", i + 1));
    }
    u.push('\n');
    u.push_str(ADJACENCY_HEADER);
    u.push_str("\nThe agent can only move between these adjacent places.\n");
    for (a, b) in &cfg.adjacency {
        u.push_str(&format!("next_to({a}, {b})\n"));
    }
    for (name, spec) in &cfg.appliances {
        u.push_str(&format!("sup_at({name}, {})\n", spec.at));
        if spec.container {
            u.push_str(&format!("container({name})\n"));
        }
    }
    u.push('\n');
    u.push_str(STATE_HEADER);
    u.push('\n');
    let snap = world.snapshot(state);
    for (agent, place) in &snap.agent_at {
        u.push_str(&format!("at*({agent}, {place})\n"));
    }
    for (item, loc) in &snap.items {
        match loc {
            crate::sim::ItemLoc::On(s) => u.push_str(&format!("on({item}, {s})\n")),
            crate::sim::ItemLoc::Held(a) => u.push_str(&format!("holding({a}, {item})\n")),
        }
    }
    for e in &snap.opened {
        u.push_str(&format!("opened({e})\n"));
    }
    for e in &snap.switched_on {
        u.push_str(&format!("switched_on({e})\n"));
    }
    u.push('\n');
    u.push_str(TASK_HEADER);
    u.push('\n');
    u.push_str(&format!("Agent: {actor}\nTask: {}\n", env.task));
    let goal: Vec<String> = env.goal.conjuncts().iter().map(|c| c.to_string()).collect();
    u.push_str(&format!("Goal: {}\n", goal.join("; ")));
    let prev: Vec<String> = world
        .team()
        .iter()
        .zip(env.last_joint.iter())
        .map(|(a, act)| format!("{a}: {}", act.as_ref().map_or("noop".to_string(), |x| x.to_string())))
        .collect();
    u.push_str(&format!(
        "Previous actions: {}\n",
        if prev.is_empty() { "(none)".into() } else { prev.join("; ") }
    ));
    u.push_str(&format!("Day: {}\n\n", env.flags));
    u.push_str(EXAMPLE_HEADER);
    u.push('\n');
    u.push_str(WORKED_EXAMPLE);
    u.push_str("\n\n");
    if let Some(f) = feedback {
        u.push_str(FEEDBACK_HEADER);
        u.push('\n');
        u.push_str(f);
        u.push_str("\n\n");
    }
    u.push_str(ANSWER_HEADER);
    u.push_str("\nGive an action sequence for the goal, then the next action on a final line starting with `Action:` (or `Action: noop`).");
    RenderedPrompt { system, user: u }
}

/// Reads the action on the last `Action:` line. `Ok(None)` is an explicit
/// noop; `Err` means nothing usable was found.
pub fn parse_action(text: &str) -> Result<Option<Action>, String> {
    let line = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("Action:"))
        .next_back()
        .ok_or_else(|| "no `Action:` line".to_string())?
        .trim()
        .trim_end_matches('.');
    if line.eq_ignore_ascii_case("noop") {
        return Ok(None);
    }
    line.parse::<Action>().map(Some).map_err(|e| e.to_string())
}

/// Checks a proposal against the state; the message names the broken rule.
pub fn check_action(world: &World, state: &State, actor: &str, action: &Action) -> Result<(), String> {
    if action.args.first().map(String::as_str) != Some(actor) || action.name.starts_with("exo_") {
        return Err(format!("`{action}` is not an action of {actor}."));
    }
    let ts = world.system();
    let Some(id) = ts.action_id(action) else {
        return Err(format!("`{action}` is not a valid action."));
    };
    let snap = world.snapshot(state);
    if let Some(obj) = action.args.get(1) {
        if snap.holder(obj).is_some_and(|h| h != actor) {
            return Err(format!("Rule 5: `{obj}` is held by a teammate; focus on other parts of the goal."));
        }
    }
    if action.name == "open" && snap.switched_on.contains(&action.args[1]) {
        return Err(format!("Appliance Safety: `{}` is switched on; do not open it.", action.args[1]));
    }
    let Some(cond) = ts.blocking_condition(state.bits(), id) else { return Ok(()) };
    let here = snap.agent_at.get(actor).cloned().unwrap_or_default();
    let msg = match action.name.as_str() {
        "move*" => format!("Movement Limitation: {} is not adjacent to {here} (or you are already there).", action.args[1]),
        "grab" | "put" if snap.held_by(actor).len() >= 2 && action.name == "grab" => {
            "Carrying Limit: you already hold two objects.".to_string()
        }
        "grab" | "put" => format!("Object Location: you are at {here} and cannot reach the target of `{action}` ({cond})."),
        _ => format!("`{action}` cannot be executed now ({cond})."),
    };
    Err(msg)
}

/// Per-trial state of the actor: the correction counter and incidents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmActor {
    pub corrections: usize,
    pub incidents: Vec<String>,
}

impl LlmActor {
    /// Queries the endpoint for `actor`'s next action. Infeasible or
    /// unreadable proposals get corrective feedback while the trial's
    /// correction budget lasts; after that they become noops.
    pub fn step(&mut self, env: &StepEnv, state: &State, actor: &str) -> Option<Action> {
        let mut feedback: Option<String> = None;
        loop {
            let prompt = render_action_prompt(env, state, actor, feedback.as_deref());
            let problem = match env.endpoint.complete(&prompt) {
                Ok(text) => match parse_action(&text) {
                    Ok(None) => return None,
                    Ok(Some(a)) => match check_action(env.world, state, actor, &a) {
                        Ok(()) => return Some(a),
                        Err(msg) => format!("Your proposal `{a}` is infeasible. {msg} Propose another action."),
                    },
                    Err(e) => format!("Your answer could not be parsed ({e}). End with a line `Action: <action>`."),
                },
                Err(e) => {
                    self.incidents.push(format!("step {}: endpoint error: {e}", env.step));
                    return None;
                }
            };
            if self.corrections >= MAX_CORRECTIONS {
                self.incidents.push(format!("step {}: {problem}", env.step));
                return None;
            }
            self.corrections += 1;
            feedback = Some(problem);
        }
    }
}

fn section<'a>(text: &'a str, header: &str) -> &'a str {
    let Some(start) = text.find(header) else { return "" };
    let rest = &text[start + header.len()..];
    match rest.find("\n## ") {
        Some(end) => &rest[..end],
        None => rest,
    }
}

fn atoms_in(text: &str) -> Vec<Atom> {
    text.lines().filter_map(|l| l.trim().parse::<Atom>().ok()).collect()
}

/// Percentage of first proposals the noisy mock gets wrong.
const NOISY_ERROR_PERCENT: u64 = 30;

/// Deterministic stand-in for an LLM answering the action prompt. It reads
/// only the prompt text and walks greedily towards the goal, ignoring
/// teammates. The noisy variant makes a rule-breaking first proposal for a
/// fixed share of prompts and answers correctly once given feedback.
pub fn mock_actor_completion(prompt: &RenderedPrompt, noisy: bool) -> Result<String, AnticipationError> {
    let text = &prompt.user;
    let bad = |m: &str| AnticipationError::Protocol(format!("action prompt: {m}"));
    let mut adj: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut sup_at: BTreeMap<String, String> = BTreeMap::new();
    let mut containers = BTreeSet::new();
    for a in atoms_in(section(text, ADJACENCY_HEADER)) {
        match (a.name.as_str(), a.args.as_slice()) {
            ("next_to", [x, y]) => {
                adj.entry(x.clone()).or_default().insert(y.clone());
                adj.entry(y.clone()).or_default().insert(x.clone());
            }
            ("sup_at", [s, p]) => {
                sup_at.insert(s.clone(), p.clone());
            }
            ("container", [e]) => {
                containers.insert(e.clone());
            }
            _ => {}
        }
    }
    let place_of = |s: &str| sup_at.get(s).cloned().unwrap_or_else(|| s.to_string());
    let mut at = BTreeMap::new();
    let mut on = BTreeMap::new();
    let mut holding: BTreeMap<String, String> = BTreeMap::new();
    let mut opened = BTreeSet::new();
    let mut switched = BTreeSet::new();
    for a in atoms_in(section(text, STATE_HEADER)) {
        match (a.name.as_str(), a.args.as_slice()) {
            ("at*", [ag, p]) => {
                at.insert(ag.clone(), p.clone());
            }
            ("on", [o, s]) => {
                on.insert(o.clone(), s.clone());
            }
            ("holding", [ag, o]) => {
                holding.insert(o.clone(), ag.clone());
            }
            ("opened", [e]) => {
                opened.insert(e.clone());
            }
            ("switched_on", [e]) => {
                switched.insert(e.clone());
            }
            _ => {}
        }
    }
    let task = section(text, TASK_HEADER);
    let me = task
        .lines()
        .find_map(|l| l.strip_prefix("Agent:"))
        .map(|s| s.trim().to_string())
        .ok_or_else(|| bad("no agent"))?;
    let goal_line = task.lines().find_map(|l| l.strip_prefix("Goal:")).ok_or_else(|| bad("no goal"))?;
    let goal = Goal::parse("goal", &goal_line.split(';').map(str::trim).collect::<Vec<_>>()).map_err(|e| bad(&e.to_string()))?;
    let here = at.get(&me).cloned().ok_or_else(|| bad("agent location missing"))?;

    // Next hop on a shortest path, neighbours in name order.
    let step_towards = |target: &str| -> Option<String> {
        if here == target {
            return None;
        }
        let mut prev: BTreeMap<String, String> = BTreeMap::new();
        let mut queue = VecDeque::from([here.clone()]);
        let mut seen = BTreeSet::from([here.clone()]);
        while let Some(p) = queue.pop_front() {
            if p == target {
                let mut cur = p;
                while prev.get(&cur) != Some(&here) {
                    cur = prev.get(&cur)?.clone();
                }
                return Some(cur);
            }
            for n in adj.get(&p).into_iter().flatten() {
                if seen.insert(n.clone()) {
                    prev.insert(n.clone(), p.clone());
                    queue.push_back(n.clone());
                }
            }
        }
        None
    };
    let dist = |target: &str| -> usize {
        let mut d = BTreeMap::from([(here.clone(), 0usize)]);
        let mut queue = VecDeque::from([here.clone()]);
        while let Some(p) = queue.pop_front() {
            let dp = d[&p];
            for n in adj.get(&p).into_iter().flatten() {
                if !d.contains_key(n) {
                    d.insert(n.clone(), dp + 1);
                    queue.push_back(n.clone());
                }
            }
        }
        d.get(target).copied().unwrap_or(usize::MAX / 2)
    };

    let mine: Vec<&String> = holding.iter().filter(|(_, a)| **a == me).map(|(o, _)| o).collect();
    let mut placements = Vec::new();
    let mut switches = Vec::new();
    for c in goal.conjuncts().iter().filter(|c| c.positive) {
        match (c.atom.name.as_str(), c.atom.args.as_slice()) {
            ("on", [o, s]) if on.get(o) != Some(s) => placements.push((o.clone(), s.clone())),
            ("switched_on", [e]) if !switched.contains(e) => switches.push(e.clone()),
            _ => {}
        }
    }
    let mut intended: Option<String> = None;
    let mut chosen: Option<String> = None;
    // Deliver what is carried.
    for (o, s) in &placements {
        if mine.contains(&o) {
            let p = place_of(s);
            chosen = Some(if p == here {
                if containers.contains(s) && !opened.contains(s) {
                    format!("open({me}, {s})")
                } else {
                    format!("put({me}, {o}, {s})")
                }
            } else {
                format!("move*({me}, {})", step_towards(&p).unwrap_or(p.clone()))
            });
            break;
        }
    }
    // Fetch the nearest free goal item.
    if chosen.is_none() && mine.len() < 2 {
        let free = placements
            .iter()
            .filter(|(o, _)| !holding.contains_key(o))
            .filter_map(|(o, _)| on.get(o).map(|s| (dist(&place_of(s)), o.clone(), s.clone())))
            .min();
        if let Some((_, o, s)) = free {
            let p = place_of(&s);
            intended = Some(o.clone());
            chosen = Some(if p == here {
                if containers.contains(&s) && !opened.contains(&s) {
                    format!("open({me}, {s})")
                } else {
                    format!("grab({me}, {o})")
                }
            } else {
                format!("move*({me}, {})", step_towards(&p).unwrap_or(p.clone()))
            });
        }
    }
    if chosen.is_none() && placements.iter().all(|(o, _)| holding.contains_key(o) && !mine.contains(&o)) {
        if let Some(e) = switches.first() {
            let p = place_of(e);
            chosen = Some(if p == here {
                format!("switch_on({me}, {e})")
            } else {
                format!("move*({me}, {})", step_towards(&p).unwrap_or(p.clone()))
            });
        }
    }
    let action = chosen.unwrap_or_else(|| "noop".to_string());
    let with_feedback = text.contains(FEEDBACK_HEADER);
    let wrong = noisy && !with_feedback && action != "noop" && fnv1a(text) % 100 < NOISY_ERROR_PERCENT;
    let answer = if wrong {
        match (&intended, action.starts_with("move*")) {
            // Grabbing without walking there first.
            (Some(o), true) => format!("grab({me}, {o})"),
            _ => {
                let far = adj
                    .keys()
                    .find(|p| **p != here && !adj.get(&here).is_some_and(|n| n.contains(*p)))
                    .cloned()
                    .unwrap_or(here.clone());
                format!("move*({me}, {far})")
            }
        }
    } else {
        action
    };
    Ok(format!("Working towards {}.\nAction: {answer}", goal_line.trim()))
}
