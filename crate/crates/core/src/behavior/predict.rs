use std::collections::BTreeSet;

use super::cues::{extract_cues, CueContext, TaskView};
use super::ensemble::BehaviorEnsemble;
use crate::kernel::{Action, State};
use crate::sim::World;

/// Rolls the ensemble forward `k` steps for `ctx.teammate`. Each predicted
/// family is grounded to an executable action and simulated through the
/// successor function (other agents held still); a family with no
/// executable grounding becomes a noop.
pub fn predict(ens: &BehaviorEnsemble, ctx: &CueContext, k: usize, state: &State) -> Vec<Option<Action>> {
    let ts = ctx.world.system();
    let mut ctx = ctx.clone();
    let mut s = state.clone();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let cues = extract_cues(&ctx, &s);
        let fam = ens.predict_family(&cues).to_string();
        let action = ground_family(ctx.world, &ctx, &s, &fam);
        let applied = action.as_ref().and_then(|a| {
            let id = ts.action_id(a)?;
            ts.successor_ids(s.bits(), &[id], false).ok()
        });
        let action = match applied {
            Some(bits) => {
                s = ts.wrap_state(bits);
                action
            }
            None => None,
        };
        let fam = action.as_ref().map_or("noop".to_string(), |a| a.name.clone());
        ctx.prev = [fam, std::mem::take(&mut ctx.prev[0])];
        out.push(action);
    }
    out
}

/// Chooses arguments for a predicted family: goal-relevant objects first,
/// then the move that gets closest to where the task needs the teammate,
/// then name order. Only executable actions are considered.
pub fn ground_family(world: &World, ctx: &CueContext, state: &State, family: &str) -> Option<Action> {
    if family == "noop" {
        return None;
    }
    let ts = world.system();
    let me = ctx.teammate;
    let view = TaskView::new(world, state, me, ctx.task.map(|(_, g)| g));
    let needed = view.needed_places(world, me);
    let cfg = world.config();
    let wanted_items: BTreeSet<&str> = view.placements().map(|(i, _)| i).collect();
    let mut relevant_appliances: BTreeSet<&str> = view.switches().collect();
    for (item, target) in view.placements() {
        if cfg.appliances.contains_key(target) {
            relevant_appliances.insert(target);
        }
        if let Some(s) = view.snap.support(item) {
            if cfg.appliances.contains_key(s) {
                relevant_appliances.insert(s);
            }
        }
    }
    let target_of = |item: &str| view.placements().find(|(i, _)| *i == item).map(|(_, t)| t.to_string());
    let mut best: Option<((usize, usize), &Action)> = None;
    for &id in ts.actions_of(me) {
        let a = ts.action(id);
        if a.name != family || !ts.is_executable(state.bits(), id) {
            continue;
        }
        let base = family.trim_start_matches("exo_");
        let key = match base {
            "move*" => {
                let d = needed.iter().map(|p| world.distance(&a.args[1], p)).min();
                (0, d.unwrap_or(usize::MAX / 2))
            }
            "grab" => (usize::from(!wanted_items.contains(a.args[1].as_str())), 0),
            "put" => (usize::from(target_of(&a.args[1]).as_deref() != Some(a.args[2].as_str())), 0),
            _ => (usize::from(!relevant_appliances.contains(a.args[1].as_str())), 0),
        };
        if best.is_none_or(|(k, _)| key < k) {
            best = Some((key, a));
        }
    }
    best.map(|(_, a)| a.clone())
}
