//! Layered breadth-first search over a grounded transition system.
//!
//! Layer `t` holds the states first reached after `t` steps, so the first
//! accepting node is a minimum-length plan; among equal-length plans the one
//! whose action ids come first wins. States are deduplicated on the
//! assignment, the search phase and the step (while the step still matters
//! for scheduled exogenous actions).

use std::collections::BTreeMap;

use rustc_hash::FxHashSet;

use super::PlanError;
use crate::kernel::Bits;
use crate::lang::TransitionSystem;

/// One transition of a found path: the planner's action (`None` = noop)
/// and the exogenous actions that were injected with it.
pub(crate) type PathStep = (Option<usize>, Vec<usize>);

pub(crate) struct Search<'a> {
    pub ts: &'a TransitionSystem,
    /// Candidate actions in tie-break order; noop is tried last.
    pub actions: Vec<usize>,
    /// step -> exogenous action ids expected at that step.
    pub exo: BTreeMap<usize, Vec<usize>>,
    pub max_horizon: usize,
    pub node_budget: usize,
}

struct Node {
    bits: Bits,
    parent: u32,
    action: Option<u32>,
    exo: Vec<u32>,
    phase: u8,
}

impl<'a> Search<'a> {
    fn last_exo_step(&self) -> usize {
        self.exo.keys().next_back().map_or(0, |s| s + 1)
    }

    /// Applies `action` plus the executable expected exo actions at `step`.
    /// Returns the successor and the exo actions actually applied.
    pub(crate) fn transition(&self, bits: &Bits, action: Option<usize>, step: usize) -> Option<(Bits, Vec<usize>)> {
        let exo: Vec<usize> = self
            .exo
            .get(&step)
            .map(|v| v.iter().copied().filter(|&e| self.ts.is_executable(bits, e)).collect())
            .unwrap_or_default();
        let mut ids: Vec<usize> = action.into_iter().collect();
        ids.extend(&exo);
        if ids.is_empty() {
            return Some((bits.clone(), Vec::new()));
        }
        match self.ts.successor_ids(bits, &ids, false) {
            Ok(next) => Some((next, exo)),
            Err(_) if !exo.is_empty() => {
                let a = action?;
                self.ts.successor_ids(bits, &[a], false).ok().map(|n| (n, Vec::new()))
            }
            Err(_) => None,
        }
    }

    /// Runs the search. `advance(bits, depth, phase)` gives the phase of a
    /// node reached at `depth` (or `None` to discard it); `accept(bits,
    /// phase)` marks goal nodes.
    pub(crate) fn run(
        &self,
        start: &Bits,
        start_phase: u8,
        advance: &dyn Fn(&Bits, usize, u8) -> Option<u8>,
        accept: &dyn Fn(&Bits, u8) -> bool,
    ) -> Result<Option<Vec<PathStep>>, PlanError> {
        let Some(phase0) = advance(start, 0, start_phase) else {
            return Ok(None);
        };
        if accept(start, phase0) {
            return Ok(Some(Vec::new()));
        }
        let horizon_key = self.last_exo_step();
        let mut nodes = vec![Node {
            bits: start.clone(),
            parent: u32::MAX,
            action: None,
            exo: Vec::new(),
            phase: phase0,
        }];
        let mut seen: FxHashSet<(Bits, u32, u8)> = FxHashSet::default();
        seen.insert((start.clone(), 0, phase0));
        let mut layer: Vec<u32> = vec![0];
        for depth in 0..self.max_horizon {
            let mut next_layer = Vec::new();
            let key_t = (depth + 1).min(horizon_key) as u32;
            for &ni in &layer {
                let choices = self.actions.iter().map(|&a| Some(a)).chain(std::iter::once(None));
                for action in choices {
                    let (bits, exo) = {
                        let node = &nodes[ni as usize];
                        if let Some(a) = action {
                            if !self.ts.is_executable(&node.bits, a) {
                                continue;
                            }
                        }
                        match self.transition(&node.bits, action, depth) {
                            Some(t) => t,
                            None => continue,
                        }
                    };
                    let parent_phase = nodes[ni as usize].phase;
                    let Some(phase) = advance(&bits, depth + 1, parent_phase) else {
                        continue;
                    };
                    if !seen.insert((bits.clone(), key_t, phase)) {
                        continue;
                    }
                    if nodes.len() >= self.node_budget {
                        return Err(PlanError::Budget(self.node_budget));
                    }
                    let done = accept(&bits, phase);
                    nodes.push(Node {
                        bits,
                        parent: ni,
                        action: action.map(|a| a as u32),
                        exo: exo.into_iter().map(|e| e as u32).collect(),
                        phase,
                    });
                    let id = (nodes.len() - 1) as u32;
                    if done {
                        return Ok(Some(Self::path(&nodes, id)));
                    }
                    next_layer.push(id);
                }
            }
            if next_layer.is_empty() {
                return Ok(None);
            }
            layer = next_layer;
        }
        Ok(None)
    }

    fn path(nodes: &[Node], mut id: u32) -> Vec<PathStep> {
        let mut out = Vec::new();
        while nodes[id as usize].parent != u32::MAX {
            let n = &nodes[id as usize];
            out.push((n.action.map(|a| a as usize), n.exo.iter().map(|&e| e as usize).collect()));
            id = n.parent;
        }
        out.reverse();
        out
    }
}
