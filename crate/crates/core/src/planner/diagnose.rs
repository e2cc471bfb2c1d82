use std::collections::BTreeSet;

use super::PlanError;
use crate::kernel::{Atom, HistoryEntry, HistoryRecord, Literal};
use crate::lang::TransitionSystem;

/// Largest number of defaults retracted together by default.
pub const DEFAULT_RETRACTION_BOUND: usize = 3;

/// Initial defaults withdrawn to explain the observations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosisResult {
    pub retracted: BTreeSet<Literal>,
    /// The history with the retracted defaults removed and their
    /// complements recorded as step-0 observations.
    pub revised: HistoryRecord,
}

/// True when the history, with `retracted` defaults withdrawn, replays
/// without contradicting any observation.
pub fn consistent(ts: &TransitionSystem, history: &HistoryRecord, retracted: &BTreeSet<Literal>) -> bool {
    let mut truth: std::collections::BTreeMap<&Atom, bool> = std::collections::BTreeMap::new();
    for d in &history.initial_defaults {
        let positive = if retracted.contains(d) { !d.positive } else { d.positive };
        truth.insert(&d.atom, positive);
    }
    for l in history.observations_at(0) {
        truth.insert(&l.atom, l.positive);
    }
    let true_atoms: Vec<&Atom> = truth.iter().filter(|(_, v)| **v).map(|(a, _)| *a).collect();
    let Ok(mut state) = ts.state_from(true_atoms, false) else {
        return false;
    };
    let last = history.last_step();
    for step in 0..=last {
        for obs in history.observations_at(step) {
            match state.value(&obs.atom) {
                Ok(v) if v == obs.positive => {}
                _ => return false,
            }
        }
        if step == last {
            break;
        }
        let actions: Vec<_> = history.actions_at(step).cloned().collect();
        state = match ts.successor(&state, &actions) {
            Ok(s) => s,
            Err(_) => return false,
        };
    }
    true
}

/// Finds a subset-minimal set of initial defaults whose retraction makes
/// `history` plus the new observation consistent.
///
/// Candidate sets are tried by increasing size and, within a size, in
/// lexicographic order of the defaults' text, so the result is
/// deterministic.
pub fn diagnose(
    ts: &TransitionSystem,
    history: &HistoryRecord,
    observation: &Literal,
    step: usize,
    bound: usize,
) -> Result<DiagnosisResult, PlanError> {
    let mut h = history.clone();
    h.observe(observation.clone(), step);
    let mut defaults: Vec<&Literal> = h.initial_defaults.iter().collect();
    defaults.sort_by_key(|d| d.to_string());
    defaults.dedup();
    for size in 0..=bound.min(defaults.len()) {
        let mut found = None;
        for_each_subset(defaults.len(), size, &mut |idx| {
            if found.is_some() {
                return;
            }
            let set: BTreeSet<Literal> = idx.iter().map(|&i| defaults[i].clone()).collect();
            if consistent(ts, &h, &set) {
                found = Some(set);
            }
        });
        if let Some(retracted) = found {
            let mut revised = HistoryRecord::with_defaults(
                h.initial_defaults.iter().filter(|d| !retracted.contains(d)).cloned(),
            );
            for e in h.entries() {
                revised.insert(e.clone());
            }
            for r in &retracted {
                revised.insert(HistoryEntry::Obs {
                    literal: r.negate(),
                    step: 0,
                });
            }
            return Ok(DiagnosisResult { retracted, revised });
        }
    }
    Err(PlanError::Undiagnosable(bound))
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}
