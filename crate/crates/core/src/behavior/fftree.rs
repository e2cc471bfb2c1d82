use std::fmt;

use serde::{Deserialize, Serialize};

use super::cues::{predicates_for, CueVector, Predicate};
use super::BehaviorError;

/// Weight of a false positive relative to a false negative when exits are
/// assigned.
pub const FP_WEIGHT: usize = 2;
/// Default number of levels.
pub const DEFAULT_DEPTH: usize = 4;
/// A cue must be true on at least this many remaining examples to be
/// ranked.
const MIN_SUPPORT: usize = 3;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Fire,
    Pass,
}

/// A fast-and-frugal tree deciding whether a teammate performs `target`.
/// Level `i` exits with its decision when its predicate holds; otherwise
/// evaluation moves on, ending in `final_decision`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FFTree {
    pub target: String,
    pub levels: Vec<(Predicate, Decision)>,
    pub final_decision: Decision,
}

impl FFTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn fires(&self, cues: &CueVector) -> bool {
        self.decide_traced(cues, &mut |_| {}) == Decision::Fire
    }

    /// Evaluates the tree, reporting each predicate index it tests.
    pub fn decide_traced(&self, cues: &CueVector, visit: &mut dyn FnMut(usize)) -> Decision {
        for (i, (p, exit)) in self.levels.iter().enumerate() {
            visit(i);
            if p.eval(cues) {
                return *exit;
            }
        }
        self.final_decision
    }

    /// Weighted training cost `FP_WEIGHT * FP + FN` of this tree.
    pub fn cost(&self, examples: &[(CueVector, bool)]) -> usize {
        examples
            .iter()
            .map(|(c, y)| match (self.fires(c), *y) {
                (true, false) => FP_WEIGHT,
                (false, true) => 1,
                _ => 0,
            })
            .sum()
    }
}

impl fmt::Display for FFTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tree {}:", self.target)?;
        for (p, d) in &self.levels {
            writeln!(f, "  if {p} -> {d:?}")?;
        }
        write!(f, "  else -> {:?}", self.final_decision)
    }
}

fn laplace(hit: usize, n: usize) -> f64 {
    (hit as f64 + 1.0) / (n as f64 + 2.0)
}

/// Learns a tree of at most `max_depth` levels.
///
/// Cues are chosen level by level on the examples that have not exited yet,
/// ranking each candidate by its Laplace-smoothed positive (or negative)
/// predictive value. Exits for the chosen order are then assigned by
/// enumeration to minimise `FP_WEIGHT * FP + FN`, preferring `pass` on ties.
pub fn learn_fftree(examples: &[(CueVector, bool)], target: &str, max_depth: usize) -> Result<FFTree, BehaviorError> {
    let pos = examples.iter().filter(|(_, y)| *y).count();
    if pos == 0 || pos == examples.len() {
        return Err(BehaviorError::Precondition(format!(
            "tree for `{target}` needs positive and negative examples"
        )));
    }
    let preds: Vec<Predicate> = predicates_for(examples.iter().map(|(c, _)| c))
        .into_iter()
        .filter(|p| {
            let first = p.eval(&examples[0].0);
            examples.iter().any(|(c, _)| p.eval(c) != first)
        })
        .collect();
    if preds.is_empty() {
        return Err(BehaviorError::Degenerate(target.to_string()));
    }
    let truth: Vec<Vec<bool>> = preds
        .iter()
        .map(|p| examples.iter().map(|(c, _)| p.eval(c)).collect())
        .collect();
    let mut remaining: Vec<usize> = (0..examples.len()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < max_depth.max(1) && !remaining.is_empty() {
        let rem_pos = remaining.iter().filter(|&&i| examples[i].1).count();
        if rem_pos == 0 || rem_pos == remaining.len() {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (pi, t) in truth.iter().enumerate() {
            if chosen.contains(&pi) {
                continue;
            }
            let (mut n, mut hit) = (0, 0);
            for &i in &remaining {
                if t[i] {
                    n += 1;
                    hit += examples[i].1 as usize;
                }
            }
            if n < MIN_SUPPORT || n == remaining.len() {
                continue;
            }
            let score = laplace(hit, n).max(laplace(n - hit, n));
            let better = match best {
                None => true,
                Some((s, bn, _)) => score > s + 1e-12 || ((score - s).abs() <= 1e-12 && n > bn),
            };
            if better {
                best = Some((score, n, pi));
            }
        }
        let Some((_, _, pi)) = best else { break };
        chosen.push(pi);
        remaining.retain(|&i| !truth[pi][i]);
    }
    if chosen.is_empty() {
        // No cue splits the data usefully: a constant tree on the best
        // single predicate.
        chosen.push(0);
    }
    Ok(assign_exits(examples, target, chosen.into_iter().map(|i| preds[i].clone()).collect()))
}

/// The exit assignment for a fixed cue order with the least weighted cost;
/// ties go to the assignment with fewer `fire` exits, then to `pass` at the
/// earliest differing level.
pub fn assign_exits(examples: &[(CueVector, bool)], target: &str, order: Vec<Predicate>) -> FFTree {
    let d = order.len();
    // Examples exiting at each level (index d = fall-through).
    let mut counts = vec![(0usize, 0usize); d + 1];
    for (c, y) in examples {
        let lvl = order.iter().position(|p| p.eval(c)).unwrap_or(d);
        if *y {
            counts[lvl].0 += 1;
        } else {
            counts[lvl].1 += 1;
        }
    }
    let mut best: Option<((usize, u32, u32), u32)> = None;
    for mask in 0u32..(1 << (d + 1)) {
        let mut cost = 0;
        for (lvl, (p, n)) in counts.iter().enumerate() {
            cost += if mask & (1 << lvl) != 0 { FP_WEIGHT * n } else { *p };
        }
        // Later tie-breaks: fewer fires, then pass at the earliest level,
        // i.e. the bit-reversed mask is smallest.
        let key = (cost, mask.count_ones(), mask.reverse_bits());
        if best.is_none_or(|(k, _)| key < k) {
            best = Some((key, mask));
        }
    }
    let mask = best.expect("at least one assignment").1;
    let dec = |lvl: usize| if mask & (1 << lvl) != 0 { Decision::Fire } else { Decision::Pass };
    FFTree {
        target: target.to_string(),
        levels: order.into_iter().enumerate().map(|(i, p)| (p, dec(i))).collect(),
        final_decision: dec(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::cues::Cue;

    fn cue(task: &str, rel: &[&str]) -> CueVector {
        CueVector {
            current_task: task.into(),
            relations: rel.iter().map(|s| s.to_string()).collect(),
            ..CueVector::default()
        }
    }

    #[test]
    fn perfect_single_cue_gives_depth_one() {
        let mut ex = Vec::new();
        for i in 0..20 {
            ex.push((cue("prepare_activities", if i % 2 == 0 { &["hands_full"] } else { &[] }), true));
            ex.push((cue("prepare_lunch", if i % 3 == 0 { &["hands_full"] } else { &[] }), false));
        }
        let t = learn_fftree(&ex, "exo_grab", 4).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.cost(&ex), 0);
        assert!(matches!(&t.levels[0].0.cue, Cue::CurrentTask(_)));
    }

    #[test]
    fn all_negative_labels_are_rejected() {
        let ex = vec![(cue("a", &[]), false), (cue("b", &[]), false)];
        assert!(matches!(learn_fftree(&ex, "x", 3), Err(BehaviorError::Precondition(_))));
    }

    #[test]
    fn constant_cues_are_degenerate() {
        let ex = vec![(cue("a", &[]), true), (cue("a", &[]), false)];
        assert!(matches!(learn_fftree(&ex, "x", 3), Err(BehaviorError::Degenerate(_))));
    }

    #[test]
    fn exits_minimise_cost_over_all_assignments() {
        let mut ex = Vec::new();
        for i in 0..60usize {
            let rel: Vec<&str> = ["item_here", "hands_full", "at_target"]
                .iter()
                .enumerate()
                .filter(|(b, _)| (i >> b) & 1 == 1)
                .map(|(_, r)| *r)
                .collect();
            let y = (i % 7 == 0) || (rel.contains(&"item_here") && i % 3 != 0);
            ex.push((cue("t", &rel), y));
        }
        let t = learn_fftree(&ex, "exo_grab", 3).unwrap();
        let order: Vec<Predicate> = t.levels.iter().map(|(p, _)| p.clone()).collect();
        let d = order.len();
        for mask in 0u32..(1 << (d + 1)) {
            let dec = |l: usize| if mask & (1 << l) != 0 { Decision::Fire } else { Decision::Pass };
            let other = FFTree {
                target: t.target.clone(),
                levels: order.iter().cloned().enumerate().map(|(i, p)| (p, dec(i))).collect(),
                final_decision: dec(d),
            };
            assert!(t.cost(&ex) <= other.cost(&ex));
        }
    }
}
