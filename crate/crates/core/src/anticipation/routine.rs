use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AnticipationError, ContextFlags};
use crate::sim::{RoutineSource, TaskRoutine, WorldConfig};

pub const REASON_UNKNOWN: &str = "unknown-task";
pub const REASON_DUPLICATE: &str = "duplicate";
pub const REASON_NOT_APPLICABLE: &str = "not-applicable";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: TaskRoutine,
    /// Removed task labels with the reason.
    pub removed: Vec<(String, String)>,
    pub reordered: bool,
}

/// Lowercase alphanumerics only, so "Prepare home work-station" and
/// "prepare_home_workstation" compare equal.
fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

fn strip_marker(frag: &str) -> &str {
    let f = frag.trim();
    let f = f.trim_start_matches(['-', '*', '•']).trim_start();
    let digits = f.find(|c: char| !c.is_ascii_digit()).unwrap_or(f.len());
    let f = if digits > 0 && f[digits..].starts_with(['.', ')', ':']) {
        f[digits + 1..].trim_start()
    } else {
        f
    };
    let f = f.strip_prefix("and ").unwrap_or(f);
    f.trim_end_matches(['.', '!']).trim()
}

/// Extracts an ordered task list from a completion. When some line starts
/// with `Routine:` only the last such line is read, so reasoning text
/// before it is ignored. Fragments that match no candidate are kept under
/// their raw text for the validator to remove.
pub fn parse_routine(raw: &str, candidates: &[String]) -> Result<TaskRoutine, AnticipationError> {
    let body = raw
        .lines()
        .filter_map(|l| {
            let t = l.trim_start();
            (t.len() >= 8 && t[..8].eq_ignore_ascii_case("routine:")).then(|| &t[8..])
        })
        .next_back()
        .unwrap_or(raw);
    let by_norm: Vec<(String, &String)> = candidates.iter().map(|c| (normalize(c), c)).collect();
    let mut tasks = Vec::new();
    let mut recognised = 0;
    for frag in body.split(['\n', ',', ';']).flat_map(|f| f.split("->")).flat_map(|f| f.split('→')) {
        let frag = strip_marker(frag);
        if frag.is_empty() {
            continue;
        }
        let n = normalize(frag);
        if n.is_empty() {
            continue;
        }
        match by_norm.iter().find(|(cn, c)| c.as_str() == frag || *cn == n) {
            Some((_, c)) => {
                recognised += 1;
                tasks.push((*c).clone());
            }
            None => tasks.push(frag.to_string()),
        }
    }
    if recognised == 0 {
        return Err(AnticipationError::EmptyParse);
    }
    Ok(TaskRoutine::new(tasks, RoutineSource::Llm))
}

/// True when some active priority rule wants `b` before `a`.
fn violates(config: &WorldConfig, context: &ContextFlags, a: &str, b: &str) -> bool {
    config
        .priorities
        .iter()
        .any(|r| r.first == b && r.then == a && context.matches(&r.when))
}

/// Removes unknown, duplicate and inapplicable tasks, then swaps adjacent
/// pairs that break an active priority rule until none remain. Nothing else
/// changes.
pub fn validate(
    routine: &TaskRoutine,
    context: &ContextFlags,
    config: &WorldConfig,
) -> Result<ValidationReport, AnticipationError> {
    let candidates: BTreeSet<String> = config.candidate_tasks().into_iter().collect();
    let mut removed = Vec::new();
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    let mut completed = 0;
    for (i, t) in routine.tasks.iter().enumerate() {
        let reason = if !candidates.contains(t) {
            Some(REASON_UNKNOWN)
        } else if seen.contains(t) {
            Some(REASON_DUPLICATE)
        } else if !config.applicable(t, context) {
            Some(REASON_NOT_APPLICABLE)
        } else {
            None
        };
        match reason {
            Some(r) => removed.push((t.clone(), r.to_string())),
            None => {
                seen.insert(t.clone());
                kept.push(t.clone());
                if i < routine.completed {
                    completed += 1;
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(AnticipationError::EmptyAfterValidation);
    }
    let mut reordered = false;
    // Bounded in case the scenario's rules form a cycle.
    for _ in 0..kept.len() * kept.len() {
        let mut changed = false;
        for i in 0..kept.len() - 1 {
            if violates(config, context, &kept[i], &kept[i + 1]) {
                kept.swap(i, i + 1);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        reordered = true;
    }
    Ok(ValidationReport {
        accepted: TaskRoutine {
            tasks: kept,
            completed,
            source: RoutineSource::Validated,
        },
        removed,
        reordered,
    })
}

/// The task expected after `current`: the first later entry that is not
/// already done. When `current` is absent from the routine, the first entry
/// that is neither done nor current.
pub fn next_after(routine: &[String], done: &[String], current: Option<&str>) -> Option<String> {
    let skip = |t: &String| done.contains(t) || Some(t.as_str()) == current;
    let start = current
        .and_then(|c| routine.iter().position(|t| t == c))
        .map_or(0, |i| i + 1);
    routine[start..].iter().find(|t| !skip(t)).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn numbered_list_parses() {
        let cfg = WorldConfig::shipped();
        let r = parse_routine("1. Prepare breakfast\n2. Prepare lunch", &cfg.candidate_tasks()).unwrap();
        assert_eq!(r.tasks, labels(&["prepare_breakfast", "prepare_lunch"]));
        assert_eq!(r.source, RoutineSource::Llm);
    }

    #[test]
    fn reasoning_before_the_routine_line_is_ignored() {
        let cfg = WorldConfig::shipped();
        let raw = "Breakfast comes first, coffee after work setup.\nRoutine: Prepare breakfast, Prepare home work-station";
        let r = parse_routine(raw, &cfg.candidate_tasks()).unwrap();
        assert_eq!(r.tasks, labels(&["prepare_breakfast", "prepare_home_workstation"]));
    }

    #[test]
    fn unknown_fragments_are_kept_and_gibberish_fails() {
        let cfg = WorldConfig::shipped();
        let r = parse_routine("Prepare coffee, Walk the dog", &cfg.candidate_tasks()).unwrap();
        assert_eq!(r.tasks, labels(&["prepare_coffee", "Walk the dog"]));
        assert!(matches!(
            parse_routine("qwerty zxcv", &cfg.candidate_tasks()),
            Err(AnticipationError::EmptyParse)
        ));
    }

    #[test]
    fn validator_fixes_the_unprompted_wfh_routine() {
        let cfg = WorldConfig::shipped();
        let wfh = ContextFlags::new(true, false, false);
        let r = TaskRoutine::new(
            labels(&["prepare_breakfast", "prepare_coffee", "prepare_home_workstation", "pack_bag"]),
            RoutineSource::Llm,
        );
        let rep = validate(&r, &wfh, &cfg).unwrap();
        assert_eq!(
            rep.accepted.tasks,
            labels(&["prepare_breakfast", "prepare_home_workstation", "prepare_coffee"])
        );
        assert_eq!(rep.removed, vec![("pack_bag".to_string(), REASON_NOT_APPLICABLE.to_string())]);
        assert!(rep.reordered);
    }

    #[test]
    fn valid_routine_is_unchanged() {
        let cfg = WorldConfig::shipped();
        let wfh = ContextFlags::new(true, false, false);
        let tasks = cfg.day_type("weekday_wfh").unwrap().template.clone();
        let rep = validate(&TaskRoutine::new(tasks.clone(), RoutineSource::Llm), &wfh, &cfg).unwrap();
        assert_eq!(rep.accepted.tasks, tasks);
        assert!(!rep.reordered);
        assert!(rep.removed.is_empty());
    }

    #[test]
    fn all_invalid_is_an_error() {
        let cfg = WorldConfig::shipped();
        let wfh = ContextFlags::new(true, false, false);
        let r = TaskRoutine::new(labels(&["pack_bag", "nap"]), RoutineSource::Llm);
        assert!(matches!(validate(&r, &wfh, &cfg), Err(AnticipationError::EmptyAfterValidation)));
    }

    #[test]
    fn next_skips_done_and_current() {
        let r = labels(&["a", "b", "c", "d"]);
        assert_eq!(next_after(&r, &labels(&["a"]), Some("b")), Some("c".into()));
        assert_eq!(next_after(&r, &labels(&["a", "c"]), Some("b")), Some("d".into()));
        assert_eq!(next_after(&r, &labels(&["a"]), Some("x")), Some("b".into()));
        assert_eq!(next_after(&r, &labels(&["a", "b", "c"]), Some("d")), None);
    }
}
