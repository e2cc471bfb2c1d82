//! Trace files: one tab-separated record per line after a header.
//!
//! Columns: episode, step, agent, prev_action1, prev_action2, location,
//! goal_objects, held_by_agent, held_by_others, current_task,
//! previous_task, weekday, going_to_office, guests_expected, relations,
//! observed. Set-valued columns are comma-separated, `-` when empty.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cues::CueVector;
use super::BehaviorError;

pub const TRACE_HEADER: &str = "episode\tstep\tagent\tprev_action1\tprev_action2\tlocation\tgoal_objects\theld_by_agent\theld_by_others\tcurrent_task\tprevious_task\tweekday\tgoing_to_office\tguests_expected\trelations\tobserved";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: u64,
    pub step: usize,
    pub agent: String,
    pub cues: CueVector,
    pub observed: String,
}

fn set(s: &BTreeSet<String>) -> String {
    if s.is_empty() {
        "-".into()
    } else {
        s.iter().cloned().collect::<Vec<_>>().join(",")
    }
}

fn unset(s: &str) -> BTreeSet<String> {
    if s == "-" {
        BTreeSet::new()
    } else {
        s.split(',').map(str::to_string).collect()
    }
}

pub fn write_traces(records: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let c = &r.cues;
        let cols = [
            r.episode.to_string(),
            r.step.to_string(),
            r.agent.clone(),
            c.prev_action1.clone(),
            c.prev_action2.clone(),
            c.location.clone(),
            set(&c.goal_objects),
            set(&c.held_by_agent),
            set(&c.held_by_others),
            c.current_task.clone(),
            c.previous_task.clone(),
            c.weekday.to_string(),
            c.going_to_office.to_string(),
            c.guests_expected.to_string(),
            set(&c.relations),
            r.observed.clone(),
        ];
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out
}

pub fn read_traces(text: &str) -> Result<Vec<TraceRecord>, BehaviorError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TRACE_HEADER => {}
        _ => return Err(BehaviorError::TraceFormat { line: 1, msg: "missing header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| BehaviorError::TraceFormat { line: i + 1, msg: msg.into() };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 16 {
            return Err(bad("expected 16 columns"));
        }
        let flag = |s: &str| s.parse::<bool>().map_err(|_| bad("flag must be true or false"));
        out.push(TraceRecord {
            episode: f[0].parse().map_err(|_| bad("bad episode id"))?,
            step: f[1].parse().map_err(|_| bad("bad step"))?,
            agent: f[2].into(),
            cues: CueVector {
                prev_action1: f[3].into(),
                prev_action2: f[4].into(),
                location: f[5].into(),
                goal_objects: unset(f[6]),
                held_by_agent: unset(f[7]),
                held_by_others: unset(f[8]),
                current_task: f[9].into(),
                previous_task: f[10].into(),
                weekday: flag(f[11])?,
                going_to_office: flag(f[12])?,
                guests_expected: flag(f[13])?,
                relations: unset(f[14]),
            },
            observed: f[15].into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_round_trip() {
        let r = TraceRecord {
            episode: 3,
            step: 7,
            agent: "human".into(),
            cues: CueVector {
                held_by_agent: ["eggs".to_string(), "plate".to_string()].into(),
                relations: ["hands_full".to_string()].into(),
                weekday: true,
                ..CueVector::default()
            },
            observed: "exo_put".into(),
        };
        let text = write_traces(&[r.clone(), r.clone()]);
        assert_eq!(read_traces(&text).unwrap(), vec![r.clone(), r]);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = format!("{TRACE_HEADER}\n1\t2\n");
        assert!(matches!(read_traces(&text), Err(BehaviorError::TraceFormat { line: 2, .. })));
    }
}
