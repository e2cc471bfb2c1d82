use serde::{Deserialize, Serialize};

use super::atoms::{Action, Literal};
use super::KernelError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HistoryEntry {
    /// `obs(literal, step)`: the literal was observed at `step`.
    Obs { literal: Literal, step: usize },
    /// `hpd(action, step)`: the action happened at `step`.
    Hpd { action: Action, step: usize },
}

impl HistoryEntry {
    pub fn step(&self) -> usize {
        match self {
            HistoryEntry::Obs { step, .. } | HistoryEntry::Hpd { step, .. } => *step,
        }
    }
}

/// Observations and executed actions, plus retractable initial defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    entries: Vec<HistoryEntry>,
    /// Literals assumed true at step 0 unless retracted.
    pub initial_defaults: Vec<Literal>,
}

impl HistoryRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults(defaults: impl IntoIterator<Item = Literal>) -> Self {
        HistoryRecord {
            entries: Vec::new(),
            initial_defaults: defaults.into_iter().collect(),
        }
    }

    pub fn observe(&mut self, literal: Literal, step: usize) {
        self.insert(HistoryEntry::Obs { literal, step });
    }

    pub fn happened(&mut self, action: Action, step: usize) {
        self.insert(HistoryEntry::Hpd { action, step });
    }

    /// Inserts keeping entries sorted by step (stable within a step).
    pub fn insert(&mut self, entry: HistoryEntry) {
        let at = self.entries.partition_point(|e| e.step() <= entry.step());
        self.entries.insert(at, entry);
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn last_step(&self) -> usize {
        self.entries.last().map_or(0, |e| e.step())
    }

    pub fn observations_at(&self, step: usize) -> impl Iterator<Item = &Literal> {
        self.entries.iter().filter_map(move |e| match e {
            HistoryEntry::Obs { literal, step: s } if *s == step => Some(literal),
            _ => None,
        })
    }

    pub fn actions_at(&self, step: usize) -> impl Iterator<Item = &Action> {
        self.entries.iter().filter_map(move |e| match e {
            HistoryEntry::Hpd { action, step: s } if *s == step => Some(action),
            _ => None,
        })
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.entries.windows(2).any(|w| w[0].step() > w[1].step()) {
            return Err(KernelError::UnsortedHistory);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_stay_sorted_by_step() {
        let mut h = HistoryRecord::new();
        h.happened("move(robot, kitchen)".parse().unwrap(), 2);
        h.observe("opened(fridge)".parse().unwrap(), 0);
        h.observe("-opened(fridge)".parse().unwrap(), 1);
        let steps: Vec<usize> = h.entries().iter().map(|e| e.step()).collect();
        assert_eq!(steps, vec![0, 1, 2]);
        assert!(h.validate().is_ok());
        assert_eq!(h.actions_at(2).count(), 1);
    }
}
