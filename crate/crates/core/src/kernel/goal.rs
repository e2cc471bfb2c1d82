use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::atoms::Literal;
use super::state::{holds, State};
use super::KernelError;

/// A named conjunction of grounded literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GoalRepr", into = "GoalRepr")]
pub struct Goal {
    label: String,
    conjuncts: BTreeSet<Literal>,
}

#[derive(Serialize, Deserialize)]
struct GoalRepr {
    label: String,
    conjuncts: BTreeSet<Literal>,
}

impl TryFrom<GoalRepr> for Goal {
    type Error = KernelError;
    fn try_from(r: GoalRepr) -> Result<Self, Self::Error> {
        Goal::new(r.label, r.conjuncts)
    }
}

impl From<Goal> for GoalRepr {
    fn from(g: Goal) -> Self {
        GoalRepr {
            label: g.label,
            conjuncts: g.conjuncts,
        }
    }
}

impl Goal {
    pub fn new(label: impl Into<String>, conjuncts: impl IntoIterator<Item = Literal>) -> Result<Self, KernelError> {
        let label = label.into();
        let conjuncts: BTreeSet<Literal> = conjuncts.into_iter().collect();
        if conjuncts.is_empty() {
            return Err(KernelError::EmptyGoal(label));
        }
        Ok(Goal { label, conjuncts })
    }

    /// Parses conjuncts written as literal text, e.g. `"on(eggs, stove)"`.
    pub fn parse<S: AsRef<str>>(label: impl Into<String>, conjuncts: &[S]) -> Result<Self, KernelError> {
        let lits = conjuncts
            .iter()
            .map(|c| c.as_ref().parse())
            .collect::<Result<Vec<Literal>, _>>()?;
        Goal::new(label, lits)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn conjuncts(&self) -> &BTreeSet<Literal> {
        &self.conjuncts
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// The sub-goal keeping conjuncts accepted by `keep`; `None` if nothing
    /// is left.
    pub fn filter(&self, keep: impl Fn(&Literal) -> bool) -> Option<Goal> {
        let kept: BTreeSet<Literal> = self.conjuncts.iter().filter(|l| keep(l)).cloned().collect();
        if kept.is_empty() {
            None
        } else {
            Some(Goal {
                label: self.label.clone(),
                conjuncts: kept,
            })
        }
    }

    /// Conjunction of two goals under a combined label.
    pub fn join(&self, other: &Goal) -> Goal {
        Goal {
            label: format!("{}+{}", self.label, other.label),
            conjuncts: self.conjuncts.union(&other.conjuncts).cloned().collect(),
        }
    }

    /// Count of conjuncts holding in `state`.
    pub fn satisfied_count(&self, state: &State) -> Result<usize, KernelError> {
        let mut n = 0;
        for c in &self.conjuncts {
            if holds(state, c)? {
                n += 1;
            }
        }
        Ok(n)
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.conjuncts.iter().map(|c| c.to_string()).collect();
        write!(f, "{}: {{{}}}", self.label, parts.join(", "))
    }
}

/// True iff every conjunct of `goal` holds in `state`.
pub fn goal_satisfied(state: &State, goal: &Goal) -> Result<bool, KernelError> {
    for c in goal.conjuncts() {
        if !holds(state, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}
