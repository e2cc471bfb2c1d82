use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::cues::CueVector;
use super::ensemble::{learn_ensemble, BehaviorEnsemble};
use super::fftree::DEFAULT_DEPTH;

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_THETA: f64 = 0.6;

/// Rolling agreement between predicted and observed action families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementTracker {
    window: VecDeque<bool>,
    pub size: usize,
    pub theta: f64,
    pub active_model: String,
}

impl AgreementTracker {
    pub fn new(active_model: impl Into<String>, size: usize, theta: f64) -> Self {
        AgreementTracker {
            window: VecDeque::with_capacity(size),
            size: size.max(1),
            theta,
            active_model: active_model.into(),
        }
    }

    pub fn record(&mut self, predicted: &str, observed: &str) {
        if self.window.len() == self.size {
            self.window.pop_front();
        }
        self.window.push_back(predicted == observed);
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.size
    }

    /// Fraction of agreements in the window; `None` until it is full.
    pub fn agreement_rate(&self) -> Option<f64> {
        self.is_full()
            .then(|| self.window.iter().filter(|m| **m).count() as f64 / self.size as f64)
    }

    pub fn reset(&mut self) {
        self.window.clear();
    }
}

/// What the observer should do after an observation.
#[derive(Clone, Debug, PartialEq)]
pub enum Revision {
    Keep,
    /// Use the stored model with this id from now on.
    Switch(String),
    /// Replace the active model with one learned from recent traces.
    Relearn(Box<BehaviorEnsemble>),
}

/// Records one (prediction, observation) pair. When the window is full and
/// agreement has fallen below `theta`, the stored model agreeing best with
/// `recent` traces is chosen; if none beats the active model, a new one is
/// learned from `recent`. The window restarts after any change.
pub fn observe_and_maybe_revise(
    tracker: &mut AgreementTracker,
    library: &BTreeMap<String, BehaviorEnsemble>,
    predicted: &str,
    observed: &str,
    recent: &[(CueVector, String)],
) -> Revision {
    tracker.record(predicted, observed);
    match tracker.agreement_rate() {
        Some(rate) if rate < tracker.theta => {}
        _ => return Revision::Keep,
    }
    let active_acc = library.get(&tracker.active_model).map_or(0.0, |m| m.accuracy(recent));
    let best = library
        .iter()
        .filter(|(id, _)| **id != tracker.active_model)
        .map(|(id, m)| (id, m.accuracy(recent)))
        .fold(None::<(&String, f64)>, |acc, (id, a)| match acc {
            Some((_, b)) if b >= a => acc,
            _ => Some((id, a)),
        });
    tracker.reset();
    if let Some((id, acc)) = best {
        if acc > active_acc {
            tracker.active_model = id.clone();
            return Revision::Switch(id.clone());
        }
    }
    match learn_ensemble(recent, DEFAULT_DEPTH) {
        Ok(m) => Revision::Relearn(Box::new(m)),
        Err(_) => Revision::Keep,
    }
}
