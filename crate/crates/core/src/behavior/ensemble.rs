use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cues::CueVector;
use super::fftree::{learn_fftree, FFTree};
use super::BehaviorError;

/// Depth bound of the arbiter.
pub const ARBITER_DEPTH: usize = 4;

/// Decision tree over the per-family tree outputs and the three day flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arbiter {
    Leaf(usize),
    Split {
        feature: usize,
        /// Subtree for feature false / true.
        no: Box<Arbiter>,
        yes: Box<Arbiter>,
    },
}

impl Arbiter {
    fn classify(&self, features: &[bool]) -> usize {
        match self {
            Arbiter::Leaf(c) => *c,
            Arbiter::Split { feature, no, yes } => {
                if features[*feature] {
                    yes.classify(features)
                } else {
                    no.classify(features)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Arbiter::Leaf(_) => 0,
            Arbiter::Split { no, yes, .. } => 1 + no.depth().max(yes.depth()),
        }
    }
}

/// Per-family fast-and-frugal trees with an arbiter choosing one family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEnsemble {
    /// Families in identifier order; arbiter classes index this list.
    pub families: Vec<String>,
    pub trees: BTreeMap<String, FFTree>,
    pub arbiter: Arbiter,
    pub trained_on: usize,
}

impl BehaviorEnsemble {
    fn features(&self, cues: &CueVector) -> Vec<bool> {
        let mut f: Vec<bool> = self
            .families
            .iter()
            .map(|fam| self.trees.get(fam).is_some_and(|t| t.fires(cues)))
            .collect();
        f.extend([cues.weekday, cues.going_to_office, cues.guests_expected]);
        f
    }

    /// The predicted action family for the next step.
    pub fn predict_family(&self, cues: &CueVector) -> &str {
        &self.families[self.arbiter.classify(&self.features(cues))]
    }

    /// Fraction of `traces` whose family is predicted correctly.
    pub fn accuracy(&self, traces: &[(CueVector, String)]) -> f64 {
        if traces.is_empty() {
            return 0.0;
        }
        let hits = traces.iter().filter(|(c, a)| self.predict_family(c) == a).count();
        hits as f64 / traces.len() as f64
    }
}

/// Learns one tree per observed family (one-vs-rest) and an arbiter over
/// their outputs.
pub fn learn_ensemble(traces: &[(CueVector, String)], tree_depth: usize) -> Result<BehaviorEnsemble, BehaviorError> {
    let families: Vec<String> = traces
        .iter()
        .map(|(_, a)| a.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if families.len() < 2 {
        return Err(BehaviorError::Precondition(
            "traces must cover at least two action families".into(),
        ));
    }
    let mut trees = BTreeMap::new();
    for fam in &families {
        let examples: Vec<(CueVector, bool)> = traces.iter().map(|(c, a)| (c.clone(), a == fam)).collect();
        trees.insert(fam.clone(), learn_fftree(&examples, fam, tree_depth)?);
    }
    let mut ens = BehaviorEnsemble {
        families,
        trees,
        arbiter: Arbiter::Leaf(0),
        trained_on: traces.len(),
    };
    let rows: Vec<(Vec<bool>, usize)> = traces
        .iter()
        .map(|(c, a)| {
            let class = ens.families.iter().position(|f| f == a).expect("family collected above");
            (ens.features(c), class)
        })
        .collect();
    let n_features = ens.families.len() + 3;
    ens.arbiter = grow(&rows, n_features, ens.families.len(), ARBITER_DEPTH);
    Ok(ens)
}

fn class_counts(rows: &[&(Vec<bool>, usize)], classes: usize) -> Vec<usize> {
    let mut c = vec![0; classes];
    for (_, y) in rows {
        c[*y] += 1;
    }
    c
}

fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n as f64;
            p * p
        })
        .sum::<f64>()
}

/// Majority class; ties go to the lowest family index.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn grow(rows: &[(Vec<bool>, usize)], n_features: usize, classes: usize, depth: usize) -> Arbiter {
    let refs: Vec<&(Vec<bool>, usize)> = rows.iter().collect();
    grow_refs(&refs, n_features, classes, depth)
}

fn grow_refs(rows: &[&(Vec<bool>, usize)], n_features: usize, classes: usize, depth: usize) -> Arbiter {
    let counts = class_counts(rows, classes);
    let leaf = Arbiter::Leaf(majority(&counts));
    let parent = gini(&counts);
    if depth == 0 || parent == 0.0 || rows.len() < 2 {
        return leaf;
    }
    let n = rows.len() as f64;
    let mut best: Option<(f64, usize)> = None;
    for f in 0..n_features {
        let (yes, no): (Vec<_>, Vec<_>) = rows.iter().partition(|(x, _)| x[f]);
        if yes.is_empty() || no.is_empty() {
            continue;
        }
        let w = yes.len() as f64 / n * gini(&class_counts(&yes, classes))
            + no.len() as f64 / n * gini(&class_counts(&no, classes));
        if best.is_none_or(|(b, _)| w < b - 1e-12) {
            best = Some((w, f));
        }
    }
    let Some((w, feature)) = best else { return leaf };
    if w >= parent - 1e-12 {
        return leaf;
    }
    let (yes, no): (Vec<_>, Vec<_>) = rows.iter().copied().partition(|(x, _)| x[feature]);
    let no_t = grow_refs(&no, n_features, classes, depth - 1);
    let yes_t = grow_refs(&yes, n_features, classes, depth - 1);
    if no_t == yes_t {
        return no_t;
    }
    Arbiter::Split {
        feature,
        no: Box::new(no_t),
        yes: Box::new(yes_t),
    }
}
