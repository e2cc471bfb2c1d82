//! Zooming: the fine-resolution part of a domain relevant to one coarse
//! action, plus the fine goal that implements the action.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use super::ast::{DomainDescription, Resolution};
use super::ground::ground;
use super::system::TransitionSystem;
use super::LangError;
use crate::kernel::{Action, Atom, FluentKind, Goal, Literal, State};

/// Output of [`Zoomer::zoom`].
#[derive(Clone, Debug)]
pub struct ZoomResult {
    pub system: Arc<TransitionSystem>,
    /// `None` when the coarse action would change nothing.
    pub goal: Option<Goal>,
    /// Objects kept in the zoomed system.
    pub objects: BTreeSet<String>,
}

/// Holds the coarse grounding and caches restricted fine groundings.
pub struct Zoomer {
    domain: DomainDescription,
    coarse: TransitionSystem,
    cache: Mutex<BTreeMap<BTreeSet<String>, Arc<TransitionSystem>>>,
}

impl Zoomer {
    pub fn new(domain: DomainDescription) -> Result<Self, LangError> {
        let coarse = ground(&domain, Resolution::Coarse)?;
        Ok(Zoomer {
            domain,
            coarse,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn domain(&self) -> &DomainDescription {
        &self.domain
    }

    pub fn coarse(&self) -> &TransitionSystem {
        &self.coarse
    }

    /// Coarse view of a fine state: coarse inertial atoms take the value of
    /// the same-named fine atom (derived through the bridge axioms).
    pub fn abstract_state(&self, fine: &State) -> Result<State, LangError> {
        let atoms: Vec<&Atom> = fine.true_atoms().collect();
        self.coarse.state_from(atoms, true)
    }

    /// Fine system restricted to `objects`, grounded once per object set.
    pub fn restricted(&self, objects: &BTreeSet<String>) -> Result<Arc<TransitionSystem>, LangError> {
        if let Some(ts) = self.cache.lock().expect("zoom cache poisoned").get(objects) {
            return Ok(ts.clone());
        }
        let ts = Arc::new(ground(&self.domain.restrict(objects), Resolution::Fine)?);
        self.cache
            .lock()
            .expect("zoom cache poisoned")
            .insert(objects.clone(), ts.clone());
        Ok(ts)
    }

    pub fn zoom(&self, coarse_action: &Action, fine: &State) -> Result<ZoomResult, LangError> {
        let abs = self.abstract_state(fine)?;
        let id = self
            .coarse
            .action_id(coarse_action)
            .ok_or_else(|| LangError::UnknownAction(coarse_action.to_string()))?;
        if let Some(cond) = self.coarse.blocking_condition(abs.bits(), id) {
            return Err(LangError::NotExecutable {
                action: coarse_action.to_string(),
                condition: cond.to_string(),
            });
        }
        let refined = self.domain.fine.actions.iter().any(|a| {
            a.name == coarse_action.name || self.domain.refines.get(&a.name) == Some(&coarse_action.name)
        });
        if !refined {
            return Err(LangError::Unrefinable {
                action: coarse_action.to_string(),
                reason: "no fine action implements it".into(),
            });
        }
        let next = self.coarse.successor_ids(abs.bits(), &[id], false)?;
        let universe = self.coarse.universe();
        let effects: Vec<Literal> = self
            .coarse
            .changed_inertial(abs.bits(), &next)
            .into_iter()
            .map(|a| Literal {
                atom: universe.atom(a).clone(),
                positive: next.get(a),
            })
            .collect();
        let objects = self.relevant_objects(coarse_action, fine);
        let system = self.restricted(&objects)?;
        for e in &effects {
            if system.universe().id(&e.atom).is_none() {
                return Err(LangError::Unrefinable {
                    action: coarse_action.to_string(),
                    reason: format!("effect `{}` has no fine counterpart", e.atom),
                });
            }
        }
        let goal = if effects.is_empty() {
            None
        } else {
            Some(Goal::new(coarse_action.to_string(), effects)?)
        };
        Ok(ZoomResult { system, goal, objects })
    }

    /// Objects the fine system needs to implement `action`: its arguments,
    /// the actor's current region, the fine components of every region
    /// involved, what the actor holds, and the places/supports tied to the
    /// relevant objects. Other agents are left out.
    pub fn relevant_objects(&self, action: &Action, fine: &State) -> BTreeSet<String> {
        let d = &self.domain;
        let sorts = &d.sorts;
        let (place_sort, region_sort) = d.component_sorts().unwrap_or(("", ""));
        let is_in = |o: &str, sort: &str| sorts.id(sort).is_ok_and(|s| sorts.is_member(o, s));
        let actor = action.args.first().cloned().unwrap_or_default();
        let agent_root = sorts.sort_of(&actor).map(|s| {
            let chain = sorts.ancestry(s);
            chain.last().copied().unwrap_or_default().to_string()
        });
        let is_agent = |o: &str| agent_root.as_deref().is_some_and(|r| is_in(o, r));
        let is_location = |o: &str| is_in(o, place_sort) || is_in(o, region_sort);

        let mut keep: BTreeSet<String> = action.args.iter().cloned().collect();
        let inertial: Vec<&Atom> = fine
            .true_atoms()
            .filter(|a| fine.universe().id(a).is_some_and(|id| fine.universe().kind(id) != FluentKind::Static))
            .collect();
        for a in &inertial {
            if a.mentions(&actor) {
                keep.extend(a.args.iter().filter(|o| !is_agent(o) || **o == actor).cloned());
            }
        }
        let mut frontier: Vec<String> = keep.iter().filter(|o| !is_location(o) && !is_agent(o)).cloned().collect();
        let mut expanded = BTreeSet::new();
        while let Some(x) = frontier.pop() {
            if !expanded.insert(x.clone()) {
                continue;
            }
            let linked = inertial
                .iter()
                .copied()
                .chain(d.facts.iter())
                .filter(|a| a.mentions(&x))
                .flat_map(|a| a.args.iter());
            for o in linked {
                if is_agent(o) && *o != actor {
                    continue;
                }
                if keep.insert(o.clone()) && !is_location(o) && !is_agent(o) {
                    frontier.push(o.clone());
                }
            }
        }
        let places: Vec<String> = keep.iter().filter(|o| is_in(o, place_sort)).cloned().collect();
        for p in places {
            if let Some(r) = d.component_map.get(&p) {
                keep.insert(r.clone());
            }
        }
        let regions: Vec<String> = keep.iter().filter(|o| is_in(o, region_sort)).cloned().collect();
        for r in regions {
            keep.extend(d.components_of(&r).into_iter().map(str::to_string));
        }
        keep
    }
}

/// One-shot zoom without caching.
pub fn zoom(domain: &DomainDescription, coarse_action: &Action, fine: &State) -> Result<ZoomResult, LangError> {
    Zoomer::new(domain.clone())?.zoom(coarse_action, fine)
}
