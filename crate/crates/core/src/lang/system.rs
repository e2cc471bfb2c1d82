use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::ast::Resolution;
use super::LangError;
use crate::kernel::{
    close_state, Action, ActorKind, Atom, AtomId, Bits, ConstraintSet, FluentKind, GroundLit, KernelError,
    PartialState, SortTree, State, Universe,
};

/// Grounded causal law of one action: `action causes head if body`.
#[derive(Clone, Debug)]
pub struct GroundCausal {
    pub head: GroundLit,
    pub body: Vec<GroundLit>,
}

/// Grounded executability condition: the action is impossible when `body`
/// holds.
#[derive(Clone, Debug)]
pub struct GroundExec {
    pub body: Vec<GroundLit>,
    pub text: String,
}

/// A grounded domain at one resolution with its successor function.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    resolution: Resolution,
    universe: Arc<Universe>,
    constraints: ConstraintSet,
    actions: Vec<Action>,
    action_index: FxHashMap<Action, usize>,
    actor_kind: Vec<ActorKind>,
    causal: Vec<Vec<GroundCausal>>,
    exec: Vec<Vec<GroundExec>>,
    static_bits: Bits,
    static_mask: Bits,
    by_actor: FxHashMap<String, Vec<usize>>,
    sorts: SortTree,
}

impl TransitionSystem {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        resolution: Resolution,
        universe: Arc<Universe>,
        constraints: ConstraintSet,
        actions: Vec<Action>,
        action_index: FxHashMap<Action, usize>,
        actor_kind: Vec<ActorKind>,
        causal: Vec<Vec<GroundCausal>>,
        exec: Vec<Vec<GroundExec>>,
        static_bits: Bits,
        by_actor: FxHashMap<String, Vec<usize>>,
        sorts: SortTree,
    ) -> Self {
        let mut static_mask = Bits::zeros(universe.len());
        for (id, _, kind) in universe.iter() {
            if kind == FluentKind::Static {
                static_mask.set(id, true);
            }
        }
        TransitionSystem {
            resolution,
            universe,
            constraints,
            actions,
            action_index,
            actor_kind,
            causal,
            exec,
            static_bits,
            static_mask,
            by_actor,
            sorts,
        }
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn sorts(&self) -> &SortTree {
        &self.sorts
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, id: usize) -> &Action {
        &self.actions[id]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action_id(&self, action: &Action) -> Option<usize> {
        self.action_index.get(action).copied()
    }

    pub fn actor_kind(&self, id: usize) -> ActorKind {
        self.actor_kind[id]
    }

    /// Causal laws triggered by action `id`.
    pub fn causal_laws(&self, id: usize) -> &[GroundCausal] {
        &self.causal[id]
    }

    pub fn exec_conditions(&self, id: usize) -> &[GroundExec] {
        &self.exec[id]
    }

    /// Actions whose first argument is `actor`, in grounding order.
    pub fn actions_of(&self, actor: &str) -> &[usize] {
        self.by_actor.get(actor).map_or(&[], |v| v.as_slice())
    }

    /// Builds a closed state where exactly the listed inertial atoms are
    /// true; statics come from the domain facts. Atoms unknown to this
    /// universe are ignored when `lenient` is set, otherwise rejected.
    pub fn state_from<'a>(
        &self,
        true_atoms: impl IntoIterator<Item = &'a Atom>,
        lenient: bool,
    ) -> Result<State, LangError> {
        let mut p = PartialState::closed_world(&self.universe, std::iter::empty());
        for (id, atom, kind) in self.universe.iter() {
            if kind == FluentKind::Static {
                p.set(atom.clone(), self.static_bits.get(id));
            }
        }
        for a in true_atoms {
            match self.universe.id(a) {
                Some(id) if self.universe.kind(id) == FluentKind::Inertial => {
                    p.set(a.clone(), true);
                }
                Some(_) => {}
                None if lenient => {}
                None => return Err(KernelError::UniverseMismatch(a.to_string()).into()),
            }
        }
        Ok(close_state(&p, &self.constraints)?)
    }

    /// Re-closes an arbitrary assignment of inertial atoms (statics reset
    /// to the domain facts).
    pub fn close_bits(&self, bits: &Bits) -> Result<State, LangError> {
        let atoms: Vec<&Atom> = bits
            .ones()
            .filter(|id| self.universe.kind(*id) == FluentKind::Inertial)
            .map(|id| self.universe.atom(id))
            .collect();
        self.state_from(atoms, false)
    }

    /// Wraps bits that are already closed under this system's constraints.
    pub(crate) fn wrap_state(&self, bits: Bits) -> State {
        State::from_bits(self.universe.clone(), bits)
    }

    /// The first executability condition of `id` whose body holds.
    pub fn blocking_condition(&self, bits: &Bits, id: usize) -> Option<&str> {
        self.exec[id]
            .iter()
            .find(|e| bits.all(&e.body))
            .map(|e| e.text.as_str())
    }

    pub fn is_executable(&self, bits: &Bits, id: usize) -> bool {
        !self.exec[id].iter().any(|e| bits.all(&e.body))
    }

    /// Successor of `s` under a set of simultaneous actions.
    pub fn successor(&self, s: &State, actions: &[Action]) -> Result<State, LangError> {
        let mut ids = Vec::with_capacity(actions.len());
        for a in actions {
            ids.push(self.action_id(a).ok_or_else(|| LangError::UnknownAction(a.to_string()))?);
        }
        let bits = self.successor_ids(s.bits(), &ids, true)?;
        Ok(self.wrap_state(bits))
    }

    /// Successor over action ids. `check_order` additionally verifies that
    /// the closure is independent of rule order.
    pub fn successor_ids(&self, bits: &Bits, ids: &[usize], check_order: bool) -> Result<Bits, LangError> {
        for (i, &a) in ids.iter().enumerate() {
            let actor = self.actions[a].args.first();
            if actor.is_some() && ids[..i].iter().any(|&b| self.actions[b].args.first() == actor) {
                return Err(LangError::TwoActionsForActor(actor.cloned().unwrap_or_default()));
            }
            if let Some(cond) = self.blocking_condition(bits, a) {
                return Err(LangError::NotExecutable {
                    action: self.actions[a].to_string(),
                    condition: cond.to_string(),
                });
            }
        }
        let mut effects: Vec<GroundLit> = Vec::new();
        for &a in ids {
            for law in &self.causal[a] {
                if !bits.all(&law.body) {
                    continue;
                }
                if let Some(other) = effects.iter().find(|e| e.atom == law.head.atom) {
                    if other.positive != law.head.positive {
                        return Err(LangError::EffectConflict(self.universe.atom(law.head.atom).to_string()));
                    }
                    continue;
                }
                effects.push(law.head);
            }
        }
        let mut next = bits.clone();
        let mut hard = self.static_mask.clone();
        let mut changed: Vec<AtomId> = Vec::new();
        for e in &effects {
            if next.get(e.atom) != e.positive {
                next.set(e.atom, e.positive);
                changed.push(e.atom);
            }
            hard.set(e.atom, true);
        }
        if changed.is_empty() {
            return Ok(next);
        }
        self.constraints
            .close_checked(next, hard, changed, check_order)
            .map_err(LangError::from)
    }

    /// Inertial atoms that differ between two states.
    pub fn changed_inertial(&self, before: &Bits, after: &Bits) -> Vec<AtomId> {
        before
            .diff(after)
            .into_iter()
            .filter(|id| self.universe.kind(*id) == FluentKind::Inertial)
            .collect()
    }
}
