//! Constraint closure over grounded state constraints.
//!
//! Rules whose head is a defined fluent are *definitions*: a defined atom is
//! true exactly when the body of one of its definitions holds (closed world),
//! evaluated stratum by stratum. All other rules *propagate*: whenever a body
//! holds the head is forced. A forced head may overwrite a soft (inertial
//! default) value; overwriting a hard value is an inconsistency.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use super::atoms::{Atom, AtomId, FluentKind, GroundLit, Universe};
use super::state::{Bits, State};
use super::KernelError;

/// A grounded state constraint `head if body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundRule {
    pub head: GroundLit,
    pub body: Vec<GroundLit>,
}

impl GroundRule {
    pub fn render(&self, universe: &Universe) -> String {
        let head = universe.literal(self.head).to_string();
        if self.body.is_empty() {
            return head;
        }
        let body: Vec<String> = self
            .body
            .iter()
            .map(|l| universe.literal(*l).to_string())
            .collect();
        format!("{head} if {}", body.join(", "))
    }
}

/// Grounded constraints with the indices the closure needs.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    universe: Arc<Universe>,
    propagators: Vec<GroundRule>,
    definitions: Vec<GroundRule>,
    /// atom -> propagators mentioning it (body or head)
    touch: Vec<Vec<u32>>,
    /// atom -> definitions whose body mentions it
    def_by_body: Vec<Vec<u32>>,
    /// defined atom -> its definitions
    def_by_head: Vec<Vec<u32>>,
    /// position of each defined atom in evaluation order
    topo_pos: Vec<u32>,
    /// defined atoms grouped into strongly connected components, in order
    components: Vec<Vec<AtomId>>,
    recursive: bool,
}

impl ConstraintSet {
    pub fn new(universe: Arc<Universe>, rules: Vec<GroundRule>) -> Result<Self, KernelError> {
        let n = universe.len();
        let mut propagators = Vec::new();
        let mut definitions = Vec::new();
        for r in rules {
            if universe.kind(r.head.atom) == FluentKind::Defined {
                if !r.head.positive {
                    return Err(KernelError::NegativeDefinedHead(r.render(&universe)));
                }
                definitions.push(r);
            } else {
                propagators.push(r);
            }
        }
        let mut touch = vec![Vec::new(); n];
        for (i, r) in propagators.iter().enumerate() {
            let mut seen: Vec<AtomId> = r.body.iter().map(|l| l.atom).collect();
            seen.push(r.head.atom);
            seen.sort();
            seen.dedup();
            for a in seen {
                touch[a.index()].push(i as u32);
            }
        }
        let mut def_by_body = vec![Vec::new(); n];
        let mut def_by_head = vec![Vec::new(); n];
        for (i, r) in definitions.iter().enumerate() {
            def_by_head[r.head.atom.index()].push(i as u32);
            let mut seen: Vec<AtomId> = r.body.iter().map(|l| l.atom).collect();
            seen.sort();
            seen.dedup();
            for a in seen {
                def_by_body[a.index()].push(i as u32);
            }
        }
        let (components, recursive) = order_defined(&universe, &definitions, &def_by_head)?;
        let mut topo_pos = vec![u32::MAX; n];
        let mut pos = 0;
        for comp in &components {
            for a in comp {
                topo_pos[a.index()] = pos;
                pos += 1;
            }
        }
        Ok(ConstraintSet {
            universe,
            propagators,
            definitions,
            touch,
            def_by_body,
            def_by_head,
            topo_pos,
            components,
            recursive,
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn propagators(&self) -> &[GroundRule] {
        &self.propagators
    }

    pub fn definitions(&self) -> &[GroundRule] {
        &self.definitions
    }

    pub fn len(&self) -> usize {
        self.propagators.len() + self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First grounded constraint violated by `bits`, rendered.
    pub fn first_violation(&self, bits: &Bits) -> Option<String> {
        for r in &self.propagators {
            if bits.all(&r.body) && !bits.holds(r.head) {
                return Some(r.render(&self.universe));
            }
        }
        for comp in &self.components {
            for &a in comp {
                if bits.get(a) != self.derive(bits, a) {
                    return Some(format!("closed-world definition of {}", self.universe.atom(a)));
                }
            }
        }
        None
    }

    fn derive(&self, bits: &Bits, head: AtomId) -> bool {
        self.def_by_head[head.index()]
            .iter()
            .any(|&d| bits.all(&self.definitions[d as usize].body))
    }

    /// Recomputes every defined atom from scratch.
    pub(crate) fn settle_all(&self, bits: &mut Bits) -> Vec<AtomId> {
        let mut changed = Vec::new();
        for comp in &self.components {
            let before: Vec<bool> = comp.iter().map(|a| bits.get(*a)).collect();
            for a in comp {
                bits.set(*a, false);
            }
            loop {
                let mut grew = false;
                for &a in comp {
                    if !bits.get(a) && self.derive(bits, a) {
                        bits.set(a, true);
                        grew = true;
                    }
                }
                if !grew || comp.len() == 1 {
                    break;
                }
            }
            for (a, b) in comp.iter().zip(before) {
                if bits.get(*a) != b {
                    changed.push(*a);
                }
            }
        }
        changed
    }

    /// Recomputes defined atoms downstream of `changed`; returns those whose
    /// value moved.
    fn settle(&self, bits: &mut Bits, changed: &[AtomId]) -> Vec<AtomId> {
        if self.definitions.is_empty() {
            return Vec::new();
        }
        if self.recursive {
            return self.settle_all(bits);
        }
        let mut heap = BinaryHeap::new();
        let mut queued = rustc_hash::FxHashSet::default();
        let mut push = |heap: &mut BinaryHeap<Reverse<(u32, AtomId)>>, a: AtomId| {
            for &d in &self.def_by_body[a.index()] {
                let h = self.definitions[d as usize].head.atom;
                if queued.insert(h) {
                    heap.push(Reverse((self.topo_pos[h.index()], h)));
                }
            }
        };
        for &a in changed {
            push(&mut heap, a);
        }
        let mut moved = Vec::new();
        while let Some(Reverse((_, h))) = heap.pop() {
            let v = self.derive(bits, h);
            if v != bits.get(h) {
                bits.set(h, v);
                moved.push(h);
                push(&mut heap, h);
            }
        }
        moved
    }

    /// Runs propagation to a fixpoint. `hard` marks atoms that must not be
    /// overwritten; statics are always hard. `changed` seeds the atoms whose
    /// rules need checking (everything, for a from-scratch closure).
    pub(crate) fn propagate(
        &self,
        bits: &mut Bits,
        hard: &mut Bits,
        changed: Vec<AtomId>,
        reverse: bool,
    ) -> Result<(), String> {
        let mut touched = changed;
        let moved = self.settle(bits, &touched);
        touched.extend(moved);
        let mut candidates: Vec<u32> = Vec::new();
        loop {
            candidates.clear();
            for a in &touched {
                candidates.extend_from_slice(&self.touch[a.index()]);
            }
            candidates.sort_unstable();
            candidates.dedup();
            if reverse {
                candidates.reverse();
            }
            let mut first_violation = None;
            let mut fix = None;
            for &ri in &candidates {
                let r = &self.propagators[ri as usize];
                if bits.holds(r.head) || !bits.all(&r.body) {
                    continue;
                }
                if first_violation.is_none() {
                    first_violation = Some(ri);
                }
                let h = r.head.atom;
                if !hard.get(h) && self.universe.kind(h) == FluentKind::Inertial {
                    fix = Some(ri);
                    break;
                }
            }
            match (fix, first_violation) {
                (Some(ri), _) => {
                    let head = self.propagators[ri as usize].head;
                    bits.set(head.atom, head.positive);
                    hard.set(head.atom, true);
                    touched.push(head.atom);
                    let moved = self.settle(bits, &[head.atom]);
                    touched.extend(moved);
                }
                (None, Some(ri)) => {
                    return Err(self.propagators[ri as usize].render(&self.universe));
                }
                (None, None) => return Ok(()),
            }
        }
    }

    /// Closure with a uniqueness check: forward and reverse rule orders must
    /// agree on the outcome.
    pub(crate) fn close_checked(
        &self,
        bits: Bits,
        hard: Bits,
        changed: Vec<AtomId>,
        check_order: bool,
    ) -> Result<Bits, KernelError> {
        let mut fwd = bits.clone();
        let mut fwd_hard = hard.clone();
        let forward = self.propagate(&mut fwd, &mut fwd_hard, changed.clone(), false);
        if check_order {
            let mut rev = bits;
            let mut rev_hard = hard;
            let backward = self.propagate(&mut rev, &mut rev_hard, changed, true);
            match (&forward, &backward) {
                (Ok(()), Ok(())) if fwd != rev => {
                    let differing = fwd
                        .diff(&rev)
                        .first()
                        .map(|a| self.universe.atom(*a).to_string())
                        .unwrap_or_default();
                    return Err(KernelError::NonUniqueFixpoint(differing));
                }
                (Ok(()), Err(c)) | (Err(c), Ok(())) => {
                    return Err(KernelError::NonUniqueFixpoint(c.clone()));
                }
                _ => {}
            }
        }
        forward.map_err(KernelError::InconsistentState)?;
        Ok(fwd)
    }
}

/// Atom, its dependency edges and the next edge to visit.
type TarjanFrame = (AtomId, Vec<(AtomId, bool)>, usize);

fn order_defined(
    universe: &Universe,
    definitions: &[GroundRule],
    def_by_head: &[Vec<u32>],
) -> Result<(Vec<Vec<AtomId>>, bool), KernelError> {
    // Tarjan's SCC over defined atoms; edges head -> defined body atom.
    // Every defined atom in the universe is evaluated, even with no rules.
    let all_defined: Vec<AtomId> = universe
        .iter()
        .filter(|(_, _, k)| *k == FluentKind::Defined)
        .map(|(id, _, _)| id)
        .collect();
    let n = universe.len();
    let deps = |a: AtomId| -> Vec<(AtomId, bool)> {
        let mut out = Vec::new();
        for &d in &def_by_head[a.index()] {
            for l in &definitions[d as usize].body {
                if universe.kind(l.atom) == FluentKind::Defined {
                    out.push((l.atom, l.positive));
                }
            }
        }
        out
    };
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<AtomId> = Vec::new();
    let mut comps: Vec<Vec<AtomId>> = Vec::new();
    let mut counter = 0u32;
    for &root in &all_defined {
        if index[root.index()] != u32::MAX {
            continue;
        }
        // iterative Tarjan
        let mut work: Vec<TarjanFrame> = vec![(root, deps(root), 0)];
        index[root.index()] = counter;
        low[root.index()] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root.index()] = true;
        while let Some((v, edges, i)) = work.last_mut() {
            let v = *v;
            if *i < edges.len() {
                let (w, _) = edges[*i];
                *i += 1;
                if index[w.index()] == u32::MAX {
                    index[w.index()] = counter;
                    low[w.index()] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w.index()] = true;
                    let d = deps(w);
                    work.push((w, d, 0));
                } else if on_stack[w.index()] {
                    low[v.index()] = low[v.index()].min(index[w.index()]);
                }
            } else {
                work.pop();
                if let Some((parent, _, _)) = work.last() {
                    let p = *parent;
                    low[p.index()] = low[p.index()].min(low[v.index()]);
                }
                if low[v.index()] == index[v.index()] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w.index()] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort();
                    comps.push(comp);
                }
            }
        }
    }
    // Tarjan emits components in reverse topological order of the edge
    // relation head -> dependency, which is exactly evaluation order.
    let mut recursive = false;
    let mut comp_of = vec![u32::MAX; n];
    for (ci, comp) in comps.iter().enumerate() {
        for a in comp {
            comp_of[a.index()] = ci as u32;
        }
    }
    for comp in &comps {
        for &a in comp {
            for (b, positive) in deps(a) {
                if comp_of[b.index()] == comp_of[a.index()] {
                    if !positive {
                        return Err(KernelError::Unstratified(universe.atom(a).to_string()));
                    }
                    recursive = true;
                }
            }
        }
    }
    Ok((comps, recursive))
}

/// An assignment to some atoms of a universe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialState {
    values: BTreeMap<Atom, bool>,
}

impl PartialState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, atom: Atom, value: bool) -> &mut Self {
        self.values.insert(atom, value);
        self
    }

    pub fn get(&self, atom: &Atom) -> Option<bool> {
        self.values.get(atom).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, bool)> {
        self.values.iter().map(|(a, v)| (a, *v))
    }

    /// Assigns every inertial and static atom of `universe`: true if listed
    /// in `true_atoms`, false otherwise.
    pub fn closed_world<'a>(universe: &Universe, true_atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut p = PartialState::new();
        for (_, atom, kind) in universe.iter() {
            if kind != FluentKind::Defined {
                p.set(atom.clone(), false);
            }
        }
        for a in true_atoms {
            p.set(a.clone(), true);
        }
        p
    }
}

/// Extends `partial` to a complete state: defined fluents get their
/// closed-world values and every constraint is checked.
///
/// The partial assignment must cover all inertial and static atoms; values
/// given for defined atoms are ignored.
pub fn close_state(partial: &PartialState, constraints: &ConstraintSet) -> Result<State, KernelError> {
    let universe = constraints.universe();
    let mut bits = Bits::zeros(universe.len());
    let mut hard = Bits::zeros(universe.len());
    for (atom, value) in partial.iter() {
        let id = universe.lookup(atom)?;
        if universe.kind(id) != FluentKind::Defined {
            bits.set(id, value);
            hard.set(id, true);
        }
    }
    for (id, atom, kind) in universe.iter() {
        if kind != FluentKind::Defined && !hard.get(id) {
            return Err(KernelError::IncompleteAssignment(atom.to_string()));
        }
    }
    let all: Vec<AtomId> = (0..universe.len() as u32).map(AtomId).collect();
    let bits = constraints.close_checked(bits, hard, all, true)?;
    Ok(State::from_bits(universe.clone(), bits))
}
