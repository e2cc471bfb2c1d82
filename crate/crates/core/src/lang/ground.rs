//! Eager grounding of schematic axioms over the declared objects.

use std::collections::BTreeSet;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::ast::{Axiom, AxiomKind, BodyItem, DomainDescription, Resolution, SchemaAtom, SchemaLit, Term};
use super::system::{GroundCausal, GroundExec, TransitionSystem};
use super::LangError;
use crate::kernel::{
    Atom, AtomId, Bits, ConstraintSet, FluentDecl, FluentKind, GroundLit, GroundRule, SortTree, Universe,
};

/// Default ceiling on the number of grounded atoms.
pub const DEFAULT_ATOM_BUDGET: usize = 200_000;

/// Grounds `domain` at `resolution` with the default atom budget.
pub fn ground(domain: &DomainDescription, resolution: Resolution) -> Result<TransitionSystem, LangError> {
    ground_with_budget(domain, resolution, DEFAULT_ATOM_BUDGET)
}

fn tuples<'a>(sorts: &'a SortTree, arg_sorts: &[String]) -> Result<Vec<Vec<&'a str>>, LangError> {
    let mut out: Vec<Vec<&str>> = vec![Vec::new()];
    for s in arg_sorts {
        let id = sorts.id(s).map_err(|e| LangError::Sort { line: 0, msg: e.to_string() })?;
        let members = sorts.members(id);
        let mut next = Vec::with_capacity(out.len() * members.len());
        for prefix in &out {
            for m in &members {
                let mut t = prefix.clone();
                t.push(*m);
                next.push(t);
            }
        }
        out = next;
    }
    Ok(out)
}

fn count_tuples(sorts: &SortTree, arg_sorts: &[String]) -> usize {
    arg_sorts
        .iter()
        .map(|s| sorts.id(s).map_or(0, |id| sorts.members(id).len()))
        .fold(1usize, |acc, n| acc.saturating_mul(n))
}

pub fn ground_with_budget(
    domain: &DomainDescription,
    resolution: Resolution,
    budget: usize,
) -> Result<TransitionSystem, LangError> {
    let level = domain.level(resolution);
    let sorts = &domain.sorts;
    let fluents: Vec<&FluentDecl> = level.fluents.iter().chain(domain.statics.iter()).collect();

    let mut total = 0usize;
    let mut biggest = Vec::new();
    for d in &fluents {
        let n = count_tuples(sorts, &d.arg_sorts);
        total = total.saturating_add(n);
        biggest.push((n, d.name.clone()));
    }
    if total > budget {
        biggest.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let detail: Vec<String> = biggest.iter().take(3).map(|(n, name)| format!("{name}: {n}")).collect();
        return Err(LangError::AtomBudget {
            atoms: total,
            budget,
            detail: detail.join(", "),
        });
    }

    let mut universe = Universe::new();
    for d in &fluents {
        for t in tuples(sorts, &d.arg_sorts)? {
            universe.insert(Atom::new(d.name.clone(), &t), d.kind);
        }
    }
    let facts: BTreeSet<&Atom> = domain.facts.iter().collect();

    let mut actions = Vec::new();
    let mut actor_kind = Vec::new();
    for d in &level.actions {
        for t in tuples(sorts, &d.arg_sorts)? {
            actions.push(Atom::new(d.name.clone(), &t));
            actor_kind.push(d.actor);
        }
    }
    let action_index: FxHashMap<Atom, usize> = actions.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

    let universe = Arc::new(universe);
    let mut static_bits = Bits::zeros(universe.len());
    for (id, atom, kind) in universe.iter() {
        if kind == FluentKind::Static && facts.contains(atom) {
            static_bits.set(id, true);
        }
    }

    let mut rules = Vec::new();
    let mut causal: Vec<Vec<GroundCausal>> = vec![Vec::new(); actions.len()];
    let mut exec: Vec<Vec<GroundExec>> = vec![Vec::new(); actions.len()];
    let ctx = Ctx {
        domain,
        universe: &universe,
        facts: &facts,
    };
    for ax in domain.axioms(resolution) {
        ctx.instances(ax, &mut |binding| {
            let body = ctx.ground_body(ax, binding);
            match ax.kind {
                AxiomKind::StateConstraint => {
                    let head = ctx.ground_lit(&ax.head, binding);
                    rules.push(GroundRule { head, body });
                }
                AxiomKind::CausalLaw => {
                    let act = subst_atom(ax.action.as_ref().expect("causal law action"), binding);
                    let Some(&ai) = action_index.get(&act) else { return };
                    let head = ctx.ground_lit(&ax.head, binding);
                    causal[ai].push(GroundCausal { head, body });
                }
                AxiomKind::Executability => {
                    let act = subst_atom(&ax.head.atom, binding);
                    let Some(&ai) = action_index.get(&act) else { return };
                    let text = render_instance(ax, binding);
                    exec[ai].push(GroundExec { body, text });
                }
            }
        })?;
    }
    let constraints = ConstraintSet::new(universe.clone(), rules)?;
    let mut by_actor: FxHashMap<String, Vec<usize>> = FxHashMap::default();
    for (i, a) in actions.iter().enumerate() {
        if let Some(first) = a.args.first() {
            by_actor.entry(first.clone()).or_default().push(i);
        }
    }
    Ok(TransitionSystem::from_parts(
        resolution,
        universe,
        constraints,
        actions,
        action_index,
        actor_kind,
        causal,
        exec,
        static_bits,
        by_actor,
        domain.sorts.clone(),
    ))
}

struct Ctx<'a> {
    domain: &'a DomainDescription,
    universe: &'a Universe,
    facts: &'a BTreeSet<&'a Atom>,
}

type Binding<'a> = Vec<(&'a str, &'a str)>;

fn lookup<'b>(binding: &'b Binding, v: &str) -> Option<&'b str> {
    binding.iter().find(|(n, _)| *n == v).map(|(_, o)| *o)
}

fn subst_atom(a: &SchemaAtom, binding: &Binding) -> Atom {
    Atom {
        name: a.name.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => lookup(binding, v).expect("bound variable").to_string(),
            })
            .collect(),
    }
}

fn term_value<'b>(t: &'b Term, binding: &'b Binding) -> Option<&'b str> {
    match t {
        Term::Const(c) => Some(c),
        Term::Var(v) => lookup(binding, v),
    }
}

fn render_instance(ax: &Axiom, binding: &Binding) -> String {
    let sub = |l: &SchemaLit| {
        let a = subst_atom(&l.atom, binding);
        if l.positive {
            a.to_string()
        } else {
            format!("-{a}")
        }
    };
    let body: Vec<String> = ax
        .body
        .iter()
        .filter_map(|b| match b {
            BodyItem::Lit(l) => Some(sub(l)),
            _ => None,
        })
        .collect();
    format!("impossible {} if {}", subst_atom(&ax.head.atom, binding), body.join(", "))
}

impl<'a> Ctx<'a> {
    fn is_static(&self, name: &str) -> bool {
        self.domain.is_static(name)
    }

    fn ground_lit(&self, l: &SchemaLit, binding: &Binding) -> GroundLit {
        let atom = subst_atom(&l.atom, binding);
        let id = self.universe.id(&atom).expect("sort-correct atom is in the universe");
        GroundLit::new(id, l.positive)
    }

    /// Non-static body literals (statics were checked while binding).
    fn ground_body(&self, ax: &Axiom, binding: &Binding) -> Vec<GroundLit> {
        let mut out = Vec::new();
        for l in ax.body_lits() {
            if self.is_static(&l.atom.name) {
                continue;
            }
            out.push(self.ground_lit(l, binding));
        }
        let mut seen: Vec<AtomId> = Vec::new();
        out.retain(|l| {
            if seen.contains(&l.atom) {
                false
            } else {
                seen.push(l.atom);
                true
            }
        });
        out
    }

    /// Enumerates sort-respecting bindings, pruning on static literals and
    /// (in)equalities as soon as their variables are bound.
    fn instances(&self, ax: &'a Axiom, emit: &mut dyn FnMut(&Binding)) -> Result<(), LangError> {
        let sorts = &self.domain.sorts;
        let mut domains: Vec<(&str, Vec<&str>)> = Vec::new();
        for (v, s) in &ax.variables {
            let id = sorts.id(s).map_err(|e| LangError::Sort { line: 0, msg: e.to_string() })?;
            domains.push((v.as_str(), sorts.members(id)));
        }
        // Each check runs at the depth where its last variable gets bound.
        let depth_of = |vars: &[&str]| -> usize {
            vars.iter()
                .map(|v| domains.iter().position(|(n, _)| n == v).map_or(0, |p| p + 1))
                .max()
                .unwrap_or(0)
        };
        let mut checks: Vec<Vec<&BodyItem>> = vec![Vec::new(); domains.len() + 1];
        for item in &ax.body {
            let vars: Vec<&str> = match item {
                BodyItem::Lit(l) if self.is_static(&l.atom.name) => l.atom.args.iter().filter_map(|t| t.var()).collect(),
                BodyItem::Lit(_) => continue,
                BodyItem::Neq(a, b) | BodyItem::Eq(a, b) => [a, b].iter().filter_map(|t| t.var()).collect(),
            };
            checks[depth_of(&vars)].push(item);
        }
        let mut binding: Binding = Vec::with_capacity(domains.len());
        self.bind(&domains, &checks, 0, &mut binding, emit);
        Ok(())
    }

    fn passes(&self, item: &BodyItem, binding: &Binding) -> bool {
        match item {
            BodyItem::Neq(a, b) => term_value(a, binding) != term_value(b, binding),
            BodyItem::Eq(a, b) => term_value(a, binding) == term_value(b, binding),
            BodyItem::Lit(l) => {
                let atom = subst_atom(&l.atom, binding);
                self.facts.contains(&atom) == l.positive
            }
        }
    }

    fn bind<'b>(
        &self,
        domains: &'b [(&'b str, Vec<&'b str>)],
        checks: &[Vec<&BodyItem>],
        depth: usize,
        binding: &mut Vec<(&'b str, &'b str)>,
        emit: &mut dyn FnMut(&Binding),
    ) {
        if !checks[depth].iter().all(|c| self.passes(c, binding)) {
            return;
        }
        if depth == domains.len() {
            emit(binding);
            return;
        }
        let (var, values) = &domains[depth];
        for v in values {
            binding.push((var, v));
            self.bind(domains, checks, depth + 1, binding, emit);
            binding.pop();
        }
    }
}

/// Number of grounded instances of each axiom kind, for diagnostics.
pub fn instance_counts(ts: &TransitionSystem) -> (usize, usize, usize) {
    let causal = (0..ts.action_count()).map(|a| ts.causal_laws(a).len()).sum();
    let exec = (0..ts.action_count()).map(|a| ts.exec_conditions(a).len()).sum();
    (ts.constraints().len(), causal, exec)
}
