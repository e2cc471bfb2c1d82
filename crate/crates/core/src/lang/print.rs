use std::fmt::Write;

use super::ast::{DomainDescription, Level};
use crate::kernel::{ActorKind, FluentKind};

/// Renders a domain back to `.ald` text that parses to an equal description.
pub fn pretty_print(d: &DomainDescription) -> String {
    let mut out = String::new();
    out.push_str("sorts\n");
    for (id, name) in d.sorts.sorts() {
        match d.sorts.parent(id) {
            Some(p) => writeln!(out, "  {name} < {}.", d.sorts.name(p)).unwrap(),
            None => writeln!(out, "  {name}.").unwrap(),
        }
    }
    if d.sorts.objects().next().is_some() {
        out.push_str("objects\n");
        for (o, s) in d.sorts.objects() {
            writeln!(out, "  {o} : {}.", d.sorts.name(s)).unwrap();
        }
    }
    if !d.statics.is_empty() {
        out.push_str("statics\n");
        for s in &d.statics {
            writeln!(out, "  {}.", decl(&s.name, &s.arg_sorts)).unwrap();
        }
    }
    if !d.facts.is_empty() {
        out.push_str("facts\n");
        for f in &d.facts {
            writeln!(out, "  {f}.").unwrap();
        }
    }
    if !d.coarse.is_empty() {
        out.push_str("coarse\n");
        level(&mut out, &d.coarse);
    }
    if d.has_fine() || !d.bridge.is_empty() {
        out.push_str("fine\n");
        level(&mut out, &d.fine);
        if !d.bridge.is_empty() {
            out.push_str("bridge\n");
            for a in &d.bridge {
                writeln!(out, "  {a}").unwrap();
            }
        }
    }
    out
}

fn decl(name: &str, sorts: &[String]) -> String {
    if sorts.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", sorts.join(", "))
    }
}

fn level(out: &mut String, l: &Level) {
    let mut kind = None;
    for f in &l.fluents {
        if kind != Some(f.kind) {
            let word = match f.kind {
                FluentKind::Defined => "defined",
                _ => "inertial",
            };
            writeln!(out, "fluents {word}").unwrap();
            kind = Some(f.kind);
        }
        writeln!(out, "  {}.", decl(&f.name, &f.arg_sorts)).unwrap();
    }
    let mut actor = None;
    for a in &l.actions {
        if actor != Some(a.actor) {
            let word = match a.actor {
                ActorKind::Agent => "agent",
                ActorKind::Exo => "exo",
            };
            writeln!(out, "actions {word}").unwrap();
            actor = Some(a.actor);
        }
        writeln!(out, "  {}.", decl(&a.name, &a.arg_sorts)).unwrap();
    }
    if !l.axioms.is_empty() {
        out.push_str("axioms\n");
        for a in &l.axioms {
            writeln!(out, "  {a}").unwrap();
        }
    }
}
