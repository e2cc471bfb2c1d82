//! Parser for `.ald` domain files.
//!
//! ```text
//! domain  := section+
//! section := "sorts" (ident ("<" ident)? ".")+
//!          | "objects" (ident ("," ident)* ":" ident ".")+
//!          | "statics" decl+ | "facts" (atom ".")+
//!          | "coarse" | "fine"
//!          | "fluents" ("inertial" | "defined") decl+
//!          | "actions" ("agent" | "exo") decl+
//!          | "axioms" axiom+ | "bridge" axiom+
//! axiom   := lit "causes" lit ("if" body)? "."
//!          | lit ("if" body)? "."
//!          | "impossible" atom "if" body "."
//! body    := item ("," item)*      item := lit | term "!=" term | term "=" term
//! lit     := "-"? ident ("(" term ("," term)* ")")?
//! ```
//!
//! Identifiers starting with an upper-case letter are variables. A trailing
//! `*` is part of an identifier (`at*`, `move*`). `%` starts a comment.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use super::ast::{Axiom, AxiomKind, BodyItem, DomainDescription, Level, Resolution, SchemaAtom, SchemaLit, Term};
use super::LangError;
use crate::kernel::{ActionDecl, ActorKind, Atom, FluentDecl, FluentKind, SortTree};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Lt,
    Neq,
    Eq,
    Minus,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, LangError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = |tok| Token { tok, line: line_no, col };
            match c {
                '%' => break,
                c if c.is_whitespace() => {
                    i += 1;
                }
                '(' => {
                    out.push(single(Tok::LParen));
                    i += 1;
                }
                ')' => {
                    out.push(single(Tok::RParen));
                    i += 1;
                }
                ',' => {
                    out.push(single(Tok::Comma));
                    i += 1;
                }
                '.' => {
                    out.push(single(Tok::Dot));
                    i += 1;
                }
                ':' => {
                    out.push(single(Tok::Colon));
                    i += 1;
                }
                '<' => {
                    out.push(single(Tok::Lt));
                    i += 1;
                }
                '=' => {
                    out.push(single(Tok::Eq));
                    i += 1;
                }
                '-' => {
                    out.push(single(Tok::Minus));
                    i += 1;
                }
                '!' if chars.get(i + 1) == Some(&'=') => {
                    out.push(single(Tok::Neq));
                    i += 2;
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    if i < chars.len() && chars[i] == '*' {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    let tok = if word.starts_with(|c: char| c.is_ascii_uppercase()) {
                        Tok::Var(word)
                    } else {
                        Tok::Ident(word)
                    };
                    out.push(single(tok));
                }
                other => {
                    return Err(LangError::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

const SECTIONS: &[&str] = &[
    "sorts", "objects", "statics", "facts", "coarse", "fine", "fluents", "actions", "axioms", "bridge",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Sorts,
    Objects,
    Statics,
    Facts,
    Fluents(FluentKind),
    Actions(ActorKind),
    Axioms,
    Bridge,
}

struct RawAxiom {
    kind: AxiomKind,
    head: SchemaLit,
    action: Option<SchemaAtom>,
    body: Vec<BodyItem>,
    line: usize,
}

#[derive(Default)]
struct RawLevel {
    fluents: Vec<(FluentDecl, usize)>,
    actions: Vec<(ActionDecl, usize)>,
    axioms: Vec<RawAxiom>,
}

#[derive(Default)]
struct Raw {
    sorts: Vec<(String, Option<String>, usize)>,
    objects: Vec<(String, String, usize)>,
    statics: Vec<(FluentDecl, usize)>,
    facts: Vec<(Atom, usize)>,
    coarse: RawLevel,
    fine: RawLevel,
    bridge: Vec<RawAxiom>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |t| t.line)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map_or((self.last_line, 0), |t| (t.line, t.col));
        Err(LangError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), LangError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn at_section_start(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if SECTIONS.contains(&w.as_str()))
            && !matches!(self.peek_at(1), Some(Tok::LParen) | Some(Tok::Lt) | Some(Tok::Colon) | Some(Tok::Comma) | Some(Tok::Dot))
    }

    fn term(&mut self) -> Result<Term, LangError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Ident(c)) => Ok(Term::Const(c)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected a term")
            }
        }
    }

    fn schema_atom(&mut self) -> Result<SchemaAtom, LangError> {
        let name = self.ident("a predicate or action name")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                args.push(self.term()?);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.err("expected `,` or `)`");
                    }
                }
            }
        }
        Ok(SchemaAtom { name, args })
    }

    fn schema_lit(&mut self) -> Result<SchemaLit, LangError> {
        let positive = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            false
        } else {
            true
        };
        Ok(SchemaLit {
            atom: self.schema_atom()?,
            positive,
        })
    }

    fn body_item(&mut self) -> Result<BodyItem, LangError> {
        // term != term, term = term, or a literal
        let is_cmp = matches!(self.peek(), Some(Tok::Var(_)) | Some(Tok::Ident(_)))
            && matches!(self.peek_at(1), Some(Tok::Neq) | Some(Tok::Eq));
        if is_cmp {
            let a = self.term()?;
            let op = self.next();
            let b = self.term()?;
            return Ok(match op {
                Some(Tok::Neq) => BodyItem::Neq(a, b),
                _ => BodyItem::Eq(a, b),
            });
        }
        if matches!(self.peek(), Some(Tok::Var(_))) {
            return self.err("expected a literal or comparison");
        }
        Ok(BodyItem::Lit(self.schema_lit()?))
    }

    fn body(&mut self) -> Result<Vec<BodyItem>, LangError> {
        let mut out = vec![self.body_item()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.body_item()?);
        }
        Ok(out)
    }

    fn axiom(&mut self) -> Result<RawAxiom, LangError> {
        let line = self.line();
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == "impossible")
            && matches!(self.peek_at(1), Some(Tok::Ident(_)))
        {
            self.pos += 1;
            let action = self.schema_atom()?;
            match self.next() {
                Some(Tok::Ident(w)) if w == "if" => {}
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return self.err("expected `if` after `impossible <action>`");
                }
            }
            let body = self.body()?;
            self.expect(Tok::Dot, "`.` to end the axiom")?;
            return Ok(RawAxiom {
                kind: AxiomKind::Executability,
                head: SchemaLit {
                    atom: action.clone(),
                    positive: true,
                },
                action: Some(action),
                body,
                line,
            });
        }
        let first = self.schema_lit()?;
        match self.peek() {
            Some(Tok::Ident(w)) if w == "causes" => {
                self.pos += 1;
                if !first.positive {
                    return self.err("an action cannot be negated");
                }
                let head = self.schema_lit()?;
                let body = match self.peek() {
                    Some(Tok::Ident(w)) if w == "if" => {
                        self.pos += 1;
                        self.body()?
                    }
                    _ => Vec::new(),
                };
                self.expect(Tok::Dot, "`.` to end the axiom")?;
                Ok(RawAxiom {
                    kind: AxiomKind::CausalLaw,
                    head,
                    action: Some(first.atom),
                    body,
                    line,
                })
            }
            Some(Tok::Ident(w)) if w == "if" => {
                self.pos += 1;
                let body = self.body()?;
                self.expect(Tok::Dot, "`.` to end the axiom")?;
                Ok(RawAxiom {
                    kind: AxiomKind::StateConstraint,
                    head: first,
                    action: None,
                    body,
                    line,
                })
            }
            Some(Tok::Dot) => {
                self.pos += 1;
                Ok(RawAxiom {
                    kind: AxiomKind::StateConstraint,
                    head: first,
                    action: None,
                    body: Vec::new(),
                    line,
                })
            }
            _ => self.err("expected `causes`, `if` or `.`"),
        }
    }

    fn decl(&mut self) -> Result<(String, Vec<String>), LangError> {
        let name = self.ident("a declaration name")?;
        let mut sorts = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                sorts.push(self.ident("a sort name")?);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.err("expected `,` or `)`");
                    }
                }
            }
        }
        self.expect(Tok::Dot, "`.` after the declaration")?;
        Ok((name, sorts))
    }

    fn ground_atom(&mut self) -> Result<Atom, LangError> {
        let a = self.schema_atom()?;
        let mut args = Vec::new();
        for t in a.args {
            match t {
                Term::Const(c) => args.push(c),
                Term::Var(v) => return self.err(format!("facts must be ground, found variable `{v}`")),
            }
        }
        self.expect(Tok::Dot, "`.` after the fact")?;
        Ok(Atom { name: a.name, args })
    }
}

fn level_mut(raw: &mut Raw, level: Option<Resolution>) -> &mut RawLevel {
    match level.unwrap_or(Resolution::Coarse) {
        Resolution::Coarse => &mut raw.coarse,
        Resolution::Fine => &mut raw.fine,
    }
}

fn parse_raw(text: &str) -> Result<Raw, LangError> {
    let toks = lex(text)?;
    let last_line = toks.last().map_or(1, |t| t.line);
    let mut p = Parser { toks, pos: 0, last_line };
    let mut raw = Raw::default();
    let mut section = Section::None;
    let mut level: Option<Resolution> = None;
    let mut saw_fine_marker = false;
    while p.peek().is_some() {
        if p.at_section_start() {
            let word = p.ident("a section keyword")?;
            section = match word.as_str() {
                "sorts" => Section::Sorts,
                "objects" => Section::Objects,
                "statics" => Section::Statics,
                "facts" => Section::Facts,
                "coarse" => {
                    level = Some(Resolution::Coarse);
                    Section::None
                }
                "fine" => {
                    level = Some(Resolution::Fine);
                    saw_fine_marker = true;
                    Section::None
                }
                "fluents" => match p.ident("`inertial` or `defined`")?.as_str() {
                    "inertial" => Section::Fluents(FluentKind::Inertial),
                    "defined" => Section::Fluents(FluentKind::Defined),
                    _ => {
                        p.pos -= 1;
                        return p.err("expected `inertial` or `defined`");
                    }
                },
                "actions" => match p.ident("`agent` or `exo`")?.as_str() {
                    "agent" => Section::Actions(ActorKind::Agent),
                    "exo" => Section::Actions(ActorKind::Exo),
                    _ => {
                        p.pos -= 1;
                        return p.err("expected `agent` or `exo`");
                    }
                },
                "axioms" => Section::Axioms,
                "bridge" => Section::Bridge,
                _ => unreachable!(),
            };
            continue;
        }
        let line = p.line();
        match section {
            Section::None => return p.err("expected a section keyword"),
            Section::Sorts => {
                let name = p.ident("a sort name")?;
                let parent = if p.peek() == Some(&Tok::Lt) {
                    p.pos += 1;
                    Some(p.ident("a parent sort")?)
                } else {
                    None
                };
                p.expect(Tok::Dot, "`.` after the sort")?;
                raw.sorts.push((name, parent, line));
            }
            Section::Objects => {
                let mut names = vec![p.ident("an object name")?];
                while p.peek() == Some(&Tok::Comma) {
                    p.pos += 1;
                    names.push(p.ident("an object name")?);
                }
                p.expect(Tok::Colon, "`:` before the sort")?;
                let sort = p.ident("a sort name")?;
                p.expect(Tok::Dot, "`.` after the objects")?;
                for n in names {
                    raw.objects.push((n, sort.clone(), line));
                }
            }
            Section::Statics => {
                let (name, arg_sorts) = p.decl()?;
                raw.statics.push((
                    FluentDecl {
                        name,
                        arg_sorts,
                        kind: FluentKind::Static,
                    },
                    line,
                ));
            }
            Section::Facts => {
                let atom = p.ground_atom()?;
                raw.facts.push((atom, line));
            }
            Section::Fluents(kind) => {
                let (name, arg_sorts) = p.decl()?;
                let l = level_mut(&mut raw, level);
                l.fluents.push((FluentDecl { name, arg_sorts, kind }, line));
            }
            Section::Actions(actor) => {
                let (name, arg_sorts) = p.decl()?;
                let l = level_mut(&mut raw, level);
                l.actions.push((ActionDecl { name, arg_sorts, actor }, line));
            }
            Section::Axioms => {
                let ax = p.axiom()?;
                let l = level_mut(&mut raw, level);
                l.axioms.push(ax);
            }
            Section::Bridge => {
                let ax = p.axiom()?;
                if ax.kind != AxiomKind::StateConstraint {
                    return Err(LangError::Semantic {
                        line: ax.line,
                        msg: "bridge axioms must be state constraints".into(),
                    });
                }
                raw.bridge.push(ax);
            }
        }
    }
    if !raw.bridge.is_empty() && !saw_fine_marker {
        return Err(LangError::Semantic {
            line: raw.bridge[0].line,
            msg: "bridge axioms need a `fine` resolution".into(),
        });
    }
    Ok(raw)
}

/// Parses and validates a domain file.
pub fn parse_domain(text: &str) -> Result<DomainDescription, LangError> {
    let raw = parse_raw(text)?;
    build(raw)
}

fn sort_err<T>(line: usize, msg: impl Into<String>) -> Result<T, LangError> {
    Err(LangError::Sort {
        line,
        msg: msg.into(),
    })
}

fn sem_err<T>(line: usize, msg: impl Into<String>) -> Result<T, LangError> {
    Err(LangError::Semantic {
        line,
        msg: msg.into(),
    })
}

fn build(raw: Raw) -> Result<DomainDescription, LangError> {
    let mut sorts = SortTree::new();
    for (name, parent, line) in &raw.sorts {
        if let Err(e) = sorts.add_sort(name, parent.as_deref()) {
            return sort_err(*line, e.to_string());
        }
    }
    for (name, sort, line) in &raw.objects {
        if let Err(e) = sorts.add_object(name, sort) {
            return sort_err(*line, e.to_string());
        }
    }
    let check_decl = |d: &FluentDecl, line: usize| -> Result<(), LangError> {
        for s in &d.arg_sorts {
            if !sorts.contains_sort(s) {
                return sort_err(line, format!("unknown sort `{s}` in declaration of `{}`", d.name));
            }
        }
        Ok(())
    };
    let mut names_seen: BTreeSet<String> = BTreeSet::new();
    for (d, line) in &raw.statics {
        check_decl(d, *line)?;
        if !names_seen.insert(d.name.clone()) {
            return sem_err(*line, format!("`{}` declared twice", d.name));
        }
    }
    let mut levels = Vec::new();
    for (res, rl) in [(Resolution::Coarse, raw.coarse), (Resolution::Fine, raw.fine)] {
        let mut seen = names_seen.clone();
        for (d, line) in &rl.fluents {
            check_decl(d, *line)?;
            if !seen.insert(d.name.clone()) {
                return sem_err(*line, format!("`{}` declared twice at {res} resolution", d.name));
            }
        }
        for (d, line) in &rl.actions {
            for s in &d.arg_sorts {
                if !sorts.contains_sort(s) {
                    return sort_err(*line, format!("unknown sort `{s}` in declaration of `{}`", d.name));
                }
            }
            if !seen.insert(d.name.clone()) {
                return sem_err(*line, format!("`{}` declared twice at {res} resolution", d.name));
            }
        }
        levels.push((res, rl));
    }
    let statics: Vec<FluentDecl> = raw.statics.into_iter().map(|(d, _)| d).collect();
    let mut coarse = Level::default();
    let mut fine = Level::default();
    let mut bridge_raw = Some(raw.bridge);
    let mut bridge = Vec::new();
    for (res, rl) in levels {
        let level = Level {
            fluents: rl.fluents.into_iter().map(|(d, _)| d).collect(),
            actions: rl.actions.into_iter().map(|(d, _)| d).collect(),
            axioms: Vec::new(),
        };
        let sig = Signature {
            sorts: &sorts,
            statics: &statics,
            level: &level,
        };
        let mut axioms = Vec::new();
        for ax in &rl.axioms {
            axioms.push(check_axiom(&sig, ax)?);
        }
        if res == Resolution::Fine {
            for ax in bridge_raw.take().unwrap_or_default() {
                bridge.push(check_axiom(&sig, &ax)?);
            }
        }
        check_stratified(&sig, axioms.iter().chain(if res == Resolution::Fine { bridge.iter() } else { [].iter() }))?;
        for d in &level.actions {
            if d.actor == ActorKind::Agent {
                if let Some(first) = d.arg_sorts.first() {
                    let first_id = sorts.id(first).map_err(|e| LangError::Sort { line: 0, msg: e.to_string() })?;
                    if let Ok(ah) = sorts.id("ad_hoc_agent") {
                        if !sorts.is_subsort(first_id, ah) {
                            return sem_err(
                                0,
                                format!("agent action `{}` must take an ad_hoc_agent first", d.name),
                            );
                        }
                    }
                }
            }
        }
        let level = Level { axioms, ..level };
        match res {
            Resolution::Coarse => coarse = level,
            Resolution::Fine => fine = level,
        }
    }
    let mut refines = BTreeMap::new();
    for a in &fine.actions {
        let base = a.name.strip_suffix('*').unwrap_or(&a.name);
        if coarse.actions.iter().any(|c| c.name == base) {
            refines.insert(a.name.clone(), base.to_string());
        }
    }
    let mut dom = DomainDescription {
        sorts,
        statics,
        facts: Vec::new(),
        coarse,
        fine,
        bridge,
        component_map: BTreeMap::new(),
        refines,
    };
    let facts: Vec<Atom> = raw.facts.iter().map(|(a, _)| a.clone()).collect();
    dom.set_facts(facts)?;
    Ok(dom)
}

struct Signature<'a> {
    sorts: &'a SortTree,
    statics: &'a [FluentDecl],
    level: &'a Level,
}

enum Pred<'a> {
    Fluent(&'a FluentDecl),
    Action(&'a ActionDecl),
}

impl<'a> Signature<'a> {
    fn lookup(&self, name: &str) -> Option<Pred<'a>> {
        if let Some(d) = self.level.fluents.iter().chain(self.statics.iter()).find(|d| d.name == name) {
            return Some(Pred::Fluent(d));
        }
        self.level.actions.iter().find(|d| d.name == name).map(Pred::Action)
    }

    fn kind(&self, name: &str) -> Option<FluentKind> {
        match self.lookup(name) {
            Some(Pred::Fluent(d)) => Some(d.kind),
            _ => None,
        }
    }
}

fn check_axiom(sig: &Signature, ax: &RawAxiom) -> Result<Axiom, LangError> {
    let line = ax.line;
    let mut var_sorts: Vec<(String, String)> = Vec::new();
    let mut type_atom = |atom: &SchemaAtom, expect_action: bool| -> Result<(), LangError> {
        let arg_sorts = match sig.lookup(&atom.name) {
            Some(Pred::Fluent(d)) if !expect_action => &d.arg_sorts,
            Some(Pred::Action(d)) if expect_action => &d.arg_sorts,
            Some(Pred::Fluent(_)) => return sem_err(line, format!("`{}` is a fluent, expected an action", atom.name)),
            Some(Pred::Action(_)) => return sem_err(line, format!("`{}` is an action, expected a fluent", atom.name)),
            None => return sort_err(line, format!("unknown predicate `{}`", atom.name)),
        };
        if arg_sorts.len() != atom.args.len() {
            return sort_err(
                line,
                format!("`{}` takes {} arguments, found {}", atom.name, arg_sorts.len(), atom.args.len()),
            );
        }
        for (t, s) in atom.args.iter().zip(arg_sorts) {
            let sid = sig.sorts.id(s).map_err(|e| LangError::Sort { line, msg: e.to_string() })?;
            match t {
                Term::Const(c) => {
                    if !sig.sorts.is_member(c, sid) {
                        return sort_err(line, format!("constant `{c}` is not of sort `{s}`"));
                    }
                }
                Term::Var(v) => match var_sorts.iter_mut().find(|(n, _)| n == v) {
                    Some((_, cur)) => {
                        let cur_id = sig.sorts.id(cur).expect("known sort");
                        match sig.sorts.meet(cur_id, sid) {
                            Some(m) => *cur = sig.sorts.name(m).to_string(),
                            None => {
                                return sort_err(
                                    line,
                                    format!("variable `{v}` used as both `{cur}` and `{s}`"),
                                )
                            }
                        }
                    }
                    None => var_sorts.push((v.clone(), s.clone())),
                },
            }
        }
        Ok(())
    };
    match ax.kind {
        AxiomKind::CausalLaw => {
            let action = ax.action.as_ref().expect("causal law action");
            type_atom(action, true)?;
            type_atom(&ax.head.atom, false)?;
        }
        AxiomKind::Executability => {
            type_atom(&ax.head.atom, true)?;
        }
        AxiomKind::StateConstraint => {
            type_atom(&ax.head.atom, false)?;
        }
    }
    for item in &ax.body {
        if let BodyItem::Lit(l) = item {
            let expect_action = matches!(sig.lookup(&l.atom.name), Some(Pred::Action(_)));
            if expect_action {
                return sem_err(line, format!("action `{}` cannot appear in a body", l.atom.name));
            }
            type_atom(&l.atom, false)?;
        }
    }
    for item in &ax.body {
        if let BodyItem::Neq(a, b) | BodyItem::Eq(a, b) = item {
            for t in [a, b] {
                if let Term::Var(v) = t {
                    if !var_sorts.iter().any(|(n, _)| n == v) {
                        return sort_err(line, format!("variable `{v}` only appears in a comparison"));
                    }
                }
            }
        }
    }
    let head_kind = sig.kind(&ax.head.atom.name);
    match ax.kind {
        AxiomKind::CausalLaw => {
            if head_kind != Some(FluentKind::Inertial) {
                return sem_err(
                    line,
                    format!("causal law on non-inertial fluent `{}`", ax.head.atom.name),
                );
            }
        }
        AxiomKind::Executability => {
            if ax.body.is_empty() {
                return sem_err(line, "executability condition needs a body");
            }
        }
        AxiomKind::StateConstraint => match head_kind {
            Some(FluentKind::Static) => {
                return sem_err(line, format!("static `{}` cannot be the head of a constraint", ax.head.atom.name))
            }
            Some(FluentKind::Defined) if !ax.head.positive => {
                return sem_err(
                    line,
                    format!("defined fluent `{}` cannot have a negative head", ax.head.atom.name),
                )
            }
            Some(FluentKind::Inertial) => {
                for l in ax.body.iter().filter_map(|b| match b {
                    BodyItem::Lit(l) => Some(l),
                    _ => None,
                }) {
                    if !l.positive && sig.kind(&l.atom.name) == Some(FluentKind::Defined) {
                        return sem_err(
                            line,
                            format!("defined fluent `{}` may only occur positively in constraint bodies", l.atom.name),
                        );
                    }
                }
            }
            _ => {}
        },
    }
    Ok(Axiom {
        kind: ax.kind,
        head: ax.head.clone(),
        action: ax.action.clone(),
        body: ax.body.clone(),
        variables: var_sorts,
    })
}

/// Predicate-level stratification of defined fluents.
fn check_stratified<'a>(sig: &Signature, axioms: impl Iterator<Item = &'a Axiom>) -> Result<(), LangError> {
    let mut edges: FxHashMap<String, Vec<(String, bool)>> = FxHashMap::default();
    for ax in axioms {
        if ax.kind != AxiomKind::StateConstraint || sig.kind(&ax.head.atom.name) != Some(FluentKind::Defined) {
            continue;
        }
        let e = edges.entry(ax.head.atom.name.clone()).or_default();
        for l in ax.body_lits() {
            if sig.kind(&l.atom.name) == Some(FluentKind::Defined) {
                e.push((l.atom.name.clone(), l.positive));
            }
        }
    }
    // A negative edge p -> q is bad when q reaches p.
    let reaches = |from: &str, to: &str| -> bool {
        let mut stack = vec![from.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(next) = edges.get(&n) {
                stack.extend(next.iter().map(|(m, _)| m.clone()));
            }
        }
        false
    };
    let mut heads: Vec<&String> = edges.keys().collect();
    heads.sort();
    for p in heads {
        for (q, positive) in &edges[p] {
            if !positive && reaches(q, p) {
                return sem_err(0, format!("defined fluents `{p}` and `{q}` are not stratified"));
            }
        }
    }
    Ok(())
}

impl DomainDescription {
    /// Adds objects (name, sort) declared outside the domain file.
    pub fn add_objects<'a>(&mut self, objects: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), LangError> {
        for (name, sort) in objects {
            self.sorts
                .add_object(name, sort)
                .map_err(|e| LangError::Sort { line: 0, msg: e.to_string() })?;
        }
        Ok(())
    }

    /// Replaces the static facts and recomputes the component map.
    pub fn set_facts(&mut self, facts: Vec<Atom>) -> Result<(), LangError> {
        for f in &facts {
            let Some(decl) = self.statics.iter().find(|d| d.name == f.name) else {
                return sem_err(0, format!("fact `{f}` is not over a declared static"));
            };
            if decl.arg_sorts.len() != f.args.len() {
                return sort_err(0, format!("fact `{f}` has the wrong arity"));
            }
            for (a, s) in f.args.iter().zip(&decl.arg_sorts) {
                let sid = self.sorts.id(s).map_err(|e| LangError::Sort { line: 0, msg: e.to_string() })?;
                if !self.sorts.is_member(a, sid) {
                    return sort_err(0, format!("fact `{f}`: `{a}` is not of sort `{s}`"));
                }
            }
        }
        let mut facts = facts;
        facts.sort();
        facts.dedup();
        self.facts = facts;
        self.rebuild_component_map()
    }

    pub fn add_facts(&mut self, extra: impl IntoIterator<Item = Atom>) -> Result<(), LangError> {
        let mut all = self.facts.clone();
        all.extend(extra);
        self.set_facts(all)
    }

    fn rebuild_component_map(&mut self) -> Result<(), LangError> {
        self.component_map.clear();
        let Some(decl) = self.statics.iter().find(|d| d.name == "component" && d.arg_sorts.len() == 2) else {
            return Ok(());
        };
        for f in self.facts.iter().filter(|f| f.name == "component") {
            if let Some(prev) = self.component_map.insert(f.args[0].clone(), f.args[1].clone()) {
                return sem_err(0, format!("`{}` is a component of both `{prev}` and `{}`", f.args[0], f.args[1]));
            }
        }
        if self.component_map.is_empty() || !self.has_fine() {
            return Ok(());
        }
        let fine_sort = self.sorts.id(&decl.arg_sorts[0]).expect("validated sort");
        let coarse_sort = self.sorts.id(&decl.arg_sorts[1]).expect("validated sort");
        for l in self.sorts.members(fine_sort) {
            if !self.component_map.contains_key(l) {
                return sem_err(0, format!("fine location `{l}` is not a component of any region"));
            }
        }
        let image: BTreeSet<&str> = self.component_map.values().map(|s| s.as_str()).collect();
        for r in self.sorts.members(coarse_sort) {
            if !image.contains(r) {
                return sem_err(0, format!("region `{r}` has no fine components"));
            }
        }
        Ok(())
    }

    /// Sorts of the two `component` arguments (fine location, region).
    pub fn component_sorts(&self) -> Option<(&str, &str)> {
        self.statics
            .iter()
            .find(|d| d.name == "component" && d.arg_sorts.len() == 2)
            .map(|d| (d.arg_sorts[0].as_str(), d.arg_sorts[1].as_str()))
    }

    /// Copy keeping only the listed objects (and facts over them).
    pub fn restrict(&self, keep: &BTreeSet<String>) -> DomainDescription {
        let sorts = self.sorts.restrict(|o| keep.contains(o));
        let facts: Vec<Atom> = self
            .facts
            .iter()
            .filter(|f| f.args.iter().all(|a| keep.contains(a)))
            .cloned()
            .collect();
        let component_map = self
            .component_map
            .iter()
            .filter(|(f, r)| keep.contains(*f) && keep.contains(*r))
            .map(|(f, r)| (f.clone(), r.clone()))
            .collect();
        DomainDescription {
            sorts,
            statics: self.statics.clone(),
            facts,
            coarse: self.coarse.clone(),
            fine: self.fine.clone(),
            bridge: self.bridge.clone(),
            component_map,
            refines: self.refines.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "
sorts
  agent.
  ad_hoc_agent < agent.
  location.
  object.
  appliance.
objects
  robot : ad_hoc_agent.
  kitchen, bedroom : location.
  fridge : appliance.
  eggs : object.
fluents inertial
  at(agent, location).
  opened(appliance).
  on(object, appliance).
  holding(agent, object).
actions agent
  open(ad_hoc_agent, appliance).
  grab(ad_hoc_agent, object).
axioms
";

    fn parse_axioms(axioms: &str) -> Result<DomainDescription, LangError> {
        parse_domain(&format!("{HEADER}{axioms}"))
    }

    #[test]
    fn causal_law_form() {
        let d = parse_axioms("open(A, E) causes opened(E).").unwrap();
        assert_eq!(d.coarse.axioms.len(), 1);
        let ax = &d.coarse.axioms[0];
        assert_eq!(ax.kind, AxiomKind::CausalLaw);
        assert_eq!(ax.head.to_string(), "opened(E)");
        assert_eq!(ax.variables, vec![("A".into(), "ad_hoc_agent".into()), ("E".into(), "appliance".into())]);
    }

    #[test]
    fn state_constraint_form() {
        let d = parse_axioms("-at(A, L1) if at(A, L2), L1 != L2.").unwrap();
        let ax = &d.coarse.axioms[0];
        assert_eq!(ax.kind, AxiomKind::StateConstraint);
        assert!(!ax.head.positive);
        assert_eq!(ax.body.len(), 2);
    }

    #[test]
    fn executability_form() {
        let d = parse_axioms("impossible grab(A, O) if on(O, E), -opened(E).").unwrap();
        let ax = &d.coarse.axioms[0];
        assert_eq!(ax.kind, AxiomKind::Executability);
        assert_eq!(ax.head.atom.name, "grab");
        assert_eq!(ax.to_string(), "impossible grab(A, O) if on(O, E), -opened(E).");
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_axioms("open(A, E) causes opened(E)") {
            Err(LangError::Syntax { line, .. }) => assert_eq!(line, HEADER.lines().count() + 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse_domain("sorts\n  a.\n  b ? c.\n"), Err(LangError::Syntax { line: 3, col: 5, .. })));
    }

    #[test]
    fn unknown_sort_and_arity_are_sort_errors() {
        assert!(matches!(parse_domain("sorts\n a < b.\n"), Err(LangError::Sort { .. })));
        assert!(matches!(parse_axioms("open(A) causes opened(A)."), Err(LangError::Sort { .. })));
        assert!(matches!(
            parse_axioms("-at(A, L) if holding(A, L)."),
            Err(LangError::Sort { .. })
        ));
    }

    #[test]
    fn causal_law_on_defined_fluent_is_rejected() {
        let text = format!("{HEADER}\nfluents defined\n  busy(agent).\naxioms\n  grab(A, O) causes busy(A).\n");
        assert!(matches!(parse_domain(&text), Err(LangError::Semantic { .. })));
    }

    #[test]
    fn unstratified_definitions_are_rejected() {
        let text = format!(
            "{HEADER}\nfluents defined\n  p(agent).\n  q(agent).\naxioms\n  p(A) if -q(A), at(A, L).\n  q(A) if p(A).\n"
        );
        assert!(matches!(parse_domain(&text), Err(LangError::Semantic { .. })));
    }

    #[test]
    fn comments_and_resolution_markers() {
        let text = "
% a comment
sorts
  agent. ad_hoc_agent < agent. region. place.
objects
  robot : ad_hoc_agent. kitchen : region. table, counter : place.
statics
  component(place, region).
facts
  component(table, kitchen). component(counter, kitchen).
coarse
fluents inertial
  at(agent, region).
actions agent
  move(ad_hoc_agent, region).
axioms
  move(A, R) causes at(A, R).
fine
fluents inertial
  at*(agent, place).
fluents defined
  at(agent, region).
actions agent
  move*(ad_hoc_agent, place).
axioms
  move*(A, L) causes at*(A, L).   % trailing comment
bridge
  at(A, Rg) if at*(A, L), component(L, Rg).
";
        let d = parse_domain(text).unwrap();
        assert_eq!(d.refines.get("move*").map(String::as_str), Some("move"));
        assert_eq!(d.component_map.get("table").map(String::as_str), Some("kitchen"));
        assert_eq!(d.bridge.len(), 1);
        assert_eq!(d.fine.axioms.len(), 1);
    }

    #[test]
    fn component_map_must_be_total() {
        let text = "
sorts
  region. place. agent.
objects
  kitchen : region. table, counter : place.
statics
  component(place, region).
facts
  component(table, kitchen).
fine
fluents inertial
  at*(agent, place).
";
        assert!(matches!(parse_domain(text), Err(LangError::Semantic { .. })));
    }
}
