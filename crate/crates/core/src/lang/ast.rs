use std::collections::BTreeMap;
use std::fmt;

use crate::kernel::{ActionDecl, Atom, FluentDecl, FluentKind, SortTree};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

/// `name(t1, ..., tn)` with variables allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchemaAtom {
    pub name: String,
    pub args: Vec<Term>,
}

impl fmt::Display for SchemaAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return f.write_str(&self.name);
        }
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchemaLit {
    pub atom: SchemaAtom,
    pub positive: bool,
}

impl fmt::Display for SchemaLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BodyItem {
    Lit(SchemaLit),
    Neq(Term, Term),
    Eq(Term, Term),
}

impl fmt::Display for BodyItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyItem::Lit(l) => write!(f, "{l}"),
            BodyItem::Neq(a, b) => write!(f, "{a} != {b}"),
            BodyItem::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    CausalLaw,
    StateConstraint,
    Executability,
}

/// One schematic law.
///
/// * causal law: `action causes head if body`
/// * state constraint: `head if body`
/// * executability: `impossible action if body` (`head` is the action atom)
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub head: SchemaLit,
    pub action: Option<SchemaAtom>,
    pub body: Vec<BodyItem>,
    /// Typed variables, in order of first appearance.
    pub variables: Vec<(String, String)>,
}

impl Axiom {
    pub fn body_lits(&self) -> impl Iterator<Item = &SchemaLit> {
        self.body.iter().filter_map(|b| match b {
            BodyItem::Lit(l) => Some(l),
            _ => None,
        })
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(|b| b.to_string()).collect();
        match self.kind {
            AxiomKind::CausalLaw => {
                let action = self.action.as_ref().expect("causal law has an action");
                write!(f, "{action} causes {}", self.head)?;
                if !body.is_empty() {
                    write!(f, " if {}", body.join(", "))?;
                }
            }
            AxiomKind::StateConstraint => {
                write!(f, "{}", self.head)?;
                if !body.is_empty() {
                    write!(f, " if {}", body.join(", "))?;
                }
            }
            AxiomKind::Executability => {
                write!(f, "impossible {} if {}", self.head.atom, body.join(", "))?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Coarse,
    Fine,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Coarse => "coarse",
            Resolution::Fine => "fine",
        })
    }
}

/// Signature and axioms of one resolution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Level {
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<ActionDecl>,
    pub axioms: Vec<Axiom>,
}

impl Level {
    pub fn is_empty(&self) -> bool {
        self.fluents.is_empty() && self.actions.is_empty() && self.axioms.is_empty()
    }
}

/// A validated system description at coarse and (optionally) fine
/// resolution, with the bridge axioms linking the two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainDescription {
    pub sorts: SortTree,
    pub statics: Vec<FluentDecl>,
    /// Static atoms that are true; every other static atom is false.
    pub facts: Vec<Atom>,
    pub coarse: Level,
    pub fine: Level,
    /// Fine-level state constraints tying fine relations to coarse ones.
    pub bridge: Vec<Axiom>,
    /// fine location -> coarse region, from `component` facts.
    pub component_map: BTreeMap<String, String>,
    /// fine action name -> coarse action it refines (absent when new).
    pub refines: BTreeMap<String, String>,
}

impl DomainDescription {
    pub fn level(&self, resolution: Resolution) -> &Level {
        match resolution {
            Resolution::Coarse => &self.coarse,
            Resolution::Fine => &self.fine,
        }
    }

    pub fn has_fine(&self) -> bool {
        !self.fine.is_empty()
    }

    /// Fluent, static or action declaration visible at `resolution`.
    pub fn fluent(&self, resolution: Resolution, name: &str) -> Option<&FluentDecl> {
        self.level(resolution)
            .fluents
            .iter()
            .chain(self.statics.iter())
            .find(|d| d.name == name)
    }

    pub fn action(&self, resolution: Resolution, name: &str) -> Option<&ActionDecl> {
        self.level(resolution).actions.iter().find(|d| d.name == name)
    }

    pub fn is_static(&self, name: &str) -> bool {
        self.statics.iter().any(|d| d.name == name)
    }

    pub fn fluent_kind(&self, resolution: Resolution, name: &str) -> Option<FluentKind> {
        self.fluent(resolution, name).map(|d| d.kind)
    }

    /// Axioms grounded at `resolution` (bridge axioms belong to fine).
    pub fn axioms(&self, resolution: Resolution) -> Vec<&Axiom> {
        match resolution {
            Resolution::Coarse => self.coarse.axioms.iter().collect(),
            Resolution::Fine => self.fine.axioms.iter().chain(self.bridge.iter()).collect(),
        }
    }

    /// Fine locations that are components of `region`.
    pub fn components_of(&self, region: &str) -> Vec<&str> {
        self.component_map
            .iter()
            .filter(|(_, r)| *r == region)
            .map(|(f, _)| f.as_str())
            .collect()
    }
}
