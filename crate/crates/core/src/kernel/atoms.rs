use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::KernelError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluentKind {
    Inertial,
    Defined,
    Static,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    /// Performed by the ad hoc agent doing the reasoning.
    Agent,
    /// Performed by some other agent; only ever expected, never chosen.
    Exo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluentDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
    pub kind: FluentKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
    pub actor: ActorKind,
}

/// A grounded fluent, static, or action term: `name(arg, ...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Atom {
    pub name: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            name: name.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn mentions(&self, object: &str) -> bool {
        self.args.iter().any(|a| a == object)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}({})", self.name, self.args.join(", "))
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    let body = s.strip_suffix('*').unwrap_or(s);
    body.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for Atom {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || KernelError::MalformedAtom(s.to_string());
        let (name, args) = match s.find('(') {
            None => (s, Vec::new()),
            Some(open) => {
                let rest = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args: Vec<String> = rest.split(',').map(|a| a.trim().to_string()).collect();
                if args.iter().any(|a| !is_ident(a)) {
                    return Err(bad());
                }
                (s[..open].trim(), args)
            }
        };
        if !is_ident(name) {
            return Err(bad());
        }
        Ok(Atom {
            name: name.to_string(),
            args,
        })
    }
}

impl TryFrom<String> for Atom {
    type Error = KernelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Atom> for String {
    fn from(a: Atom) -> String {
        a.to_string()
    }
}

/// Grounded actions share the atom representation.
pub type Action = Atom;

/// A signed grounded atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    pub fn negate(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "-{}", self.atom)
        }
    }
}

impl FromStr for Literal {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.strip_prefix('-') {
            Some(rest) => Ok(Literal::neg(rest.parse()?)),
            None => Ok(Literal::pos(s.parse()?)),
        }
    }
}

impl TryFrom<String> for Literal {
    type Error = KernelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Literal> for String {
    fn from(l: Literal) -> String {
        l.to_string()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

impl AtomId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Literal over an interned atom.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLit {
    pub atom: AtomId,
    pub positive: bool,
}

impl GroundLit {
    pub fn new(atom: AtomId, positive: bool) -> Self {
        GroundLit { atom, positive }
    }
}

/// The set of grounded fluent and static atoms a state assigns.
#[derive(Clone, Debug, Default)]
pub struct Universe {
    atoms: Vec<Atom>,
    kinds: Vec<FluentKind>,
    index: FxHashMap<Atom, AtomId>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `atom`; re-inserting returns the existing id.
    pub fn insert(&mut self, atom: Atom, kind: FluentKind) -> AtomId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        self.kinds.push(kind);
        id
    }

    pub fn id(&self, atom: &Atom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn lookup(&self, atom: &Atom) -> Result<AtomId, KernelError> {
        self.id(atom)
            .ok_or_else(|| KernelError::UniverseMismatch(atom.to_string()))
    }

    pub fn ground_lit(&self, lit: &Literal) -> Result<GroundLit, KernelError> {
        Ok(GroundLit::new(self.lookup(&lit.atom)?, lit.positive))
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn kind(&self, id: AtomId) -> FluentKind {
        self.kinds[id.index()]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AtomId, &Atom, FluentKind)> {
        self.atoms
            .iter()
            .zip(&self.kinds)
            .enumerate()
            .map(|(i, (a, k))| (AtomId(i as u32), a, *k))
    }

    pub fn literal(&self, lit: GroundLit) -> Literal {
        Literal {
            atom: self.atom(lit.atom).clone(),
            positive: lit.positive,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_text_round_trips() {
        for text in ["on(eggs, kitchen_table)", "-opened(fridge)", "at*(robot, sofa)", "raining"] {
            let lit: Literal = text.parse().unwrap();
            assert_eq!(lit.to_string(), text);
        }
    }

    #[test]
    fn malformed_atoms_are_rejected() {
        for text in ["on(eggs,", "(x)", "on(eggs, )", "on eggs"] {
            assert!(text.parse::<Atom>().is_err(), "{text}");
        }
    }

    #[test]
    fn universe_interns_once() {
        let mut u = Universe::new();
        let a = u.insert(Atom::new("opened", &["fridge"]), FluentKind::Inertial);
        let b = u.insert(Atom::new("opened", &["fridge"]), FluentKind::Inertial);
        assert_eq!(a, b);
        assert_eq!(u.len(), 1);
        assert!(u.lookup(&Atom::new("opened", &["stove"])).is_err());
    }
}
