use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::atoms::{Atom, AtomId, FluentKind, GroundLit, Literal, Universe};
use super::KernelError;

/// Fixed-width bit vector indexed by [`AtomId`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Box<[u64]>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![0u64; len.div_ceil(64)].into_boxed_slice())
    }

    #[inline]
    pub fn get(&self, id: AtomId) -> bool {
        let i = id.index();
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, id: AtomId, value: bool) {
        let i = id.index();
        if value {
            self.0[i >> 6] |= 1 << (i & 63);
        } else {
            self.0[i >> 6] &= !(1 << (i & 63));
        }
    }

    #[inline]
    pub fn holds(&self, lit: GroundLit) -> bool {
        self.get(lit.atom) == lit.positive
    }

    #[inline]
    pub fn all(&self, lits: &[GroundLit]) -> bool {
        lits.iter().all(|l| self.holds(*l))
    }

    /// Indices set in exactly one of the two vectors.
    pub fn diff(&self, other: &Bits) -> Vec<AtomId> {
        let mut out = Vec::new();
        for (w, (a, b)) in self.0.iter().zip(other.0.iter()).enumerate() {
            let mut x = a ^ b;
            while x != 0 {
                let bit = x.trailing_zeros() as usize;
                out.push(AtomId((w * 64 + bit) as u32));
                x &= x - 1;
            }
        }
        out
    }

    pub fn ones(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut x = word;
            std::iter::from_fn(move || {
                if x == 0 {
                    None
                } else {
                    let bit = x.trailing_zeros() as usize;
                    x &= x - 1;
                    Some(AtomId((w * 64 + bit) as u32))
                }
            })
        })
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ones().map(|a| a.0)).finish()
    }
}

/// Complete truth assignment over a universe of grounded atoms.
///
/// Equality and hashing look at the assignment only; two states over
/// different universes with the same bit pattern compare equal, so callers
/// must not mix universes in one collection.
#[derive(Clone)]
pub struct State {
    universe: Arc<Universe>,
    bits: Bits,
}

impl State {
    pub(crate) fn from_bits(universe: Arc<Universe>, bits: Bits) -> Self {
        State { universe, bits }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn into_bits(self) -> Bits {
        self.bits
    }

    pub fn get(&self, id: AtomId) -> bool {
        self.bits.get(id)
    }

    /// Truth value of `atom`, or a universe-mismatch error.
    pub fn value(&self, atom: &Atom) -> Result<bool, KernelError> {
        Ok(self.bits.get(self.universe.lookup(atom)?))
    }

    /// Atoms that are true, in universe order.
    pub fn true_atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.bits.ones().map(|id| self.universe.atom(id))
    }

    /// True fluents of the given kind, formatted, sorted.
    pub fn describe(&self, kinds: &[FluentKind]) -> Vec<String> {
        let mut out: Vec<String> = self
            .bits
            .ones()
            .filter(|id| kinds.contains(&self.universe.kind(*id)))
            .map(|id| self.universe.atom(id).to_string())
            .collect();
        out.sort();
        out
    }

    /// Value of `atom` when present in this universe.
    pub fn try_value(&self, atom: &Atom) -> Option<bool> {
        self.universe.id(atom).map(|id| self.bits.get(id))
    }

    /// Projection onto another universe by atom name. Atoms missing from
    /// `self` default to false.
    pub fn project(&self, target: &Arc<Universe>) -> Bits {
        let mut bits = Bits::zeros(target.len());
        for id in self.bits.ones() {
            if let Some(t) = target.id(self.universe.atom(id)) {
                bits.set(t, true);
            }
        }
        bits
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits.hash(state)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.true_atoms().map(|a| a.to_string()))
            .finish()
    }
}

/// Sign-adjusted truth of `lit` in `state`.
pub fn holds(state: &State, lit: &Literal) -> Result<bool, KernelError> {
    Ok(state.value(&lit.atom)? == lit.positive)
}
