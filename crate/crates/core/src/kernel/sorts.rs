use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use super::KernelError;

/// Index of a sort inside a [`SortTree`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub u32);

/// Hierarchy of named sorts with their object constants.
///
/// A sort has at most one parent, and parents must be declared before their
/// children, so the hierarchy is always a forest. Every object belongs to
/// exactly one most-specific sort; membership in ancestors is implied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SortTree {
    names: Vec<String>,
    parent: Vec<Option<SortId>>,
    index: FxHashMap<String, SortId>,
    /// Objects in declaration order, with their most specific sort.
    objects: Vec<(String, SortId)>,
    object_index: FxHashMap<String, usize>,
}

impl SortTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sort(&mut self, name: &str, parent: Option<&str>) -> Result<SortId, KernelError> {
        if self.index.contains_key(name) {
            return Err(KernelError::DuplicateSort(name.to_string()));
        }
        let parent = match parent {
            Some(p) => Some(self.id(p)?),
            None => None,
        };
        let id = SortId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.parent.push(parent);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_object(&mut self, name: &str, sort: &str) -> Result<(), KernelError> {
        let sort = self.id(sort)?;
        if let Some(&i) = self.object_index.get(name) {
            if self.objects[i].1 == sort {
                return Ok(());
            }
            return Err(KernelError::ObjectSortClash {
                object: name.to_string(),
                first: self.name(self.objects[i].1).to_string(),
                second: self.name(sort).to_string(),
            });
        }
        self.object_index.insert(name.to_string(), self.objects.len());
        self.objects.push((name.to_string(), sort));
        Ok(())
    }

    pub fn id(&self, name: &str) -> Result<SortId, KernelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| KernelError::UnknownSort(name.to_string()))
    }

    pub fn contains_sort(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn name(&self, id: SortId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn parent(&self, id: SortId) -> Option<SortId> {
        self.parent[id.0 as usize]
    }

    pub fn sorts(&self) -> impl Iterator<Item = (SortId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (SortId(i as u32), n.as_str()))
    }

    /// True when `sub` equals `sup` or lies below it.
    pub fn is_subsort(&self, sub: SortId, sup: SortId) -> bool {
        let mut cur = Some(sub);
        while let Some(s) = cur {
            if s == sup {
                return true;
            }
            cur = self.parent(s);
        }
        false
    }

    /// The more specific of two comparable sorts.
    pub fn meet(&self, a: SortId, b: SortId) -> Option<SortId> {
        if self.is_subsort(a, b) {
            Some(a)
        } else if self.is_subsort(b, a) {
            Some(b)
        } else {
            None
        }
    }

    pub fn sort_of(&self, object: &str) -> Option<SortId> {
        self.object_index.get(object).map(|&i| self.objects[i].1)
    }

    pub fn has_object(&self, object: &str) -> bool {
        self.object_index.contains_key(object)
    }

    pub fn is_member(&self, object: &str, sort: SortId) -> bool {
        self.sort_of(object)
            .is_some_and(|s| self.is_subsort(s, sort))
    }

    /// Objects of `sort` (including subsorts), in declaration order.
    pub fn members(&self, sort: SortId) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, s)| self.is_subsort(*s, sort))
            .map(|(o, _)| o.as_str())
            .collect()
    }

    pub fn objects(&self) -> impl Iterator<Item = (&str, SortId)> {
        self.objects.iter().map(|(o, s)| (o.as_str(), *s))
    }

    /// Copy of the tree keeping only objects for which `keep` returns true.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> SortTree {
        let mut out = SortTree {
            names: self.names.clone(),
            parent: self.parent.clone(),
            index: self.index.clone(),
            ..Default::default()
        };
        for (o, s) in &self.objects {
            if keep(o) {
                out.object_index.insert(o.clone(), out.objects.len());
                out.objects.push((o.clone(), *s));
            }
        }
        out
    }

    /// Names of the sort and all of its ancestors, most specific first.
    pub fn ancestry(&self, id: SortId) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(s) = cur {
            out.push(self.name(s));
            cur = self.parent(s);
        }
        out
    }

    pub fn object_names(&self) -> BTreeSet<&str> {
        self.objects.iter().map(|(o, _)| o.as_str()).collect()
    }
}
