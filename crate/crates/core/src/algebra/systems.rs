//! Collections of quantum systems, the grades of quantum effects.
//!
//! A collection is a set of system identifiers drawn from a shared registry
//! that fixes each system's Hilbert-space dimension. Collections are kept in
//! lexicographic order of identifiers, which is the global order used to lay
//! out the tensor factors of `H_C`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Dimension of every known system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry(Arc<BTreeMap<String, usize>>);

impl Registry {
    pub fn new(dims: BTreeMap<String, usize>) -> Result<Self> {
        if let Some((name, _)) = dims.iter().find(|(_, d)| **d == 0) {
            return Err(Error::InvalidValue(format!(
                "system `{name}` has dimension zero"
            )));
        }
        Ok(Registry(Arc::new(dims)))
    }

    /// `n` qubits named `q1..qn`.
    pub fn qubits(n: usize) -> Self {
        let dims = (1..=n).map(|i| (format!("q{i}"), 2)).collect();
        Registry(Arc::new(dims))
    }

    pub fn dim(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn dims(&self) -> &BTreeMap<String, usize> {
        &self.0
    }

    /// The collection of every registered system (`Sys`).
    pub fn all(&self) -> SystemCollection {
        SystemCollection {
            names: self.0.keys().cloned().collect(),
            registry: self.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemCollection {
    names: BTreeSet<String>,
    registry: Registry,
}

impl SystemCollection {
    pub fn empty(registry: &Registry) -> Self {
        SystemCollection {
            names: BTreeSet::new(),
            registry: registry.clone(),
        }
    }

    pub fn new<I, S>(registry: &Registry, names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        if let Some(unknown) = names.iter().find(|n| registry.dim(n).is_none()) {
            return Err(Error::UnknownSystem(unknown.clone()));
        }
        Ok(SystemCollection {
            names,
            registry: registry.clone(),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.names.iter().map(String::as_str)
    }

    pub fn to_vec(&self) -> Vec<String> {
        self.names.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    /// Per-factor dimensions in global order.
    pub fn factor_dims(&self) -> Vec<usize> {
        self.names
            .iter()
            .map(|n| self.registry.dim(n).expect("registered"))
            .collect()
    }

    /// Dimension of `H_C`; the empty collection has dimension 1.
    pub fn dim(&self) -> usize {
        self.factor_dims().iter().product()
    }

    pub fn is_disjoint(&self, other: &SystemCollection) -> bool {
        self.names.is_disjoint(&other.names)
    }

    pub fn is_subset(&self, other: &SystemCollection) -> bool {
        self.names.is_subset(&other.names)
    }

    /// Partial disjoint union: `None` when the collections overlap or come
    /// from different registries.
    pub fn union(&self, other: &SystemCollection) -> Option<SystemCollection> {
        if self.registry != other.registry || !self.is_disjoint(other) {
            return None;
        }
        Some(SystemCollection {
            names: self.names.union(&other.names).cloned().collect(),
            registry: self.registry.clone(),
        })
    }

    /// Like [`union`](Self::union), reporting the clash as an error.
    pub fn try_union(&self, other: &SystemCollection) -> Result<SystemCollection> {
        self.union(other).ok_or_else(|| Error::GradeClash {
            left: self.to_vec(),
            right: other.to_vec(),
        })
    }

    /// `Sys \ C`.
    pub fn complement(&self) -> SystemCollection {
        SystemCollection {
            names: self
                .registry
                .names()
                .filter(|n| !self.names.contains(*n))
                .map(str::to_owned)
                .collect(),
            registry: self.registry.clone(),
        }
    }

    /// `self \ other`, defined when `other ⊆ self`.
    pub fn difference(&self, other: &SystemCollection) -> Result<SystemCollection> {
        if !other.is_subset(self) {
            return Err(Error::NotSubset {
                sub: other.to_vec(),
                sup: self.to_vec(),
            });
        }
        Ok(SystemCollection {
            names: self.names.difference(&other.names).cloned().collect(),
            registry: self.registry.clone(),
        })
    }
}

impl fmt::Display for SystemCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.names.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}
