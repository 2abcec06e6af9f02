//! Effect-labelled transition systems.
//!
//! A system maps each (state, label) pair to a finite set of effect
//! distributions over its states. In Markov-chain mode there is a single
//! label and every state has exactly one distribution.

mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::algebra::{EffectAlgebraContext, SystemCollection};
use crate::distribution::EffectDistribution;
use crate::error::{Error, Result};

pub use ops::Synchronization;

pub type StateId = String;
pub type Label = String;
pub type Distribution = EffectDistribution<StateId>;

/// The silent label, the visible labels, and the co-name involution on them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    tau: Label,
    visible: BTreeSet<Label>,
    bar: BTreeMap<Label, Label>,
}

impl LabelSet {
    /// `bar` lists each pair once (in either direction); the involution is
    /// completed symmetrically. Every visible label needs a partner, possibly
    /// itself.
    pub fn new<V, B>(tau: impl Into<Label>, visible: V, bar: B) -> Result<Self>
    where
        V: IntoIterator<Item = Label>,
        B: IntoIterator<Item = (Label, Label)>,
    {
        let tau = tau.into();
        let visible: BTreeSet<Label> = visible.into_iter().collect();
        if visible.contains(&tau) {
            return Err(Error::LabelConflict(format!("`{tau}` is both silent and visible")));
        }
        let mut map = BTreeMap::new();
        for (a, b) in bar {
            for (x, y) in [(&a, &b), (&b, &a)] {
                if !visible.contains(x) {
                    return Err(Error::LabelConflict(format!("co-name of `{y}` is `{x}`, which is not visible")));
                }
                if let Some(prev) = map.insert(x.clone(), y.clone()) {
                    if &prev != y {
                        return Err(Error::LabelConflict(format!(
                            "`{x}` has two co-names, `{prev}` and `{y}`"
                        )));
                    }
                }
            }
        }
        if let Some(l) = visible.iter().find(|l| !map.contains_key(*l)) {
            return Err(Error::LabelConflict(format!("visible label `{l}` has no co-name")));
        }
        Ok(LabelSet { tau, visible, bar: map })
    }

    /// Only the silent label.
    pub fn silent(tau: impl Into<Label>) -> Self {
        LabelSet {
            tau: tau.into(),
            visible: BTreeSet::new(),
            bar: BTreeMap::new(),
        }
    }

    pub fn tau(&self) -> &str {
        &self.tau
    }

    pub fn visible(&self) -> &BTreeSet<Label> {
        &self.visible
    }

    pub fn bar(&self, label: &str) -> Option<&str> {
        self.bar.get(label).map(String::as_str)
    }

    /// Each co-name pair once, smaller label first.
    pub fn bar_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bar
            .iter()
            .filter(|(a, b)| a <= b)
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn contains(&self, label: &str) -> bool {
        label == self.tau || self.visible.contains(label)
    }

    /// Silent label first, then the visible ones in order.
    pub fn all(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.tau.as_str()).chain(self.visible.iter().map(String::as_str))
    }

    /// Union of two label sets; shared labels must agree on their role and
    /// co-name.
    pub fn merge(&self, other: &LabelSet) -> Result<LabelSet> {
        if self.tau != other.tau {
            return Err(Error::LabelConflict(format!(
                "silent labels differ: `{}` and `{}`",
                self.tau, other.tau
            )));
        }
        for l in self.visible.intersection(&other.visible) {
            if self.bar.get(l) != other.bar.get(l) {
                return Err(Error::LabelConflict(format!("label `{l}` has different co-names")));
            }
        }
        let visible = self.visible.union(&other.visible).cloned();
        let bar = self.bar.iter().chain(&other.bar).map(|(a, b)| (a.clone(), b.clone()));
        LabelSet::new(self.tau.clone(), visible, bar)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Elts {
    ctx: EffectAlgebraContext,
    grade: SystemCollection,
    states: BTreeSet<StateId>,
    labels: LabelSet,
    transitions: BTreeMap<(StateId, Label), Vec<Distribution>>,
    markov_chain: bool,
}

impl Elts {
    /// A system with no transitions yet.
    pub fn new<I>(ctx: EffectAlgebraContext, grade: SystemCollection, states: I, labels: LabelSet, markov_chain: bool) -> Self
    where
        I: IntoIterator,
        I::Item: Into<StateId>,
    {
        Elts {
            ctx,
            grade,
            states: states.into_iter().map(Into::into).collect(),
            labels,
            transitions: BTreeMap::new(),
            markov_chain,
        }
    }

    /// Adds `from →label dist`, ignoring it when an equal distribution is
    /// already present.
    pub fn add_transition(&mut self, from: impl Into<StateId>, label: impl Into<Label>, dist: Distribution) {
        let set = self.transitions.entry((from.into(), label.into())).or_default();
        if !set.iter().any(|d| d.approx_eq(&self.ctx, &dist)) {
            set.push(dist);
        }
    }

    pub fn context(&self) -> &EffectAlgebraContext {
        &self.ctx
    }

    pub fn grade(&self) -> &SystemCollection {
        &self.grade
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn markov_chain(&self) -> bool {
        self.markov_chain
    }

    pub fn has_state(&self, s: &str) -> bool {
        self.states.contains(s)
    }

    /// `c(s)(label)`; empty when there is no such transition.
    pub fn successors(&self, s: &str, label: &str) -> &[Distribution] {
        self.transitions
            .get(&(s.to_string(), label.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every transition in (state, label) order.
    pub fn transitions(&self) -> impl Iterator<Item = (&str, &str, &Distribution)> {
        self.transitions
            .iter()
            .flat_map(|((s, l), ds)| ds.iter().map(move |d| (s.as_str(), l.as_str(), d)))
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.values().map(Vec::len).sum()
    }

    /// Every invariant violation, each naming where it occurs.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.ctx.is_quantum() && !self.grade.is_empty() {
            out.push(format!("{} system carries grade {}", self.ctx.kind_name(), self.grade));
        }
        if self.markov_chain && !self.labels.visible().is_empty() {
            out.push("Markov chain declares visible labels".to_string());
        }
        for ((from, label), ds) in &self.transitions {
            for (j, d) in ds.iter().enumerate() {
                let here = format!("transition {from} --{label}--> (distribution {j})");
                out.extend(self.transition_violations(from, label, d).into_iter().map(|v| format!("{here}: {v}")));
            }
        }
        if self.markov_chain {
            for s in &self.states {
                let n: usize = self.labels.all().map(|l| self.successors(s, l).len()).sum();
                if n != 1 {
                    out.push(format!("Markov chain state `{s}` has {n} distributions, expected exactly one"));
                }
            }
        }
        out
    }

    /// Problems with a single transition `from --label--> d`.
    pub(crate) fn transition_violations(&self, from: &str, label: &str, d: &Distribution) -> Vec<String> {
        let mut out = Vec::new();
        if !self.states.contains(from) {
            out.push(format!("unknown state `{from}`"));
        }
        if !self.labels.contains(label) {
            out.push(format!("unknown label `{label}`"));
        }
        if d.grade() != &self.grade {
            out.push(format!("grade {} differs from system grade {}", d.grade(), self.grade));
            return out;
        }
        let mut weights_ok = true;
        for (s, w) in d.weights() {
            if !self.states.contains(s) {
                out.push(format!("unknown state `{s}` in support"));
            }
            if let Err(e) = self.ctx.check_graded(w, d.grade()) {
                out.push(format!("weight of `{s}`: {e}"));
                weights_ok = false;
            }
        }
        if weights_ok {
            match self.ctx.sum_all(d.weights().values(), d.grade()) {
                Ok(Some(_)) => {}
                Ok(None) => out.push("total exceeds one".to_string()),
                Err(e) => out.push(e.to_string()),
            }
        }
        out
    }

    /// `Ok(self)` when valid.
    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Applies a bijective renaming of states.
    pub fn rename<F: Fn(&str) -> StateId>(&self, f: F) -> Result<Elts> {
        let states: BTreeSet<StateId> = self.states.iter().map(|s| f(s)).collect();
        if states.len() != self.states.len() {
            return Err(Error::IllFormed("state renaming is not injective".into()));
        }
        let mut out = Elts {
            states,
            transitions: BTreeMap::new(),
            ..self.clone()
        };
        for (s, l, d) in self.transitions() {
            out.add_transition(f(s), l, d.pushforward(&self.ctx, |x| f(x))?);
        }
        Ok(out)
    }

    /// Same transitions under another context tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.ctx = self.ctx.with_tol(tol);
        self
    }

    /// The Markov-chain distribution of `s`, if in that mode.
    pub fn chain_step(&self, s: &str) -> Option<&Distribution> {
        if !self.markov_chain {
            return None;
        }
        self.successors(s, self.labels.tau()).first()
    }

    pub(crate) fn from_parts(
        ctx: EffectAlgebraContext,
        grade: SystemCollection,
        states: BTreeSet<StateId>,
        labels: LabelSet,
        transitions: BTreeMap<(StateId, Label), Vec<Distribution>>,
        markov_chain: bool,
    ) -> Self {
        Elts {
            ctx,
            grade,
            states,
            labels,
            transitions,
            markov_chain,
        }
    }
}

impl fmt::Display for Elts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} system over {}", self.ctx.kind_name(), self.grade)?;
        for (s, l, d) in self.transitions() {
            writeln!(f, "  {s} --{l}--> {d}")?;
        }
        Ok(())
    }
}
