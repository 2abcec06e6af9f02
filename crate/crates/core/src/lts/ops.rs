//! Operators on systems: weight remapping, instantiation, partial
//! evaluation and parallel composition.

use std::collections::{BTreeMap, BTreeSet};

use super::{Distribution, Elts, StateId};
use crate::distribution::{product_alpha, EffectDistribution, EffectMorphism};
use crate::error::{Error, Result};
use crate::quantum::DensityOperator;

/// How the two components of a parallel composition interact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[non_exhaustive]
pub enum Synchronization {
    /// Interleaving plus a silent handshake on complementary labels.
    #[default]
    Ccs,
}

impl Elts {
    /// Applies an effect-algebra morphism to every weight.
    pub fn remap_weights(&self, m: &EffectMorphism) -> Result<Elts> {
        m.check_domain(&self.ctx, &self.grade)?;
        let ctx = m.target_context(&self.ctx);
        let grade = m.target_grade(&self.ctx, &self.grade)?;
        let mut out = Elts::from_parts(
            ctx,
            grade,
            self.states.clone(),
            self.labels.clone(),
            BTreeMap::new(),
            self.markov_chain,
        );
        for ((s, l), ds) in &self.transitions {
            // Keep empty groups so the shape of the transition function survives.
            out.transitions.entry((s.clone(), l.clone())).or_default();
            for d in ds {
                out.add_transition(s.clone(), l.clone(), d.map_weights(&self.ctx, m)?);
            }
        }
        Ok(out)
    }

    /// The probabilistic system seen from input state `rho` (Born rule).
    pub fn instantiate(&self, rho: &DensityOperator) -> Result<Elts> {
        if rho.systems() != &self.grade {
            return Err(grade_error(rho, self));
        }
        self.remap_weights(&EffectMorphism::born(rho.clone()))
    }

    /// Feeds `rho` into the systems it covers, leaving the rest as inputs.
    pub fn partial_eval(&self, rho: &DensityOperator) -> Result<Elts> {
        if !self.ctx.is_quantum() {
            return Err(Error::MorphismDomain(format!(
                "partial evaluation needs a quantum system, got {}",
                self.ctx.kind_name()
            )));
        }
        if !rho.systems().is_subset(&self.grade) {
            return Err(Error::NotSubset {
                sub: rho.systems().to_vec(),
                sup: self.grade.to_vec(),
            });
        }
        self.remap_weights(&EffectMorphism::PartialEval { rho: rho.clone() })
    }

    /// CCS-style parallel composition with product states named `s|t`.
    pub fn parallel(&self, other: &Elts) -> Result<Elts> {
        self.parallel_with(other, Synchronization::Ccs, "|")
    }

    pub fn parallel_with(&self, other: &Elts, sync: Synchronization, separator: &str) -> Result<Elts> {
        let Synchronization::Ccs = sync;
        if !self.ctx.same_kind(&other.ctx) {
            return Err(Error::KindMismatch {
                expected: self.ctx.kind_name().into(),
                found: other.ctx.kind_name().into(),
            });
        }
        let ctx = self.ctx.clone().with_tol(self.ctx.tol().max(other.ctx.tol()));
        let grade = self.grade.try_union(&other.grade)?;
        let labels = self.labels.merge(&other.labels)?;

        let join = |s: &str, t: &str| format!("{s}{separator}{t}");
        let states: BTreeSet<StateId> = self
            .states
            .iter()
            .flat_map(|s| other.states.iter().map(move |t| (s, t)))
            .map(|(s, t)| join(s, t))
            .collect();
        if states.len() != self.states.len() * other.states.len() {
            return Err(Error::IllFormed(format!(
                "product state names collide under separator `{separator}`"
            )));
        }
        let mut out = Elts::from_parts(ctx.clone(), grade, states, labels.clone(), BTreeMap::new(), false);
        let paired = |d: EffectDistribution<(StateId, StateId)>| -> Result<Distribution> {
            d.pushforward(&ctx, |(x, y)| join(x, y))
        };

        for (s, l, delta) in self.transitions() {
            for t in &other.states {
                let idle = EffectDistribution::unit(&ctx, t.clone()).extend(&ctx, &other.grade)?;
                out.add_transition(join(s, t), l, paired(product_alpha(&ctx, delta, &idle)?)?);
            }
        }
        for (t, l, theta) in other.transitions() {
            for s in &self.states {
                let idle = EffectDistribution::unit(&ctx, s.clone()).extend(&ctx, &self.grade)?;
                out.add_transition(join(s, t), l, paired(product_alpha(&ctx, &idle, theta)?)?);
            }
        }
        for (s, l, delta) in self.transitions() {
            let Some(co) = labels.bar(l) else { continue };
            for t in &other.states {
                for theta in other.successors(t, co) {
                    out.add_transition(join(s, t), labels.tau(), paired(product_alpha(&ctx, delta, theta)?)?);
                }
            }
        }
        Ok(out)
    }
}

fn grade_error(rho: &DensityOperator, sys: &Elts) -> Error {
    if rho.systems().dim() != sys.grade.dim() {
        Error::DimensionMismatch {
            expected: sys.grade.dim(),
            found: rho.systems().dim(),
        }
    } else {
        Error::MorphismDomain(format!(
            "density over {} but the system is graded {}",
            rho.systems(),
            sys.grade
        ))
    }
}
