//! Finite effect distributions and their graded monad structure.
//!
//! A distribution at grade `C` assigns an effect over `H_C` to each state of a
//! finite support; the total weight must stay below `1`. Weights are stored in
//! a sorted map with zero entries removed, so equal distributions have equal
//! representations (up to tolerance for quantum weights).
//!
//! Nested distributions are represented by index: an outer distribution over
//! `usize` whose support points into a slice of inner distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::algebra::{AlgebraKind, EffectAlgebraContext, EffectValue, FiniteTable, SystemCollection};
use crate::error::{Error, Result};
use crate::quantum::{self, DensityOperator, Rationalization};

#[derive(Clone, Debug, PartialEq)]
pub struct EffectDistribution<S: Ord> {
    grade: SystemCollection,
    weights: BTreeMap<S, EffectValue>,
}

impl<S: Ord + Clone> EffectDistribution<S> {
    /// Builds a distribution, merging repeated states and dropping zeros.
    pub fn new<I>(ctx: &EffectAlgebraContext, grade: SystemCollection, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EffectValue)>,
    {
        if !ctx.is_quantum() && !grade.is_empty() {
            return Err(Error::IllFormed(format!(
                "{} distributions carry no grade, got {grade}",
                ctx.kind_name()
            )));
        }
        let mut weights: BTreeMap<S, EffectValue> = BTreeMap::new();
        for (s, w) in entries {
            ctx.check_graded(&w, &grade)?;
            match weights.remove(&s) {
                None => {
                    weights.insert(s, w);
                }
                Some(prev) => {
                    let merged = ctx
                        .sum(&prev, &w)?
                        .ok_or_else(|| Error::IllFormed(format!("merged weight {prev} + {w} exceeds one")))?;
                    weights.insert(s, merged);
                }
            }
        }
        weights.retain(|_, w| !ctx.is_zero(w));
        if ctx.sum_all(weights.values(), &grade)?.is_none() {
            return Err(Error::IllFormed("total exceeds one".into()));
        }
        Ok(EffectDistribution { grade, weights })
    }

    /// Unchecked construction, for parsed input awaiting validation.
    pub(crate) fn from_parts(grade: SystemCollection, weights: BTreeMap<S, EffectValue>) -> Self {
        EffectDistribution { grade, weights }
    }

    /// The empty sub-distribution.
    pub fn empty(grade: SystemCollection) -> Self {
        EffectDistribution {
            grade,
            weights: BTreeMap::new(),
        }
    }

    /// `1•x` at the empty grade.
    pub fn unit(ctx: &EffectAlgebraContext, x: S) -> Self {
        let grade = SystemCollection::empty(&ctx.registry());
        let mut weights = BTreeMap::new();
        weights.insert(x, ctx.one(&grade));
        EffectDistribution { grade, weights }
    }

    pub fn grade(&self) -> &SystemCollection {
        &self.grade
    }

    pub fn weights(&self) -> &BTreeMap<S, EffectValue> {
        &self.weights
    }

    pub fn weight(&self, x: &S) -> Option<&EffectValue> {
        self.weights.get(x)
    }

    pub fn support(&self) -> impl Iterator<Item = &S> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self, ctx: &EffectAlgebraContext) -> Result<EffectValue> {
        ctx.sum_all(self.weights.values(), &self.grade)?
            .ok_or_else(|| Error::IllFormed("total exceeds one".into()))
    }

    /// Equal grades and supports, weights equal within the context tolerance.
    pub fn approx_eq(&self, ctx: &EffectAlgebraContext, other: &Self) -> bool {
        self.grade == other.grade
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|((x, a), (y, b))| x == y && ctx.approx_eq(a, b))
    }

    /// Largest weight distance, missing entries read as zero; infinite on a
    /// grade mismatch.
    pub fn deviation(&self, ctx: &EffectAlgebraContext, other: &Self) -> f64 {
        if self.grade != other.grade {
            return f64::INFINITY;
        }
        let zero = ctx.zero(&self.grade);
        let keys: std::collections::BTreeSet<&S> = self.weights.keys().chain(other.weights.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.weights.get(k).unwrap_or(&zero);
                let b = other.weights.get(k).unwrap_or(&zero);
                ctx.distance(a, b)
            })
            .fold(0.0, f64::max)
    }

    /// The functor action: the weight of `y` is the sum over its preimage.
    pub fn pushforward<T, F>(&self, ctx: &EffectAlgebraContext, f: F) -> Result<EffectDistribution<T>>
    where
        T: Ord + Clone,
        F: Fn(&S) -> T,
    {
        EffectDistribution::new(
            ctx,
            self.grade.clone(),
            self.weights.iter().map(|(x, w)| (f(x), w.clone())),
        )
    }

    /// Applies an effect-algebra morphism to every weight. `ctx` is the
    /// source context; the result lives in `m.target_context(ctx)`.
    pub fn map_weights(&self, ctx: &EffectAlgebraContext, m: &EffectMorphism) -> Result<Self> {
        m.check_domain(ctx, &self.grade)?;
        let target = m.target_context(ctx);
        let grade = m.target_grade(ctx, &self.grade)?;
        let entries = self
            .weights
            .iter()
            .map(|(x, w)| Ok((x.clone(), m.apply(ctx, w, &self.grade)?)))
            .collect::<Result<Vec<_>>>()?;
        EffectDistribution::new(&target, grade, entries)
    }

    /// `ξ`: tensor every weight with the identity on `target ∖ grade`.
    pub fn extend(&self, ctx: &EffectAlgebraContext, target: &SystemCollection) -> Result<Self> {
        if !ctx.is_quantum() {
            return Ok(self.clone());
        }
        let rest = target.difference(&self.grade)?;
        if rest.is_empty() {
            return Ok(self.clone());
        }
        let id = ctx.one(&rest);
        let weights = self
            .weights
            .iter()
            .map(|(x, w)| Ok((x.clone(), ctx.product(w, &self.grade, &id, &rest)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(EffectDistribution {
            grade: target.clone(),
            weights,
        })
    }

    /// Pushforward without re-validation: sub-sums of a well-formed
    /// distribution are always defined.
    pub(crate) fn quotient<T: Ord + Clone, F: Fn(&S) -> T>(&self, ctx: &EffectAlgebraContext, f: F) -> EffectDistribution<T> {
        let mut weights: BTreeMap<T, EffectValue> = BTreeMap::new();
        for (x, w) in &self.weights {
            match weights.entry(f(x)) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(w.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let merged = raw_add(ctx, e.get(), w);
                    e.insert(merged);
                }
            }
        }
        EffectDistribution {
            grade: self.grade.clone(),
            weights,
        }
    }

    /// `σ`: pair every state of `self` with the fixed `y`.
    pub(crate) fn strength_left<Y: Ord + Clone>(&self, y: &Y) -> EffectDistribution<(S, Y)> {
        EffectDistribution {
            grade: self.grade.clone(),
            weights: self.weights.iter().map(|(x, w)| ((x.clone(), y.clone()), w.clone())).collect(),
        }
    }

    /// `τ`: pair the fixed `x` with every state of `self`.
    pub(crate) fn strength_right<X: Ord + Clone>(&self, x: &X) -> EffectDistribution<(X, S)> {
        EffectDistribution {
            grade: self.grade.clone(),
            weights: self.weights.iter().map(|(y, w)| ((x.clone(), y.clone()), w.clone())).collect(),
        }
    }
}

fn raw_add(ctx: &EffectAlgebraContext, a: &EffectValue, b: &EffectValue) -> EffectValue {
    match (a, b) {
        (EffectValue::Rational(x), EffectValue::Rational(y)) => EffectValue::Rational(x + y),
        (EffectValue::Matrix(x), EffectValue::Matrix(y)) => EffectValue::Matrix(x + y),
        _ => ctx
            .sum(a, b)
            .ok()
            .flatten()
            .expect("sub-sum of a well-formed distribution"),
    }
}

/// `μ`: flattens `Σ_i e_i • Δ_i` into `x ↦ Σ_i e_i ⊠ Δ_i(x)`.
///
/// The support of `outer` indexes into `inner`, whose members must share one
/// grade disjoint from the outer grade.
pub fn graded_mult<S: Ord + Clone>(
    ctx: &EffectAlgebraContext,
    outer: &EffectDistribution<usize>,
    inner: &[EffectDistribution<S>],
) -> Result<EffectDistribution<S>> {
    let inner_grade = match inner.first() {
        Some(d) => d.grade.clone(),
        None => SystemCollection::empty(&ctx.registry()),
    };
    if let Some(d) = inner.iter().find(|d| d.grade != inner_grade) {
        return Err(Error::IllFormed(format!(
            "inner distributions disagree on grade: {inner_grade} and {}",
            d.grade
        )));
    }
    let grade = outer.grade.try_union(&inner_grade)?;
    let mut entries = Vec::new();
    for (&i, e) in &outer.weights {
        let delta = inner
            .get(i)
            .ok_or_else(|| Error::IllFormed(format!("outer support refers to missing inner distribution {i}")))?;
        for (x, w) in &delta.weights {
            entries.push((x.clone(), ctx.product(e, &outer.grade, w, &inner_grade)?));
        }
    }
    EffectDistribution::new(ctx, grade, entries)
}

/// `α`: the product distribution `(x, y) ↦ Δ(x) ⊠ Θ(y)`.
pub fn product_alpha<X: Ord + Clone, Y: Ord + Clone>(
    ctx: &EffectAlgebraContext,
    delta: &EffectDistribution<X>,
    theta: &EffectDistribution<Y>,
) -> Result<EffectDistribution<(X, Y)>> {
    let grade = delta.grade.try_union(&theta.grade)?;
    let mut weights = BTreeMap::new();
    for (x, a) in &delta.weights {
        for (y, b) in &theta.weights {
            let w = ctx.product(a, &delta.grade, b, &theta.grade)?;
            if !ctx.is_zero(&w) {
                weights.insert((x.clone(), y.clone()), w);
            }
        }
    }
    Ok(EffectDistribution { grade, weights })
}

/// Structure-preserving maps between effect algebras, applied weight-wise.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectMorphism {
    Identity,
    /// `L ↦ tr(Lρ)`, rationalized into the probability algebra.
    Born {
        rho: DensityOperator,
        rationalization: Rationalization,
    },
    /// `L ↦ tr_{C'}(L (ρ ⊠ I))` for `ρ` over `C'`.
    PartialEval { rho: DensityOperator },
    /// A homomorphism out of a finite table, given on every element.
    FiniteHom(FiniteHom),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteHom {
    source: Arc<FiniteTable>,
    target: EffectAlgebraContext,
    images: Vec<EffectValue>,
}

impl FiniteHom {
    /// Checks that `images` preserves `1` and every defined sum.
    pub fn new(source: &FiniteTable, target: EffectAlgebraContext, images: BTreeMap<String, EffectValue>) -> Result<Self> {
        if target.is_quantum() {
            return Err(Error::Unsupported("finite homomorphisms must target an ungraded algebra".into()));
        }
        let bad = |detail: String| Error::MorphismDomain(detail);
        let mut by_id = Vec::with_capacity(source.len());
        for id in 0..source.len() {
            let name = source.name(id);
            let v = images
                .get(name)
                .ok_or_else(|| bad(format!("no image for `{name}`")))?
                .clone();
            target.check(&v)?;
            by_id.push(v);
        }
        if let Some(extra) = images.keys().find(|k| source.id(k).is_none()) {
            return Err(bad(format!("`{extra}` is not in the source carrier")));
        }
        let grade = SystemCollection::empty(&target.registry());
        if !target.approx_eq(&by_id[source.one()], &target.one(&grade)) {
            return Err(bad("the top element is not sent to one".into()));
        }
        for a in 0..source.len() {
            for b in 0..source.len() {
                if let Some(s) = source.sum(a, b) {
                    let image_sum = target.sum(&by_id[a], &by_id[b])?;
                    if !image_sum.is_some_and(|v| target.approx_eq(&v, &by_id[s])) {
                        return Err(bad(format!(
                            "sum {} + {} is not preserved",
                            source.name(a),
                            source.name(b)
                        )));
                    }
                }
            }
        }
        Ok(FiniteHom {
            source: Arc::new(source.clone()),
            target,
            images: by_id,
        })
    }

    pub fn image(&self, name: &str) -> Option<&EffectValue> {
        self.source.id(name).map(|id| &self.images[id])
    }
}

impl EffectMorphism {
    pub fn born(rho: DensityOperator) -> Self {
        EffectMorphism::Born {
            rho,
            rationalization: Rationalization::default(),
        }
    }

    pub fn check_domain(&self, ctx: &EffectAlgebraContext, grade: &SystemCollection) -> Result<()> {
        let fail = |detail: String| Err(Error::MorphismDomain(detail));
        match self {
            EffectMorphism::Identity => Ok(()),
            EffectMorphism::Born { rho, .. } => {
                if !ctx.is_quantum() {
                    return fail(format!("Born instantiation needs quantum weights, got {}", ctx.kind_name()));
                }
                if rho.systems() != grade {
                    return fail(format!("density over {} but weights over {grade}", rho.systems()));
                }
                Ok(())
            }
            EffectMorphism::PartialEval { rho } => {
                if !ctx.is_quantum() {
                    return fail(format!("partial evaluation needs quantum weights, got {}", ctx.kind_name()));
                }
                if !rho.systems().is_subset(grade) {
                    return fail(format!("density over {} is not within {grade}", rho.systems()));
                }
                Ok(())
            }
            EffectMorphism::FiniteHom(h) => match ctx.kind() {
                AlgebraKind::Finite(t) if **t == *h.source => Ok(()),
                _ => fail(format!("homomorphism expects the source table, got {}", ctx.kind_name())),
            },
        }
    }

    pub fn target_context(&self, ctx: &EffectAlgebraContext) -> EffectAlgebraContext {
        match self {
            EffectMorphism::Identity | EffectMorphism::PartialEval { .. } => ctx.clone(),
            // Born values of effects equal within `tol` differ by about as
            // much, so the probability side inherits the tolerance.
            EffectMorphism::Born { .. } => EffectAlgebraContext::probability().with_tol(ctx.tol()),
            EffectMorphism::FiniteHom(h) => h.target.clone(),
        }
    }

    pub fn target_grade(&self, ctx: &EffectAlgebraContext, grade: &SystemCollection) -> Result<SystemCollection> {
        match self {
            EffectMorphism::Identity => Ok(grade.clone()),
            EffectMorphism::PartialEval { rho } => grade.difference(rho.systems()),
            EffectMorphism::Born { .. } => Ok(SystemCollection::empty(&Default::default())),
            EffectMorphism::FiniteHom(h) => {
                let _ = ctx;
                Ok(SystemCollection::empty(&h.target.registry()))
            }
        }
    }

    /// The image of one weight over `grade`.
    pub fn apply(&self, ctx: &EffectAlgebraContext, v: &EffectValue, grade: &SystemCollection) -> Result<EffectValue> {
        self.check_domain(ctx, grade)?;
        let matrix = || {
            v.as_matrix()
                .ok_or_else(|| Error::MorphismDomain(format!("expected a matrix weight, got {}", v.kind_name())))
        };
        match self {
            EffectMorphism::Identity => Ok(v.clone()),
            EffectMorphism::Born { rho, rationalization } => {
                Ok(EffectValue::Rational(quantum::born_rational(matrix()?, rho, *rationalization)?))
            }
            EffectMorphism::PartialEval { rho } => {
                Ok(EffectValue::Matrix(quantum::partial_evaluation(matrix()?, grade, rho)?))
            }
            EffectMorphism::FiniteHom(h) => match v {
                EffectValue::Finite(name) => h
                    .image(name)
                    .cloned()
                    .ok_or_else(|| Error::MorphismDomain(format!("`{name}` is not in the source carrier"))),
                _ => Err(Error::MorphismDomain(format!("expected a table element, got {}", v.kind_name()))),
            },
        }
    }
}

impl<S: Ord + fmt::Display> fmt::Display for EffectDistribution<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weights.is_empty() {
            return write!(f, "0");
        }
        for (k, (x, w)) in self.weights.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{w}•{x}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ratio, Registry};
    use crate::quantum::{identity, kron, max_abs_diff, named, CMatrix};

    fn q(n: i64, d: i64) -> EffectValue {
        EffectValue::Rational(ratio(n, d))
    }

    fn m(name: &str) -> EffectValue {
        EffectValue::Matrix(named(name).unwrap())
    }

    fn qctx() -> EffectAlgebraContext {
        EffectAlgebraContext::quantum(Registry::qubits(3))
    }

    fn sys(ctx: &EffectAlgebraContext, names: &[&str]) -> SystemCollection {
        SystemCollection::new(&ctx.registry(), names.iter().copied()).unwrap()
    }

    fn pctx() -> EffectAlgebraContext {
        EffectAlgebraContext::probability()
    }

    fn none() -> SystemCollection {
        SystemCollection::empty(&Registry::default())
    }

    fn dist<S: Ord + Clone>(ctx: &EffectAlgebraContext, grade: SystemCollection, e: Vec<(S, EffectValue)>) -> EffectDistribution<S> {
        EffectDistribution::new(ctx, grade, e).unwrap()
    }

    fn as_matrix(v: &EffectValue) -> &CMatrix {
        v.as_matrix().unwrap()
    }

    #[test]
    fn construction_drops_zeros_and_rejects_excess() {
        let ctx = pctx();
        let d = dist(&ctx, none(), vec![("a", q(1, 2)), ("b", q(0, 1)), ("a", q(1, 4))]);
        assert_eq!(d.len(), 1);
        assert_eq!(d.weight(&"a"), Some(&q(3, 4)));
        let err = EffectDistribution::new(&ctx, none(), vec![("a", q(2, 3)), ("b", q(2, 3))]).unwrap_err();
        assert!(matches!(err, Error::IllFormed(_)));

        let qc = qctx();
        let twice = EffectValue::Matrix(identity(2).scale(0.75));
        let err = EffectDistribution::new(&qc, sys(&qc, &["q1"]), vec![("a", twice.clone()), ("b", twice)]).unwrap_err();
        assert!(err.to_string().contains("total exceeds one"));
    }

    #[test]
    fn pushforward_examples() {
        let ctx = pctx();
        let d = dist(&ctx, none(), vec![("x", q(1, 2)), ("y", q(1, 2))]);
        assert_eq!(d.pushforward(&ctx, |s| *s).unwrap(), d);
        let merged = d.pushforward(&ctx, |_| "z").unwrap();
        assert_eq!(merged, dist(&ctx, none(), vec![("z", q(1, 1))]));

        let qc = qctx();
        let g = sys(&qc, &["q1"]);
        let d = dist(&qc, g.clone(), vec![("x3", m("proj0")), ("x4", m("proj1"))]);
        let z = d.pushforward(&qc, |_| "z").unwrap();
        assert!(max_abs_diff(as_matrix(z.weight(&"z").unwrap()), &identity(2)) < 1e-12);
    }

    #[test]
    fn remapping_by_born_values() {
        let qc = EffectAlgebraContext::quantum(Registry::qubits(1));
        let g = qc.registry().all();
        let d = dist(&qc, g.clone(), vec![("s", m("proj0")), ("t", m("proj1"))]);
        let plus = DensityOperator::new(g.clone(), named("proj+").unwrap(), 1e-9).unwrap();
        let got = d.map_weights(&qc, &EffectMorphism::born(plus)).unwrap();
        assert_eq!(got.weights(), dist(&pctx(), none(), vec![("s", q(1, 2)), ("t", q(1, 2))]).weights());
        let one = DensityOperator::new(g, named("proj1").unwrap(), 1e-9).unwrap();
        let got = d.map_weights(&qc, &EffectMorphism::born(one)).unwrap();
        assert_eq!(got.weights(), dist(&pctx(), none(), vec![("t", q(1, 1))]).weights());
        assert_eq!(d.map_weights(&qc, &EffectMorphism::Identity).unwrap(), d);
    }

    #[test]
    fn born_needs_matching_grade() {
        let qc = qctx();
        let d = dist(&qc, sys(&qc, &["q1"]), vec![("s", m("proj0"))]);
        let rho = DensityOperator::maximally_mixed(sys(&qc, &["q2"]));
        assert!(matches!(
            d.map_weights(&qc, &EffectMorphism::born(rho)),
            Err(Error::MorphismDomain(_))
        ));
    }

    #[test]
    fn unit_in_every_kind() {
        let d = EffectDistribution::unit(&pctx(), "x");
        assert_eq!(d.weight(&"x"), Some(&q(1, 1)));
        let qc = qctx();
        let d = EffectDistribution::unit(&qc, "x");
        assert!(d.grade().is_empty());
        assert_eq!(as_matrix(d.weight(&"x").unwrap()), &identity(1));
        let fc = EffectAlgebraContext::finite(FiniteTable::new(crate::algebra::diamond_spec()).unwrap());
        let d = EffectDistribution::unit(&fc, "x");
        assert_eq!(d.weight(&"x"), Some(&EffectValue::Finite("1".into())));
    }

    #[test]
    fn multiplication_matches_direct_kronecker() {
        let qc = qctx();
        let (g1, g2) = (sys(&qc, &["q1"]), sys(&qc, &["q2"]));
        let inner = vec![
            dist(&qc, g2.clone(), vec![("x", m("proj+"))]),
            dist(&qc, g2.clone(), vec![("x", m("proj-"))]),
        ];
        let outer = dist(&qc, g1.clone(), vec![(0, m("proj0")), (1, m("proj1"))]);
        let got = graded_mult(&qc, &outer, &inner).unwrap();
        assert_eq!(got.grade(), &sys(&qc, &["q1", "q2"]));
        // q1 < q2, so the sorted product is the plain Kronecker product.
        let direct = kron(&named("proj0").unwrap(), &named("proj+").unwrap())
            + kron(&named("proj1").unwrap(), &named("proj-").unwrap());
        assert!(max_abs_diff(as_matrix(got.weight(&"x").unwrap()), &direct) < 1e-12);
    }

    #[test]
    fn multiplication_sorts_when_outer_is_later() {
        let qc = qctx();
        let (g1, g3) = (sys(&qc, &["q1"]), sys(&qc, &["q3"]));
        let inner = vec![dist(&qc, g1, vec![("x", m("proj+"))])];
        let outer = dist(&qc, g3, vec![(0, m("proj1"))]);
        let got = graded_mult(&qc, &outer, &inner).unwrap();
        let direct = kron(&named("proj+").unwrap(), &named("proj1").unwrap());
        assert!(max_abs_diff(as_matrix(got.weight(&"x").unwrap()), &direct) < 1e-12);
    }

    #[test]
    fn multiplication_left_unit_and_grade_clash() {
        let qc = qctx();
        let g1 = sys(&qc, &["q1"]);
        let delta = dist(&qc, g1.clone(), vec![("a", m("proj0")), ("b", m("proj1"))]);
        let outer = EffectDistribution::unit(&qc, 0usize);
        let got = graded_mult(&qc, &outer, std::slice::from_ref(&delta)).unwrap();
        assert!(got.approx_eq(&qc, &delta));

        let outer = dist(&qc, g1.clone(), vec![(0usize, m("proj0"))]);
        let err = graded_mult(&qc, &outer, &[delta]).unwrap_err();
        assert!(err.to_string().contains("grade clash (no-cloning)"));
    }

    #[test]
    fn product_examples() {
        let ctx = pctx();
        let d = dist(&ctx, none(), vec![("a", q(1, 2)), ("b", q(1, 2))]);
        let t = EffectDistribution::unit(&ctx, "c");
        let p = product_alpha(&ctx, &d, &t).unwrap();
        assert_eq!(p, dist(&ctx, none(), vec![(("a", "c"), q(1, 2)), (("b", "c"), q(1, 2))]));

        let qc = qctx();
        let (g1, g2) = (sys(&qc, &["q1"]), sys(&qc, &["q2"]));
        let d = dist(&qc, g1, vec![("s", m("proj0")), ("t", m("proj1"))]);
        let t = dist(&qc, g2, vec![("u", m("proj+")), ("v", m("proj-"))]);
        let p = product_alpha(&qc, &d, &t).unwrap();
        assert_eq!(p.len(), 4);
        for (x, a) in [("s", "proj0"), ("t", "proj1")] {
            for (y, b) in [("u", "proj+"), ("v", "proj-")] {
                let oracle = kron(&named(a).unwrap(), &named(b).unwrap());
                assert!(max_abs_diff(as_matrix(p.weight(&(x, y)).unwrap()), &oracle) < 1e-12);
            }
        }
        let swapped = product_alpha(&qc, &t, &d).unwrap().pushforward(&qc, |(y, x)| (*x, *y)).unwrap();
        assert!(swapped.approx_eq(&qc, &p));
    }

    #[test]
    fn extension_examples() {
        let qc = qctx();
        let g1 = sys(&qc, &["q1"]);
        let point = EffectDistribution::unit(&qc, "x").extend(&qc, &g1).unwrap();
        assert_eq!(point.grade(), &g1);
        assert_eq!(as_matrix(point.weight(&"x").unwrap()), &identity(2));

        let d = dist(&qc, g1.clone(), vec![("a", m("proj+"))]);
        assert_eq!(d.extend(&qc, &g1).unwrap(), d);
        let (g12, g123) = (sys(&qc, &["q1", "q2"]), sys(&qc, &["q1", "q2", "q3"]));
        let stepwise = d.extend(&qc, &g12).unwrap().extend(&qc, &g123).unwrap();
        assert!(stepwise.approx_eq(&qc, &d.extend(&qc, &g123).unwrap()));
        assert!(matches!(
            d.extend(&qc, &sys(&qc, &["q2"])),
            Err(Error::NotSubset { .. })
        ));
    }

    #[test]
    fn extension_keeps_born_values() {
        let qc = qctx();
        let (g1, g2) = (sys(&qc, &["q1"]), sys(&qc, &["q2"]));
        let d = dist(&qc, g1.clone(), vec![("a", m("proj+")), ("b", m("proj-"))]);
        let rho1 = DensityOperator::new(g1.clone(), named("proj0").unwrap(), 1e-9).unwrap();
        let rho2 = DensityOperator::new(g2.clone(), named("proj1").unwrap(), 1e-9).unwrap();
        let before = d.map_weights(&qc, &EffectMorphism::born(rho1.clone())).unwrap();
        let wide = d.extend(&qc, &sys(&qc, &["q1", "q2"])).unwrap();
        let after = wide.map_weights(&qc, &EffectMorphism::born(rho1.boxtimes(&rho2).unwrap())).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn strengths_compose_to_the_product() {
        let ctx = pctx();
        let d = dist(&ctx, none(), vec![("a", q(1, 3)), ("b", q(2, 3))]);
        let t = dist(&ctx, none(), vec![("u", q(1, 4)), ("v", q(1, 2))]);
        let ys: Vec<&str> = t.support().copied().collect();
        let outer = t.pushforward(&ctx, |y| ys.iter().position(|z| z == y).unwrap()).unwrap();
        let inner: Vec<_> = ys.iter().map(|y| d.strength_left(y)).collect();
        assert_eq!(graded_mult(&ctx, &outer, &inner).unwrap(), product_alpha(&ctx, &d, &t).unwrap());
        let xs: Vec<&str> = d.support().copied().collect();
        let outer = d.pushforward(&ctx, |x| xs.iter().position(|z| z == x).unwrap()).unwrap();
        let inner: Vec<_> = xs.iter().map(|x| t.strength_right(x)).collect();
        assert_eq!(graded_mult(&ctx, &outer, &inner).unwrap(), product_alpha(&ctx, &d, &t).unwrap());
    }

    #[test]
    fn finite_homomorphism_into_probabilities() {
        let table = FiniteTable::new(crate::algebra::diamond_spec()).unwrap();
        let fc = EffectAlgebraContext::finite(table.clone());
        let images: BTreeMap<String, EffectValue> = [("0", q(0, 1)), ("a", q(1, 3)), ("a'", q(2, 3)), ("1", q(1, 1))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let hom = FiniteHom::new(&table, pctx(), images.clone()).unwrap();
        let d = dist(&fc, none(), vec![("s", EffectValue::Finite("a".into())), ("t", EffectValue::Finite("a'".into()))]);
        let got = d.map_weights(&fc, &EffectMorphism::FiniteHom(hom)).unwrap();
        assert_eq!(got, dist(&pctx(), none(), vec![("s", q(1, 3)), ("t", q(2, 3))]));

        let mut broken = images;
        broken.insert("a'".into(), q(1, 2));
        assert!(matches!(FiniteHom::new(&table, pctx(), broken), Err(Error::MorphismDomain(_))));
    }
}
