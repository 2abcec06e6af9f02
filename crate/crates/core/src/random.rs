//! Seeded generators for effects, distributions and systems.

use num_bigint::BigInt;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{EffectAlgebraContext, EffectValue, Rational, Registry, SystemCollection};
use crate::distribution::EffectDistribution;
use crate::lts::{Distribution, Elts, LabelSet};
use crate::quantum::{self, c, CMatrix};

/// A uniformly chosen fraction `k/d` in `[0, 1]` with `d ≤ max_den`.
pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> Rational {
    let d = rng.random_range(1..=max_den.max(1));
    let k = rng.random_range(0..=d);
    Rational::new(BigInt::from(k), BigInt::from(d))
}

/// Haar-like unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let rank = rng.random_range(1..=d);
    let g = CMatrix::from_fn(d, rank, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    quantum::hermitian_part(&(&g * g.adjoint()))
}

fn largest_eigenvalue(m: &CMatrix) -> f64 {
    quantum::eigenvalues(m).into_iter().fold(0.0, f64::max)
}

/// An effect `0 ⊑ L ⊑ I` with random eigenbasis, rank and norm.
pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let a = random_psd(rng, d);
    let scale: f64 = rng.random_range(0.05..1.0);
    quantum::hermitian_part(&a.unscale(largest_eigenvalue(&a)).scale(scale))
}

/// `n` effects whose pairwise distances all exceed `1e-3`.
pub fn random_effect_set<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = Vec::with_capacity(n);
    while out.len() < n {
        let e = random_effect(rng, d);
        if out.iter().all(|f| quantum::max_abs_diff(f, &e) > 1e-3) {
            out.push(e);
        }
    }
    out
}

/// A density operator matrix over `d` dimensions.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    quantum::random_density(rng, d)
}

/// Pairwise disjoint collections drawn from `registry`, one per requested
/// slot; each system goes to a random slot or to none.
pub fn random_disjoint_grades<R: Rng + ?Sized>(rng: &mut R, registry: &Registry, slots: usize) -> Vec<SystemCollection> {
    let mut parts: Vec<Vec<String>> = vec![Vec::new(); slots];
    for name in registry.names() {
        let k = rng.random_range(0..=slots);
        if k < slots {
            parts[k].push(name.to_string());
        }
    }
    parts
        .into_iter()
        .map(|p| SystemCollection::new(registry, p).expect("names come from the registry"))
        .collect()
}

/// A probability sub-distribution over a random nonempty subset of `states`.
pub fn random_probability_distribution<S, R>(rng: &mut R, states: &[S], max_den: i64) -> EffectDistribution<S>
where
    S: Ord + Clone,
    R: Rng + ?Sized,
{
    let ctx = EffectAlgebraContext::probability();
    let grade = SystemCollection::empty(&ctx.registry());
    let k = rng.random_range(1..=states.len().clamp(1, 4));
    let chosen: Vec<&S> = states.choose_multiple(rng, k).collect();
    let den = rng.random_range(1..=max_den.max(1));
    // Split at most `den` units of mass `1/den` among the chosen states.
    let mut left = rng.random_range(1..=den);
    let mut entries = Vec::new();
    for (i, s) in chosen.iter().enumerate() {
        let take = if i + 1 == chosen.len() { left } else { rng.random_range(0..=left) };
        left -= take;
        entries.push(((*s).clone(), EffectValue::Rational(Rational::new(BigInt::from(take), BigInt::from(den)))));
    }
    EffectDistribution::new(&ctx, grade, entries).expect("mass at most one")
}

/// A quantum sub-distribution over a random nonempty subset of `states`,
/// with weights of random rank whose total has norm at most one.
pub fn random_quantum_distribution<S, R>(
    rng: &mut R,
    ctx: &EffectAlgebraContext,
    grade: &SystemCollection,
    states: &[S],
) -> EffectDistribution<S>
where
    S: Ord + Clone,
    R: Rng + ?Sized,
{
    let d = grade.dim();
    let k = rng.random_range(1..=states.len().clamp(1, 3));
    let chosen: Vec<&S> = states.choose_multiple(rng, k).collect();
    let parts: Vec<CMatrix> = (0..k).map(|_| random_psd(rng, d)).collect();
    let total = parts.iter().fold(quantum::zeros(d), |acc, p| acc + p);
    let scale = rng.random_range(0.3..1.0) / largest_eigenvalue(&total);
    let entries = chosen
        .into_iter()
        .zip(parts)
        .map(|(s, p)| (s.clone(), EffectValue::Matrix(quantum::hermitian_part(&p.scale(scale)))));
    EffectDistribution::new(ctx, grade.clone(), entries).expect("total below identity")
}

/// A distribution of the context's kind; `grade` must be empty unless the
/// context is quantum.
pub fn random_distribution<S, R>(
    rng: &mut R,
    ctx: &EffectAlgebraContext,
    grade: &SystemCollection,
    states: &[S],
) -> EffectDistribution<S>
where
    S: Ord + Clone,
    R: Rng + ?Sized,
{
    if ctx.is_quantum() {
        random_quantum_distribution(rng, ctx, grade, states)
    } else {
        random_probability_distribution(rng, states, 6)
    }
}

/// Shape of a generated quantum system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QltsShape {
    pub max_states: usize,
    /// Use `a`/`abar` transitions alongside `tau`.
    pub visible: bool,
}

impl Default for QltsShape {
    fn default() -> Self {
        QltsShape {
            max_states: 8,
            visible: false,
        }
    }
}

fn label_set(visible: bool) -> LabelSet {
    if visible {
        LabelSet::new("tau", ["a".to_string(), "abar".to_string()], [("a".to_string(), "abar".to_string())])
            .expect("a and abar are co-names")
    } else {
        LabelSet::silent("tau")
    }
}

/// Two-outcome measurements `{E, I − E}` with `E` a sum of projectors onto
/// part of a random basis.
fn binary_measurement<R: Rng + ?Sized>(rng: &mut R, d: usize) -> (CMatrix, CMatrix) {
    let u = random_unitary(rng, d);
    let keep = rng.random_range(1..d.max(2));
    let mut e = quantum::zeros(d);
    for k in 0..keep.min(d) {
        let v = u.column(k);
        e += &v * v.adjoint();
    }
    let e = quantum::hermitian_part(&e);
    let rest = quantum::identity(d) - &e;
    (e, rest)
}

/// A random quantum system over `grade` (a collection of `registry`) using
/// at most six distinct effects: `I`, `I/2` and two random binary
/// measurements. Some states are copies of earlier ones so that related
/// pairs occur often.
pub fn random_qlts<R: Rng + ?Sized>(rng: &mut R, registry: &Registry, grade: &SystemCollection, shape: QltsShape) -> Elts {
    let ctx = EffectAlgebraContext::quantum(registry.clone());
    let d = grade.dim();
    let n = rng.random_range(2..=shape.max_states.max(2));
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let labels = label_set(shape.visible);
    let label_names: Vec<String> = labels.all().map(String::from).collect();
    let measurements = [binary_measurement(rng, d), binary_measurement(rng, d)];
    let id = quantum::identity(d);
    let half = id.scale(0.5);

    let mut sys = Elts::new(ctx.clone(), grade.clone(), names.iter().cloned(), labels, false);
    let mut moves: Vec<Vec<(String, Distribution)>> = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.35) {
            let j = rng.random_range(0..i);
            moves.push(moves[j].clone());
            continue;
        }
        let count = rng.random_range(0..=2);
        let mut mine = Vec::new();
        for _ in 0..count {
            let label = label_names.choose(rng).expect("labels are nonempty").clone();
            let pick = |rng: &mut R| names.choose(rng).expect("states are nonempty").clone();
            let entries: Vec<(String, CMatrix)> = match rng.random_range(0..4) {
                0 => vec![(pick(rng), id.clone())],
                1 => vec![(pick(rng), half.clone())],
                k => {
                    let (e, rest) = &measurements[k - 2];
                    vec![(pick(rng), e.clone()), (pick(rng), rest.clone())]
                }
            };
            let dist = Distribution::new(&ctx, grade.clone(), entries.into_iter().map(|(s, m)| (s, EffectValue::Matrix(m))))
                .expect("measurement outcomes sum to at most I");
            mine.push((label, dist));
        }
        moves.push(mine);
    }
    for (s, mine) in names.iter().zip(moves) {
        for (l, dist) in mine {
            sys.add_transition(s.clone(), l, dist);
        }
    }
    sys
}

/// A probabilistic Markov chain with at most `max_states` states. Weights
/// have small denominators and some states copy or lump earlier ones.
pub fn random_markov_chain<R: Rng + ?Sized>(rng: &mut R, max_states: usize) -> Elts {
    let ctx = EffectAlgebraContext::probability();
    let grade = SystemCollection::empty(&ctx.registry());
    let n = rng.random_range(2..=max_states.max(2));
    let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut sys = Elts::new(ctx.clone(), grade.clone(), names.iter().cloned(), LabelSet::silent("tau"), true);
    let mut steps: Vec<EffectDistribution<String>> = Vec::with_capacity(n);
    for i in 0..n {
        let step = if i > 0 && rng.random_bool(0.3) {
            steps[rng.random_range(0..i)].clone()
        } else if rng.random_bool(0.15) {
            EffectDistribution::empty(grade.clone())
        } else {
            random_probability_distribution(rng, &names, 4)
        };
        steps.push(step);
    }
    for (s, step) in names.iter().zip(steps) {
        sys.add_transition(s.clone(), "tau", step);
    }
    sys
}
