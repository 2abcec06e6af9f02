//! Randomized law suites for the effect algebras, the graded monad and the
//! quantum primitives.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algebra::{
    coupling_feasible, ratio, EffectAlgebraContext, EffectValue, FeasibilityOptions, FiniteTable, FiniteTableSpec,
    Registry, SystemCollection,
};
use crate::distribution::{graded_mult, product_alpha, EffectDistribution, EffectMorphism};
use crate::error::{Error, Result};
use crate::quantum::{self, CMatrix, DensityOperator};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawScope {
    Algebra,
    Monad,
    Quantum,
    All,
}

impl LawScope {
    pub fn name(self) -> &'static str {
        match self {
            LawScope::Algebra => "algebra",
            LawScope::Monad => "monad",
            LawScope::Quantum => "quantum",
            LawScope::All => "all",
        }
    }
}

impl FromStr for LawScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(LawScope::Algebra),
            "monad" => Ok(LawScope::Monad),
            "quantum" => Ok(LawScope::Quantum),
            "all" => Ok(LawScope::All),
            other => Err(Error::Parse(format!("unknown law scope `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    pub seed: u64,
    pub samples: usize,
    /// Bound on deviations for quantum laws; other kinds must hold exactly.
    pub tol: f64,
    /// Finite algebra to check; a four-element default otherwise.
    pub table: Option<FiniteTable>,
    /// Test hook: replace the sorted Kronecker product by the plain one.
    #[doc(hidden)]
    pub corrupt_sort: bool,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            seed: 0,
            samples: 500,
            tol: quantum::DEFAULT_TOL,
            table: None,
            corrupt_sort: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawReport {
    pub suite: String,
    pub law: String,
    pub samples: usize,
    pub worst: f64,
    pub bound: f64,
    pub passed: bool,
}

impl LawReport {
    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "law": self.law,
            "samples": self.samples,
            "worst_deviation": finite_or_string(self.worst),
            "bound": self.bound,
            "passed": self.passed,
        })
    }
}

fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawSuiteReport {
    pub scope: LawScope,
    pub seed: u64,
    pub laws: Vec<LawReport>,
}

impl LawSuiteReport {
    pub fn all_passed(&self) -> bool {
        self.laws.iter().all(|l| l.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawReport> {
        self.laws.iter().filter(|l| !l.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scope": self.scope.name(),
            "seed": self.seed,
            "passed": self.all_passed(),
            "laws": self.laws.iter().map(LawReport::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn to_human(&self) -> String {
        let mut s = format!("laws {} (seed {})\n", self.scope.name(), self.seed);
        for l in &self.laws {
            s += &format!(
                "{} {}: {} ({} samples, worst {:.3e}, bound {:.0e})\n",
                if l.passed { "PASS" } else { "FAIL" },
                l.suite,
                l.law,
                l.samples,
                l.worst,
                l.bound
            );
        }
        s += if self.all_passed() { "all laws hold\n" } else { "some laws FAILED\n" };
        s
    }
}

impl fmt::Display for LawSuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_human())
    }
}

struct Tracker {
    suite: String,
    law: &'static str,
    bound: f64,
    samples: usize,
    worst: f64,
}

impl Tracker {
    fn new(suite: &str, law: &'static str, bound: f64) -> Self {
        Tracker {
            suite: suite.to_string(),
            law,
            bound,
            samples: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.samples += 1;
        if deviation.is_nan() || deviation > self.worst {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    fn holds(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 });
    }

    fn finish(self) -> LawReport {
        LawReport {
            passed: self.worst <= self.bound,
            suite: self.suite,
            law: self.law.to_string(),
            samples: self.samples,
            worst: self.worst,
            bound: self.bound,
        }
    }
}

/// The four-element algebra `{0, a, a', 1}` with `a + a' = 1`.
pub fn default_table() -> FiniteTable {
    let spec = FiniteTableSpec {
        carrier: ["0", "a", "a'", "1"].map(String::from).to_vec(),
        zero: "0".into(),
        one: "1".into(),
        sum: vec![["a".into(), "a'".into(), "1".into()]],
        complement: [("0", "1"), ("1", "0"), ("a", "a'"), ("a'", "a")]
            .into_iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect(),
    };
    FiniteTable::new(spec).expect("default table satisfies the axioms")
}

pub fn run_laws(scope: LawScope, cfg: &LawConfig) -> Result<LawSuiteReport> {
    let mut laws = Vec::new();
    if matches!(scope, LawScope::Algebra | LawScope::All) {
        laws.extend(algebra_laws(cfg)?);
    }
    if matches!(scope, LawScope::Monad | LawScope::All) {
        laws.extend(monad_laws(cfg)?);
    }
    if matches!(scope, LawScope::Quantum | LawScope::All) {
        laws.extend(quantum_laws(cfg)?);
    }
    Ok(LawSuiteReport {
        scope,
        seed: cfg.seed,
        laws,
    })
}

fn sample_value(rng: &mut ChaCha8Rng, ctx: &EffectAlgebraContext, grade: &SystemCollection) -> EffectValue {
    match ctx.table() {
        Some(t) => EffectValue::Finite(t.name(rng.random_range(0..t.len())).to_string()),
        None if ctx.is_quantum() => {
            let e = random::random_effect(rng, grade.dim());
            // Small effects keep sums defined often enough.
            let s = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 1.0 };
            EffectValue::Matrix(e.scale(s))
        }
        None => EffectValue::Rational(random::random_rational(rng, 12)),
    }
}

/// Effect-algebra axioms for one context.
pub fn algebra_laws_for(ctx: &EffectAlgebraContext, suite: &str, cfg: &LawConfig) -> Result<Vec<LawReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grade = if ctx.is_quantum() { ctx.registry().all() } else { SystemCollection::empty(&ctx.registry()) };
    let bound = if ctx.is_quantum() { cfg.tol } else { 0.0 };
    let zero = ctx.zero(&grade);
    let one = ctx.one(&grade);
    let dist = |a: &EffectValue, b: &EffectValue| ctx.distance(a, b);
    let n = cfg.samples;
    let attempts = 50 * n.max(1);

    let mut unit = Tracker::new(suite, "zero is a unit for the sum", bound);
    let mut compl = Tracker::new(suite, "a value and its orthocomplement sum to one", bound);
    let mut comm = Tracker::new(suite, "sum is commutative", bound);
    let mut refl = Tracker::new(suite, "order is reflexive", 0.0);
    for _ in 0..n {
        let a = sample_value(&mut rng, ctx, &grade);
        let b = sample_value(&mut rng, ctx, &grade);
        unit.record(ctx.sum(&a, &zero)?.map_or(f64::INFINITY, |s| dist(&s, &a)));
        let c = ctx.orthocomplement(&a)?;
        compl.record(ctx.sum(&a, &c)?.map_or(f64::INFINITY, |s| dist(&s, &one)));
        comm.record(match (ctx.sum(&a, &b)?, ctx.sum(&b, &a)?) {
            (Some(x), Some(y)) => dist(&x, &y),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        });
        refl.holds(ctx.leq(&a, &a)?);
    }

    let mut assoc = Tracker::new(suite, "sum is associative", bound);
    let mut tries = 0;
    while assoc.samples < n && tries < attempts {
        tries += 1;
        let (a, b, c) = (
            sample_value(&mut rng, ctx, &grade),
            sample_value(&mut rng, ctx, &grade),
            sample_value(&mut rng, ctx, &grade),
        );
        let left = match ctx.sum(&a, &b)? {
            Some(ab) => ctx.sum(&ab, &c)?,
            None => None,
        };
        let right = match ctx.sum(&b, &c)? {
            Some(bc) => ctx.sum(&a, &bc)?,
            None => None,
        };
        if let (Some(l), Some(r)) = (left, right) {
            assoc.record(dist(&l, &r));
        }
    }

    // Chains a ⪯ a + x ⪯ a + x + y built by construction.
    let mut diff = Tracker::new(suite, "difference undoes the sum", bound);
    let mut trans = Tracker::new(suite, "order is transitive", 0.0);
    let mut anti = Tracker::new(suite, "order is antisymmetric", bound);
    let mut tries = 0;
    while diff.samples < n && tries < attempts {
        tries += 1;
        let (a, x, y) = (
            sample_value(&mut rng, ctx, &grade),
            sample_value(&mut rng, ctx, &grade),
            sample_value(&mut rng, ctx, &grade),
        );
        let Some(b) = ctx.sum(&a, &x)? else { continue };
        let Some(c) = ctx.sum(&b, &y)? else { continue };
        diff.record(match ctx.difference(&a, &b)? {
            Some(d) => ctx.sum(&a, &d)?.map_or(f64::INFINITY, |s| dist(&s, &b)),
            None => f64::INFINITY,
        });
        trans.holds(!(ctx.leq(&a, &b)? && ctx.leq(&b, &c)?) || ctx.leq(&a, &c)?);
        if ctx.leq(&b, &a)? {
            anti.record(dist(&a, &b));
        } else {
            anti.record(0.0);
        }
    }

    let mut laws = vec![unit, compl, comm, assoc, refl, trans, anti, diff];
    if !ctx.is_quantum() && ctx.table().is_none() {
        let mut dec = Tracker::new(suite, "two-term sums decompose", 0.0);
        for _ in 0..n {
            let (a, c) = (random::random_rational(&mut rng, 12), random::random_rational(&mut rng, 12));
            let hi = |v: &crate::algebra::Rational| ratio(1, 1) - v.clone();
            let s = random::random_rational(&mut rng, 12) * hi(&a).min(hi(&c));
            let (b, d) = (s.clone() + &c - &a, s);
            if b < ratio(0, 1) || b > ratio(1, 1) {
                continue;
            }
            let v = coupling_feasible(
                ctx,
                &[a.clone().into(), b.clone().into()],
                &[c.clone().into(), d.clone().into()],
                &[vec![true; 2], vec![true; 2]],
                FeasibilityOptions::default(),
            )?;
            dec.holds(v.feasible && v.witness.as_ref().is_some_and(|w| witness_is_exact(ctx, w, &[a, b], &[c, d])));
        }
        laws.push(dec);
    }
    Ok(laws.into_iter().map(Tracker::finish).collect())
}

fn witness_is_exact(
    ctx: &EffectAlgebraContext,
    w: &[Vec<EffectValue>],
    rows: &[crate::algebra::Rational],
    cols: &[crate::algebra::Rational],
) -> bool {
    let get = |i: usize, j: usize| w[i][j].as_rational().cloned().unwrap_or_else(|| ratio(-1, 1));
    let _ = ctx;
    (0..2).all(|i| get(i, 0) + get(i, 1) == rows[i])
        && (0..2).all(|j| get(0, j) + get(1, j) == cols[j])
        && (0..2).all(|i| (0..2).all(|j| get(i, j) >= ratio(0, 1)))
}

pub fn algebra_laws(cfg: &LawConfig) -> Result<Vec<LawReport>> {
    let mut out = algebra_laws_for(&EffectAlgebraContext::probability(), "algebra/probability", cfg)?;
    for n in [1, 2] {
        let ctx = EffectAlgebraContext::quantum(Registry::qubits(n)).with_tol(cfg.tol);
        out.extend(algebra_laws_for(&ctx, &format!("algebra/quantum-{n}q"), cfg)?);
    }
    let table = cfg.table.clone().unwrap_or_else(default_table);
    out.extend(algebra_laws_for(&EffectAlgebraContext::finite(table), "algebra/finite", cfg)?);
    Ok(out)
}

fn states(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Unitality, associativity and commutativity of the graded monad, plus
/// naturality and extension checks in the quantum case.
pub fn monad_laws_for(ctx: &EffectAlgebraContext, suite: &str, cfg: &LawConfig) -> Result<Vec<LawReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let registry = ctx.registry();
    let quantum = ctx.is_quantum();
    let bound = if quantum { cfg.tol } else { 0.0 };
    let empty = SystemCollection::empty(&registry);
    let grades = |rng: &mut ChaCha8Rng| {
        if quantum {
            random::random_disjoint_grades(rng, &registry, 3)
        } else {
            vec![empty.clone(); 3]
        }
    };

    let mut left = Tracker::new(suite, "left unit", bound);
    let mut right = Tracker::new(suite, "right unit", bound);
    let mut assoc = Tracker::new(suite, "associativity", bound);
    let mut comm = Tracker::new(suite, "commutativity of the double strength", bound);
    let mut natural = Tracker::new(suite, "map_weights is natural", bound);
    let mut extension = Tracker::new(suite, "extension keeps Born values", bound);
    for _ in 0..cfg.samples {
        let g = grades(&mut rng);
        let delta = random::random_distribution(&mut rng, ctx, &g[0], &states(4));

        let eta = EffectDistribution::unit(ctx, 0usize);
        left.record(graded_mult(ctx, &eta, std::slice::from_ref(&delta))?.deviation(ctx, &delta));
        let units: Vec<EffectDistribution<usize>> = (0..4).map(|i| EffectDistribution::unit(ctx, i)).collect();
        right.record(graded_mult(ctx, &delta, &units)?.deviation(ctx, &delta));

        // Three levels: outer over middles over inners.
        let outer = random::random_distribution(&mut rng, ctx, &g[0], &states(3));
        let middle: Vec<EffectDistribution<usize>> =
            (0..3).map(|_| random::random_distribution(&mut rng, ctx, &g[1], &states(3))).collect();
        let inner: Vec<EffectDistribution<u8>> =
            (0..3).map(|_| random::random_distribution(&mut rng, ctx, &g[2], &[0u8, 1, 2, 3])).collect();
        let flattened: Vec<EffectDistribution<u8>> =
            middle.iter().map(|m| graded_mult(ctx, m, &inner)).collect::<Result<_>>()?;
        let inner_first = graded_mult(ctx, &outer, &flattened)?;
        let outer_first = graded_mult(ctx, &graded_mult(ctx, &outer, &middle)?, &inner)?;
        assoc.record(inner_first.deviation(ctx, &outer_first));

        let theta = random::random_distribution(&mut rng, ctx, &g[1], &[10usize, 11, 12]);
        let alpha = product_alpha(ctx, &delta, &theta)?;
        let xs: Vec<usize> = delta.support().copied().collect();
        let ys: Vec<usize> = theta.support().copied().collect();
        let by_x = delta.pushforward(ctx, |x| xs.iter().position(|v| v == x).expect("in support"))?;
        let tau: Vec<EffectDistribution<(usize, usize)>> = xs.iter().map(|x| theta.strength_right(x)).collect();
        let by_y = theta.pushforward(ctx, |y| ys.iter().position(|v| v == y).expect("in support"))?;
        let sigma: Vec<EffectDistribution<(usize, usize)>> = ys.iter().map(|y| delta.strength_left(y)).collect();
        let first = graded_mult(ctx, &by_x, &tau)?;
        let second = graded_mult(ctx, &by_y, &sigma)?;
        comm.record(first.deviation(ctx, &alpha).max(second.deviation(ctx, &alpha)));

        if quantum {
            let rho = DensityOperator::new(
                delta.grade().clone(),
                random::random_density_matrix(&mut rng, delta.grade().dim()),
                ctx.tol(),
            )?;
            let m = EffectMorphism::born(rho.clone());
            let target = m.target_context(ctx);
            let f = |x: &usize| x % 2;
            let a = delta.pushforward(ctx, f)?.map_weights(ctx, &m)?;
            let b = delta.map_weights(ctx, &m)?.pushforward(&target, f)?;
            natural.record(a.deviation(&target, &b));

            let rest = g[1].clone();
            let rho2 = DensityOperator::new(rest.clone(), random::random_density_matrix(&mut rng, rest.dim()), ctx.tol())?;
            let full = delta.grade().try_union(&rest)?;
            let wide = delta.extend(ctx, &full)?;
            let joint = rho.boxtimes(&rho2)?;
            let mut worst: f64 = 0.0;
            for (x, w) in delta.weights() {
                let before = quantum::trace_of_product(w.as_matrix().expect("quantum"), rho.matrix());
                let after = wide
                    .weight(x)
                    .map_or(0.0, |v| quantum::trace_of_product(v.as_matrix().expect("quantum"), joint.matrix()));
                worst = worst.max((before - after).abs());
            }
            extension.record(worst);
        }
    }
    let mut laws = vec![left, right, assoc, comm];
    if quantum {
        laws.push(natural);
        laws.push(extension);
        laws.push(born_injectivity(&mut rng, ctx, suite, cfg)?);
    }
    Ok(laws.into_iter().map(Tracker::finish).collect())
}

/// Distinct distributions over a finite effect set stay distinct after the
/// Born map at a density separating that set.
fn born_injectivity(rng: &mut ChaCha8Rng, ctx: &EffectAlgebraContext, suite: &str, cfg: &LawConfig) -> Result<Tracker> {
    let mut t = Tracker::new(suite, "Born map at a distinguishing density is injective", 0.0);
    let registry = ctx.registry();
    for _ in 0..cfg.samples.min(100) {
        let grade = random::random_disjoint_grades(rng, &registry, 1).remove(0);
        let d = grade.dim();
        let count = if d == 1 { 1 } else { 3 };
        // Thirds of distinct effects, so any three of them fit under I.
        let palette: Vec<CMatrix> = random::random_effect_set(rng, d, count).into_iter().map(|e| e.unscale(3.0)).collect();
        let mut set = vec![quantum::zeros(d)];
        set.extend(palette.iter().cloned());
        let found = quantum::distinguishing_density(&set, &grade, rng.random(), quantum::DEFAULT_MAX_ATTEMPTS, quantum::DEFAULT_SEP_TOL, ctx.tol())?;
        let m = EffectMorphism::born(found.rho.clone());
        let target = m.target_context(ctx);
        let draw = |rng: &mut ChaCha8Rng| {
            let entries: Vec<(usize, EffectValue)> = (0..3)
                .filter_map(|s| {
                    let k = rng.random_range(0..=palette.len());
                    (k < palette.len()).then(|| (s, EffectValue::Matrix(palette[k].clone())))
                })
                .collect();
            EffectDistribution::new(ctx, grade.clone(), entries)
        };
        let (a, b) = (draw(rng)?, draw(rng)?);
        let same = a.approx_eq(ctx, &b);
        let mapped_same = a.map_weights(ctx, &m)?.approx_eq(&target, &b.map_weights(ctx, &m)?);
        t.holds(same == mapped_same);
    }
    Ok(t)
}

pub fn monad_laws(cfg: &LawConfig) -> Result<Vec<LawReport>> {
    let mut out = monad_laws_for(&EffectAlgebraContext::probability(), "monad/probability", cfg)?;
    let ctx = EffectAlgebraContext::quantum(Registry::qubits(3)).with_tol(cfg.tol);
    out.extend(monad_laws_for(&ctx, "monad/quantum", cfg)?);
    Ok(out)
}

fn tensor(cfg: &LawConfig, a: &CMatrix, ga: &SystemCollection, b: &CMatrix, gb: &SystemCollection) -> Result<(CMatrix, SystemCollection)> {
    if cfg.corrupt_sort {
        Ok((quantum::kron(a, b), ga.try_union(gb)?))
    } else {
        quantum::boxtimes(a, ga, b, gb)
    }
}

fn random_rho(rng: &mut ChaCha8Rng, grade: &SystemCollection) -> Result<DensityOperator> {
    DensityOperator::new(grade.clone(), random::random_density_matrix(rng, grade.dim()), 1e-9)
}

/// Born rule, sorted Kronecker product, partial trace and distinguishing
/// densities.
pub fn quantum_laws(cfg: &LawConfig) -> Result<Vec<LawReport>> {
    let suite = "quantum";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let registry = Registry::qubits(3);
    let bound = cfg.tol;
    let mut born = Tracker::new(suite, "Born values of an effect and its complement sum to one", bound);
    let mut comm = Tracker::new(suite, "boxtimes is commutative", bound);
    let mut assoc = Tracker::new(suite, "boxtimes is associative", bound);
    let mut factor = Tracker::new(suite, "Born rule factorizes over boxtimes", bound);
    let mut ptrace = Tracker::new(suite, "partial trace of a product", bound);
    let mut preserve = Tracker::new(suite, "partial trace preserves the trace", bound);
    for _ in 0..cfg.samples {
        let g = random::random_disjoint_grades(&mut rng, &registry, 3);
        let l: Vec<CMatrix> = g.iter().map(|c| random::random_effect(&mut rng, c.dim())).collect();

        let rho0 = random_rho(&mut rng, &g[0])?;
        let comp = quantum::identity(g[0].dim()) - &l[0];
        born.record((quantum::trace_of_product(&l[0], rho0.matrix()) + quantum::trace_of_product(&comp, rho0.matrix()) - 1.0).abs());

        let (ab, gab) = tensor(cfg, &l[0], &g[0], &l[1], &g[1])?;
        let (ba, _) = tensor(cfg, &l[1], &g[1], &l[0], &g[0])?;
        comm.record(quantum::max_abs_diff(&ab, &ba));

        let (ab_c, _) = tensor(cfg, &ab, &gab, &l[2], &g[2])?;
        let (bc, gbc) = tensor(cfg, &l[1], &g[1], &l[2], &g[2])?;
        let (a_bc, _) = tensor(cfg, &l[0], &g[0], &bc, &gbc)?;
        assoc.record(quantum::max_abs_diff(&ab_c, &a_bc));

        let rho1 = random_rho(&mut rng, &g[1])?;
        let (joint, _) = tensor(cfg, rho0.matrix(), &g[0], rho1.matrix(), &g[1])?;
        let product = quantum::trace_of_product(&l[0], rho0.matrix()) * quantum::trace_of_product(&l[1], rho1.matrix());
        factor.record((quantum::trace_of_product(&ab, &joint) - product).abs());

        let reduced = quantum::partial_trace(&ab, &gab, &g[1])?;
        let expected = l[0].scale(quantum::trace(&l[1]).re);
        ptrace.record(quantum::max_abs_diff(&reduced, &expected));

        let m = random::random_effect(&mut rng, gab.dim());
        let t = quantum::partial_trace(&m, &gab, &g[0])?;
        preserve.record((quantum::trace(&t) - quantum::trace(&m)).norm());
    }

    let mut verified = Tracker::new(suite, "distinguishing density separates its effects", 0.0);
    let mut determined = Tracker::new(suite, "effects are determined by their Born values", 0.0);
    let small = Registry::qubits(2);
    for _ in 0..cfg.samples.min(100) {
        let grade = if rng.random_bool(0.5) { small.all() } else { SystemCollection::new(&small, ["q1"])? };
        let d = grade.dim();
        let n = rng.random_range(1..=8);
        let set = random::random_effect_set(&mut rng, d, n);
        let seed: u64 = rng.random();
        match quantum::distinguishing_density(&set, &grade, seed, quantum::DEFAULT_MAX_ATTEMPTS, quantum::DEFAULT_SEP_TOL, cfg.tol) {
            Ok(found) => {
                let traces: Vec<f64> = set.iter().map(|e| quantum::trace_of_product(e, found.rho.matrix())).collect();
                let separated = (0..n).all(|i| (i + 1..n).all(|j| (traces[i] - traces[j]).abs() > quantum::DEFAULT_SEP_TOL));
                verified.holds(separated && quantum::validate_density(found.rho.matrix(), cfg.tol)?);
            }
            Err(Error::AttemptsExhausted { .. }) => verified.holds(false),
            Err(e) => return Err(e),
        }

        let a = &set[0];
        let b = if rng.random_bool(0.5) { a.clone() } else { random::random_effect(&mut rng, d) };
        let equal = quantum::max_abs_diff(a, &b) <= cfg.tol;
        let mut agree = true;
        if !equal {
            let found = quantum::distinguishing_density(&[a.clone(), b.clone()], &grade, seed, quantum::DEFAULT_MAX_ATTEMPTS, quantum::DEFAULT_SEP_TOL, cfg.tol)?;
            agree &= (quantum::trace_of_product(a, found.rho.matrix()) - quantum::trace_of_product(&b, found.rho.matrix())).abs() <= cfg.tol;
        }
        for _ in 0..100 {
            let rho = quantum::random_density(&mut rng, d);
            agree &= (quantum::trace_of_product(a, &rho) - quantum::trace_of_product(&b, &rho)).abs() <= cfg.tol;
        }
        determined.holds(equal == agree);
    }

    Ok([born, comm, assoc, factor, ptrace, preserve, verified, determined]
        .into_iter()
        .map(Tracker::finish)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LawConfig {
        LawConfig {
            samples: 60,
            ..LawConfig::default()
        }
    }

    #[test]
    fn every_suite_passes() {
        let report = run_laws(LawScope::All, &small()).unwrap();
        let failed: Vec<_> = report.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(report.laws.iter().all(|l| l.samples > 0), "{report}");
    }

    #[test]
    fn corrupted_sort_breaks_commutativity() {
        let cfg = LawConfig {
            corrupt_sort: true,
            ..small()
        };
        let report = run_laws(LawScope::Quantum, &cfg).unwrap();
        let failed: Vec<&str> = report.failures().map(|l| l.law.as_str()).collect();
        assert!(failed.contains(&"boxtimes is commutative"), "{failed:?}");
    }

    #[test]
    fn probability_laws_are_exact() {
        let report = run_laws(LawScope::Monad, &small()).unwrap();
        for l in report.laws.iter().filter(|l| l.suite.ends_with("probability")) {
            assert_eq!(l.worst, 0.0, "{}", l.law);
        }
    }

    #[test]
    fn reports_render() {
        let report = run_laws(LawScope::Algebra, &LawConfig { samples: 5, ..LawConfig::default() }).unwrap();
        let j = report.to_json();
        assert_eq!(j["scope"], "algebra");
        assert!(report.to_human().contains("sum is associative"));
    }
}
