//! Cross-checks between quantum-level and instantiated bisimilarity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::kernel::{kernel_equiv, refine};
use super::Space;
use crate::algebra::EffectValue;
use crate::error::{Error, Result};
use crate::json::density_to_json;
use crate::lts::Elts;
use crate::quantum::{self, CMatrix, DensityOperator, Distinguished};

/// Supports above this size make the subset-sum closure impractical.
const MAX_SUPPORT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesiderataOptions {
    pub seed: u64,
    pub n_random: usize,
    pub max_attempts: usize,
    pub sep_tol: f64,
}

impl Default for DesiderataOptions {
    fn default() -> Self {
        DesiderataOptions {
            seed: 0,
            n_random: 10,
            max_attempts: quantum::DEFAULT_MAX_ATTEMPTS,
            sep_tol: quantum::DEFAULT_SEP_TOL,
        }
    }
}

fn require_quantum(a: &Elts, b: &Elts) -> Result<()> {
    for s in [a, b] {
        if !s.context().is_quantum() {
            return Err(Error::KindMismatch {
                expected: "quantum".into(),
                found: s.context().kind_name().into(),
            });
        }
    }
    Ok(())
}

/// The effects a separating density must tell apart: zero and every sum of
/// a nonempty subset of one distribution's weights, without repeats.
///
/// Quotienting a distribution by a partition sums weights over blocks, so
/// these are exactly the weights kernel refinement ever compares.
pub fn separating_effects(a: &Elts, b: &Elts) -> Result<Vec<CMatrix>> {
    require_quantum(a, b)?;
    let tol = a.context().tol().max(b.context().tol());
    let mut out: Vec<CMatrix> = vec![quantum::zeros(a.grade().dim())];
    let mut push = |m: CMatrix| {
        if !out.iter().any(|e| quantum::max_abs_diff(e, &m) <= tol) {
            out.push(m);
        }
    };
    for sys in [a, b] {
        for (s, l, d) in sys.transitions() {
            let ws: Vec<&CMatrix> = d.weights().values().filter_map(EffectValue::as_matrix).collect();
            if ws.len() > MAX_SUPPORT {
                return Err(Error::Unsupported(format!(
                    "distribution of {s} --{l}--> has {} successors; at most {MAX_SUPPORT} are supported",
                    ws.len()
                )));
            }
            for mask in 1u32..(1 << ws.len()) {
                let mut acc = quantum::zeros(a.grade().dim());
                for (k, w) in ws.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        acc += *w;
                    }
                }
                push(acc);
            }
        }
    }
    Ok(out)
}

fn rho_hat(a: &Elts, b: &Elts, opts: &DesiderataOptions) -> Result<(Distinguished, usize)> {
    let effects = separating_effects(a, b)?;
    let tol = a.context().tol().max(b.context().tol());
    let found = quantum::distinguishing_density(&effects, a.grade(), opts.seed, opts.max_attempts, opts.sep_tol, tol)?;
    Ok((found, effects.len()))
}

fn rho_json(d: &Distinguished, effects: usize) -> Value {
    json!({
        "density": density_to_json(&d.rho),
        "seed": d.seed,
        "attempts": d.attempts,
        "effects": effects,
        "min_gap": d.min_gap,
    })
}

#[derive(Clone, Debug)]
pub struct Desiderata1Report {
    pub states: (String, String),
    pub quantum_related: bool,
    pub distinguishing_related: bool,
    pub random_related: Vec<bool>,
    pub rho_hat: Distinguished,
    pub effect_count: usize,
    pub defects: Vec<String>,
}

impl Desiderata1Report {
    pub fn consistent(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "desiderata1",
            "states": [self.states.0, self.states.1],
            "related": self.quantum_related,
            "quantum_related": self.quantum_related,
            "distinguishing_related": self.distinguishing_related,
            "random_related": self.random_related,
            "agree": self.consistent(),
            "rho_hat": rho_json(&self.rho_hat, self.effect_count),
            "defects": self.defects,
        })
    }

    pub fn to_human(&self) -> String {
        let related = self.random_related.iter().filter(|&&r| r).count();
        let mut s = format!(
            "desiderata 1 for {} and {}\n  quantum level: {}\n  at distinguishing density ({} effects, {} attempts): {}\n  at random densities: {related}/{} related\n",
            self.states.0,
            self.states.1,
            verdict_word(self.quantum_related),
            self.effect_count,
            self.rho_hat.attempts,
            verdict_word(self.distinguishing_related),
            self.random_related.len(),
        );
        s += if self.consistent() { "  consistent\n" } else { "  DEFECTS:\n" };
        for d in &self.defects {
            s += &format!("    {d}\n");
        }
        s
    }
}

fn verdict_word(related: bool) -> &'static str {
    if related {
        "related"
    } else {
        "not related"
    }
}

/// Kernel bisimilarity of `x` and `y` at the quantum level, after
/// instantiating at a verified distinguishing density, and after
/// instantiating at `n_random` seeded densities.
pub fn check_desiderata1(a: &Elts, b: &Elts, x: &str, y: &str, opts: &DesiderataOptions) -> Result<Desiderata1Report> {
    require_quantum(a, b)?;
    let quantum_related = kernel_equiv(a, b, x, y)?;
    let (found, effect_count) = rho_hat(a, b, opts)?;
    let at = |rho: &DensityOperator| -> Result<bool> {
        kernel_equiv(&a.instantiate(rho)?, &b.instantiate(rho)?, x, y)
    };
    let distinguishing_related = at(&found.rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let mut random_related = Vec::with_capacity(opts.n_random);
    for _ in 0..opts.n_random {
        let m = quantum::random_density(&mut rng, a.grade().dim());
        let rho = DensityOperator::new(a.grade().clone(), m, a.context().tol())?;
        random_related.push(at(&rho)?);
    }

    let mut defects = Vec::new();
    if quantum_related && !distinguishing_related {
        defects.push("related at the quantum level but not at the distinguishing density".to_string());
    }
    if distinguishing_related && !quantum_related {
        defects.push("related at the distinguishing density but not at the quantum level".to_string());
    }
    if quantum_related {
        for (k, r) in random_related.iter().enumerate() {
            if !r {
                defects.push(format!("related at the quantum level but not at random density {k}"));
            }
        }
    }
    Ok(Desiderata1Report {
        states: (x.to_string(), y.to_string()),
        quantum_related,
        distinguishing_related,
        random_related,
        rho_hat: found,
        effect_count,
        defects,
    })
}

#[derive(Clone, Debug)]
pub struct Desiderata2Report {
    pub states: (String, String),
    pub matrix_related: bool,
    pub born_related: bool,
    pub partitions_agree: bool,
    pub rho_hat: Distinguished,
    pub effect_count: usize,
}

impl Desiderata2Report {
    pub fn consistent(&self) -> bool {
        self.partitions_agree && self.matrix_related == self.born_related
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "desiderata2",
            "states": [self.states.0, self.states.1],
            "related": self.matrix_related,
            "matrix_related": self.matrix_related,
            "born_related": self.born_related,
            "partitions_agree": self.partitions_agree,
            "agree": self.consistent(),
            "rho_hat": rho_json(&self.rho_hat, self.effect_count),
        })
    }

    pub fn to_human(&self) -> String {
        format!(
            "desiderata 2 for {} and {}\n  effect weights: {}\n  Born weights at distinguishing density: {}\n  partitions agree: {}\n",
            self.states.0,
            self.states.1,
            verdict_word(self.matrix_related),
            verdict_word(self.born_related),
            self.partitions_agree
        )
    }
}

/// Kernel refinement with weights compared as matrices versus compared by
/// their Born values at a distinguishing density.
pub fn check_desiderata2(a: &Elts, b: &Elts, x: &str, y: &str, opts: &DesiderataOptions) -> Result<Desiderata2Report> {
    require_quantum(a, b)?;
    let z = Space::new(a, b)?;
    let (i, j) = z.pair(x, y)?;
    let (found, effect_count) = rho_hat(a, b, opts)?;
    let ctx = z.ctx.clone();
    let by_matrix = refine(&z, &|v, w| ctx.approx_eq(v, w));
    let born = |v: &EffectValue| v.as_matrix().map_or(f64::NAN, |m| quantum::trace_of_product(m, found.rho.matrix()));
    let half_gap = opts.sep_tol / 2.0;
    let by_born = refine(&z, &|v, w| (born(v) - born(w)).abs() <= half_gap);
    Ok(Desiderata2Report {
        states: (x.to_string(), y.to_string()),
        matrix_related: by_matrix[i] == by_matrix[j],
        born_related: by_born[i] == by_born[j],
        partitions_agree: by_matrix == by_born,
        rho_hat: found,
        effect_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{EffectAlgebraContext, Registry};
    use crate::lts::tests::coalgebra_example;
    use crate::lts::{Distribution, LabelSet};
    use crate::quantum::named;

    #[test]
    fn example_is_consistent_everywhere() {
        let sys = coalgebra_example();
        let r = check_desiderata1(&sys, &sys, "x1", "x2", &DesiderataOptions::default()).unwrap();
        assert!(r.quantum_related && r.distinguishing_related);
        assert!(r.random_related.iter().all(|&b| b));
        assert!(r.consistent());
        let r = check_desiderata2(&sys, &sys, "x1", "x2", &DesiderataOptions::default()).unwrap();
        assert!(r.matrix_related && r.born_related && r.partitions_agree);
    }

    /// `s` and `t` move to distinct sinks with `|0⟩⟨0|` and `|+⟩⟨+|`. At the
    /// maximally mixed state both Born values are 1/2, so they look alike.
    fn plus_versus_zero() -> Elts {
        let ctx = EffectAlgebraContext::quantum(Registry::qubits(1));
        let g = ctx.registry().all();
        let mut sys = Elts::new(ctx.clone(), g.clone(), ["s", "t", "u", "v"], LabelSet::silent("tau"), false);
        let one = |s: &str, m: &str| Distribution::new(&ctx, g.clone(), [(s.to_string(), EffectValue::Matrix(named(m).unwrap()))]).unwrap();
        sys.add_transition("s", "tau", one("u", "proj0"));
        sys.add_transition("t", "tau", one("u", "proj+"));
        sys
    }

    #[test]
    fn pair_separated_only_by_the_effects() {
        let sys = plus_versus_zero();
        let r = check_desiderata1(&sys, &sys, "s", "t", &DesiderataOptions::default()).unwrap();
        assert!(!r.quantum_related);
        assert!(!r.distinguishing_related);
        assert!(r.consistent());
        // tr(|0⟩⟨0| I/2) = tr(|+⟩⟨+| I/2) = 1/2
        let mixed = DensityOperator::maximally_mixed(sys.grade().clone());
        let p = sys.instantiate(&mixed).unwrap();
        assert!(kernel_equiv(&p, &p, "s", "t").unwrap());
    }

    #[test]
    fn separating_set_contains_subset_sums() {
        let sys = coalgebra_example();
        let effects = separating_effects(&sys, &sys).unwrap();
        // 0, |0⟩⟨0|, |1⟩⟨1|, I, |+⟩⟨+|, |−⟩⟨−|
        assert_eq!(effects.len(), 6);
    }

    #[test]
    fn self_comparison_is_related_at_every_level() {
        let sys = plus_versus_zero();
        let r = check_desiderata1(&sys, &sys, "t", "t", &DesiderataOptions::default()).unwrap();
        assert!(r.quantum_related && r.distinguishing_related && r.random_related.iter().all(|&b| b));
    }
}
