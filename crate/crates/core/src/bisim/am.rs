//! Aczel–Mendler bisimilarity as a greatest fixpoint of coupling checks.

use std::collections::{BTreeMap, HashMap};

use super::kernel::kernel_bisim;
use super::{BisimKind, Bisimulation, CouplingWitness, Numerics, Space};
use crate::algebra::{coupling_feasible, EffectValue, FeasibilityOptions, FeasibilityVerdict};
use crate::distribution::EffectDistribution;
use crate::error::{Error, Result};
use crate::lts::Elts;

type Key = (usize, usize, usize, usize, usize, Vec<bool>);

struct Search<'a> {
    z: &'a Space,
    opts: FeasibilityOptions,
    cache: HashMap<Key, Option<FeasibilityVerdict>>,
    certified: bool,
    max_residual: Option<f64>,
}

impl Search<'_> {
    /// Coupling of the `k`-th `label` move of `i` with the `m`-th of `j`;
    /// `None` when the totals differ.
    fn couple(&mut self, rel: &[Vec<bool>], i: usize, label: usize, k: usize, j: usize, m: usize) -> Result<Option<FeasibilityVerdict>> {
        let (d, e) = (&self.z.steps[i][label][k], &self.z.steps[j][label][m]);
        let support: Vec<Vec<bool>> = d.support().map(|x| e.support().map(|y| rel[*x][*y]).collect()).collect();
        let key = (i, label, k, j, m, support.iter().flatten().copied().collect());
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let rows: Vec<EffectValue> = d.weights().values().cloned().collect();
        let cols: Vec<EffectValue> = e.weights().values().cloned().collect();
        let verdict = match coupling_feasible(&self.z.ctx, &rows, &cols, &support, self.opts) {
            Ok(v) => Some(v),
            Err(Error::TotalMismatch(_)) => None,
            Err(other) => return Err(other),
        };
        if let Some(v) = &verdict {
            if !v.certified {
                self.certified = false;
            }
            if !v.feasible {
                self.max_residual = Some(self.max_residual.map_or(v.residual, |r| r.max(v.residual)));
            }
        }
        self.cache.insert(key, verdict.clone());
        Ok(verdict)
    }

    fn witness(&self, label: usize, d: &EffectDistribution<usize>, e: &EffectDistribution<usize>, v: &FeasibilityVerdict) -> CouplingWitness {
        let names = |x: &EffectDistribution<usize>| x.support().map(|s| self.z.names[*s].clone()).collect();
        CouplingWitness {
            label: self.z.labels[label].clone(),
            rows: names(d),
            cols: names(e),
            matrix: v.witness.clone().unwrap_or_default(),
            residual: v.residual,
            method: v.method,
        }
    }

    /// Couplings matching every move of `i` with one of `j` and back, or
    /// the reason there are none.
    fn check_pair(&mut self, rel: &[Vec<bool>], i: usize, j: usize) -> Result<std::result::Result<Vec<CouplingWitness>, String>> {
        let mut found = Vec::new();
        for label in 0..self.z.labels.len() {
            let (ni, nj) = (self.z.steps[i][label].len(), self.z.steps[j][label].len());
            for k in 0..ni {
                let mut matched = None;
                let mut residual = f64::INFINITY;
                for m in 0..nj {
                    match self.couple(rel, i, label, k, j, m)? {
                        Some(v) if v.feasible => {
                            matched = Some((m, v));
                            break;
                        }
                        Some(v) => residual = residual.min(v.residual),
                        None => {}
                    }
                }
                let Some((m, v)) = matched else {
                    return Ok(Err(format!(
                        "{} --{}--> distribution {k} has no coupling with any move of {} (best residual {residual:.3e})",
                        self.z.names[i], self.z.labels[label], self.z.names[j]
                    )));
                };
                found.push(self.witness(label, &self.z.steps[i][label][k], &self.z.steps[j][label][m], &v));
            }
            for m in 0..nj {
                let mut any = false;
                for k in 0..ni {
                    if self.couple(rel, i, label, k, j, m)?.is_some_and(|v| v.feasible) {
                        any = true;
                        break;
                    }
                }
                if !any {
                    return Ok(Err(format!(
                        "{} --{}--> distribution {m} has no coupling with any move of {}",
                        self.z.names[j], self.z.labels[label], self.z.names[i]
                    )));
                }
            }
        }
        Ok(Ok(found))
    }
}

/// Greatest coupling-closed relation inside kernel bisimilarity.
pub fn am_bisim(a: &Elts, b: &Elts, opts: FeasibilityOptions) -> Result<Bisimulation> {
    let kernel = kernel_bisim(a, b)?;
    let z = &kernel.space;
    let n = z.len();
    let mut rel: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| kernel.blocks[i] == kernel.blocks[j]).collect())
        .collect();
    let mut search = Search {
        z,
        opts,
        cache: HashMap::new(),
        certified: true,
        max_residual: None,
    };
    let mut failures = BTreeMap::new();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if !rel[i][j] {
                    continue;
                }
                if let Err(why) = search.check_pair(&rel, i, j)? {
                    rel[i][j] = false;
                    failures.insert((i, j), why);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut couplings = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if rel[i][j] {
                let found = search.check_pair(&rel, i, j)?.expect("fixpoint pairs are coupled");
                couplings.insert((i, j), found);
            }
        }
    }
    let numerics = Numerics {
        tol: z.ctx.tol(),
        feas_tol: Some(opts.feas_tol),
        max_iters: Some(opts.max_iters),
        max_residual: search.max_residual,
        certified: search.certified,
    };
    Ok(Bisimulation {
        kind: BisimKind::Am,
        space: kernel.space.clone(),
        blocks: kernel.blocks.clone(),
        relation: Some(rel),
        couplings,
        failures,
        numerics,
    })
}

pub fn am_equiv(a: &Elts, b: &Elts, x: &str, y: &str, opts: FeasibilityOptions) -> Result<bool> {
    am_bisim(a, b, opts)?.related(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ratio, CouplingMethod, EffectAlgebraContext, SystemCollection};
    use crate::bisim::kernel_equiv;
    use crate::lts::tests::coalgebra_example;
    use crate::lts::{Distribution, LabelSet};

    #[test]
    fn example_is_kernel_but_not_am_related() {
        let sys = coalgebra_example();
        let am = am_bisim(&sys, &sys, FeasibilityOptions::default()).unwrap();
        assert!(!am.related("x1", "x2").unwrap());
        assert!(am.related("x3", "x4").unwrap());
        assert!(am.related("x1", "x1").unwrap());
        let v = am.verdict("x1", "x2").unwrap();
        assert!(!v.related);
        assert!(v.numerics.certified);
        assert!(v.diagnostics[0].contains("no coupling"));
        let json = v.to_json();
        assert_eq!(json["kind"], "am");
        assert_eq!(json["numerical"], false);
    }

    #[test]
    fn identical_states_use_diagonal_couplings() {
        let sys = coalgebra_example();
        let am = am_bisim(&sys, &sys, FeasibilityOptions::default()).unwrap();
        let v = am.verdict("x2", "x2").unwrap();
        assert!(v.related);
        let c = &v.couplings[0];
        assert_eq!(c.method, CouplingMethod::RankOne);
        assert_eq!(c.rows, vec!["x3", "x4"]);
        assert!(sys.context().is_zero(&c.matrix[0][1]));
    }

    #[test]
    fn probability_chain_agrees_with_kernel() {
        let ctx = EffectAlgebraContext::probability();
        let g = SystemCollection::empty(&ctx.registry());
        let d = |w: &[(&str, (i64, i64))]| {
            Distribution::new(&ctx, g.clone(), w.iter().map(|(s, (n, m))| (s.to_string(), EffectValue::Rational(ratio(*n, *m))))).unwrap()
        };
        let mut sys = Elts::new(ctx.clone(), g.clone(), ["p", "q", "u", "v", "w"], LabelSet::silent("tau"), true);
        sys.add_transition("p", "tau", d(&[("u", (1, 3)), ("v", (1, 3)), ("w", (1, 3))]));
        sys.add_transition("q", "tau", d(&[("u", (2, 3)), ("w", (1, 3))]));
        sys.add_transition("u", "tau", d(&[("u", (1, 1))]));
        sys.add_transition("v", "tau", d(&[("u", (1, 1))]));
        sys.add_transition("w", "tau", d(&[("w", (1, 2))]));
        let am = am_bisim(&sys, &sys, FeasibilityOptions::default()).unwrap();
        for x in sys.states() {
            for y in sys.states() {
                assert_eq!(am.related(x, y).unwrap(), kernel_equiv(&sys, &sys, x, y).unwrap(), "{x} {y}");
            }
        }
        assert!(am.related("p", "q").unwrap());
    }
}
