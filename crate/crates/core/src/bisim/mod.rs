//! Behavioural equivalences between two systems.
//!
//! Both checks work on the disjoint union `Z` of the two state spaces. Kernel
//! bisimilarity is the coarsest partition of `Z` stable under quotiented
//! transition signatures; AM bisimilarity is the greatest relation on `Z`
//! inside it whose matched distributions all admit couplings.

mod am;
mod desiderata;
mod kernel;

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::algebra::{CouplingMethod, EffectAlgebraContext, EffectValue};
use crate::distribution::EffectDistribution;
use crate::error::{Error, Result};
use crate::json::effect_to_json;
use crate::lts::Elts;

pub use am::{am_bisim, am_equiv};
pub use desiderata::{
    check_desiderata1, check_desiderata2, separating_effects, Desiderata1Report, Desiderata2Report, DesiderataOptions,
};
pub use kernel::{check_cocongruence, kernel_bisim, kernel_equiv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BisimKind {
    Kernel,
    Am,
}

impl BisimKind {
    pub fn name(self) -> &'static str {
        match self {
            BisimKind::Kernel => "kernel",
            BisimKind::Am => "am",
        }
    }
}

/// Blocks of state names, ordered by least member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<String>>,
}

impl Partition {
    pub fn to_json(&self) -> Value {
        json!(self.blocks)
    }
}

/// The disjoint union of two systems, states numbered left then right.
#[derive(Clone, Debug)]
pub(crate) struct Space {
    pub ctx: EffectAlgebraContext,
    pub names: Vec<String>,
    pub left: BTreeMap<String, usize>,
    pub right: BTreeMap<String, usize>,
    pub labels: Vec<String>,
    /// `steps[state][label]`: the successor distributions.
    pub steps: Vec<Vec<Vec<EffectDistribution<usize>>>>,
}

impl Space {
    /// Identical systems share one copy of the state space; otherwise names
    /// are kept when disjoint and prefixed with `a:`/`b:` when not.
    pub fn new(a: &Elts, b: &Elts) -> Result<Space> {
        if !a.context().same_kind(b.context()) {
            return Err(Error::KindMismatch {
                expected: a.context().kind_name().into(),
                found: b.context().kind_name().into(),
            });
        }
        if a.grade() != b.grade() {
            return Err(Error::IllFormed(format!(
                "systems have different grades {} and {}",
                a.grade(),
                b.grade()
            )));
        }
        let ctx = a.context().clone().with_tol(a.context().tol().max(b.context().tol()));
        let mut labels: Vec<String> = a.labels().all().chain(b.labels().all()).map(String::from).collect();
        labels.sort();
        labels.dedup();

        let mut names = Vec::new();
        let mut left = BTreeMap::new();
        let mut right = BTreeMap::new();
        let same = a == b;
        let clash = !same && a.states().iter().any(|s| b.has_state(s));
        for s in a.states() {
            left.insert(s.clone(), names.len());
            names.push(if clash { format!("a:{s}") } else { s.clone() });
        }
        if same {
            right = left.clone();
        } else {
            for s in b.states() {
                right.insert(s.clone(), names.len());
                names.push(if clash { format!("b:{s}") } else { s.clone() });
            }
        }

        let mut steps = Vec::with_capacity(names.len());
        let sides: &[(&Elts, &BTreeMap<String, usize>)] = if same { &[(a, &left)] } else { &[(a, &left), (b, &right)] };
        for (sys, index) in sides {
            for s in sys.states() {
                let per_label = labels
                    .iter()
                    .map(|l| {
                        sys.successors(s, l)
                            .iter()
                            .map(|d| d.quotient(&ctx, |x| index[x]))
                            .collect()
                    })
                    .collect();
                steps.push(per_label);
            }
        }
        Ok(Space {
            ctx,
            names,
            left,
            right,
            labels,
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn pair(&self, x: &str, y: &str) -> Result<(usize, usize)> {
        let i = *self
            .left
            .get(x)
            .ok_or_else(|| Error::IllFormed(format!("no state `{x}` in the first system")))?;
        let j = *self
            .right
            .get(y)
            .ok_or_else(|| Error::IllFormed(format!("no state `{y}` in the second system")))?;
        Ok((i, j))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub tol: f64,
    pub feas_tol: Option<f64>,
    pub max_iters: Option<usize>,
    /// Largest residual among failed quantum coupling searches.
    pub max_residual: Option<f64>,
    /// Every coupling verdict was exact or analytic.
    pub certified: bool,
}

/// A coupling matrix witnessing one matched pair of distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingWitness {
    pub label: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Vec<Vec<EffectValue>>,
    pub residual: f64,
    pub method: CouplingMethod,
}

impl CouplingWitness {
    fn to_json(&self) -> Value {
        json!({
            "label": self.label,
            "rows": self.rows,
            "cols": self.cols,
            "method": format!("{:?}", self.method),
            "residual": self.residual,
            "matrix": self.matrix.iter().map(|r| r.iter().map(effect_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// The answer for one pair of states.
#[derive(Clone, Debug, PartialEq)]
pub struct BisimVerdict {
    pub related: bool,
    pub kind: BisimKind,
    pub states: (String, String),
    pub partition: Partition,
    /// AM only: every related pair of the final relation.
    pub relation: Option<Vec<(String, String)>>,
    pub couplings: Vec<CouplingWitness>,
    pub diagnostics: Vec<String>,
    pub numerics: Numerics,
    pub quantum: bool,
}

impl BisimVerdict {
    pub fn to_json(&self) -> Value {
        let mut numerics = serde_json::Map::new();
        numerics.insert("tol".into(), json!(self.numerics.tol));
        if let Some(f) = self.numerics.feas_tol {
            numerics.insert("feas_tol".into(), json!(f));
        }
        if let Some(m) = self.numerics.max_iters {
            numerics.insert("max_iters".into(), json!(m));
        }
        if let Some(r) = self.numerics.max_residual {
            numerics.insert("max_residual".into(), json!(r));
        }
        let mut out = json!({
            "related": self.related,
            "kind": self.kind.name(),
            "states": [self.states.0, self.states.1],
            "partition": self.partition.to_json(),
            "numerics": numerics,
            "diagnostics": self.diagnostics,
        });
        if self.kind == BisimKind::Am {
            let obj = out.as_object_mut().expect("object");
            obj.insert(
                "relation".into(),
                json!(self.relation.iter().flatten().map(|(x, y)| [x, y]).collect::<Vec<_>>()),
            );
            obj.insert(
                "couplings".into(),
                Value::Array(self.couplings.iter().map(CouplingWitness::to_json).collect()),
            );
            obj.insert("numerical".into(), json!(self.quantum && !self.numerics.certified));
            obj.insert("certified".into(), json!(self.numerics.certified));
        }
        out
    }

    pub fn to_human(&self) -> String {
        let mut s = format!(
            "{} bisimilarity: {} and {} are {}\n",
            self.kind.name(),
            self.states.0,
            self.states.1,
            if self.related { "related" } else { "not related" }
        );
        let blocks: Vec<String> = self.partition.blocks.iter().map(|b| format!("{{{}}}", b.join(", "))).collect();
        s += &format!("partition: {}\n", blocks.join(" "));
        if self.kind == BisimKind::Am {
            s += &format!(
                "couplings: {}; certified: {}\n",
                self.couplings.len(),
                self.numerics.certified
            );
        }
        for d in &self.diagnostics {
            s += &format!("  {d}\n");
        }
        s
    }
}

/// A computed equivalence over the union of two systems.
#[derive(Clone, Debug)]
pub struct Bisimulation {
    kind: BisimKind,
    space: Space,
    blocks: Vec<usize>,
    /// AM: the final relation as an adjacency matrix.
    relation: Option<Vec<Vec<bool>>>,
    couplings: BTreeMap<(usize, usize), Vec<CouplingWitness>>,
    failures: BTreeMap<(usize, usize), String>,
    numerics: Numerics,
}

impl Bisimulation {
    pub fn kind(&self) -> BisimKind {
        self.kind
    }

    pub fn numerics(&self) -> &Numerics {
        &self.numerics
    }

    /// The kernel partition (for AM, the upper bound it started from).
    pub fn partition(&self) -> Partition {
        let count = self.blocks.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &b) in self.blocks.iter().enumerate() {
            blocks[b].push(self.space.names[i].clone());
        }
        Partition { blocks }
    }

    fn related_index(&self, i: usize, j: usize) -> bool {
        match &self.relation {
            Some(r) => r[i][j],
            None => self.blocks[i] == self.blocks[j],
        }
    }

    /// Whether `x` of the first system is related to `y` of the second.
    pub fn related(&self, x: &str, y: &str) -> Result<bool> {
        let (i, j) = self.space.pair(x, y)?;
        Ok(self.related_index(i, j))
    }

    /// Related pairs `(x, y)` over `Z`, by index order.
    pub fn relation_pairs(&self) -> Vec<(String, String)> {
        let n = self.space.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.related_index(i, j) {
                    out.push((self.space.names[i].clone(), self.space.names[j].clone()));
                }
            }
        }
        out
    }

    pub fn verdict(&self, x: &str, y: &str) -> Result<BisimVerdict> {
        let (i, j) = self.space.pair(x, y)?;
        let related = self.related_index(i, j);
        let mut diagnostics = Vec::new();
        if let Some(why) = self.failures.get(&(i, j)) {
            diagnostics.push(why.clone());
        } else if !related {
            diagnostics.push(format!(
                "{} and {} lie in different blocks",
                self.space.names[i], self.space.names[j]
            ));
        }
        Ok(BisimVerdict {
            related,
            kind: self.kind,
            states: (self.space.names[i].clone(), self.space.names[j].clone()),
            partition: self.partition(),
            relation: self.relation.as_ref().map(|_| self.relation_pairs()),
            couplings: self.couplings.get(&(i, j)).cloned().unwrap_or_default(),
            diagnostics,
            numerics: self.numerics.clone(),
            quantum: self.space.ctx.is_quantum(),
        })
    }
}
