//! Kernel bisimilarity by partition refinement.

use std::collections::BTreeMap;

use super::{BisimKind, Bisimulation, Numerics, Partition, Space};
use crate::algebra::EffectValue;
use crate::distribution::EffectDistribution;
use crate::error::{Error, Result};
use crate::lts::Elts;

pub(crate) type WeightEq<'a> = dyn Fn(&EffectValue, &EffectValue) -> bool + 'a;

type Signature = Vec<Vec<EffectDistribution<usize>>>;

fn signature(z: &Space, i: usize, blocks: &[usize]) -> Signature {
    z.steps[i]
        .iter()
        .map(|ds| ds.iter().map(|d| d.quotient(&z.ctx, |x| blocks[*x])).collect())
        .collect()
}

fn dist_eq(a: &EffectDistribution<usize>, b: &EffectDistribution<usize>, eq: &WeightEq) -> bool {
    a.len() == b.len()
        && a
            .weights()
            .iter()
            .zip(b.weights())
            .all(|((x, v), (y, w))| x == y && eq(v, w))
}

fn set_eq(a: &[EffectDistribution<usize>], b: &[EffectDistribution<usize>], eq: &WeightEq) -> bool {
    a.iter().all(|d| b.iter().any(|e| dist_eq(d, e, eq))) && b.iter().all(|e| a.iter().any(|d| dist_eq(d, e, eq)))
}

fn sig_eq(a: &Signature, b: &Signature, eq: &WeightEq) -> bool {
    a.iter().zip(b).all(|(x, y)| set_eq(x, y, eq))
}

/// Block index of every state in the coarsest stable partition, blocks
/// numbered by least member.
pub(crate) fn refine(z: &Space, eq: &WeightEq) -> Vec<usize> {
    let n = z.len();
    let mut blocks = vec![0; n];
    let mut count = usize::from(n > 0);
    loop {
        let sigs: Vec<Signature> = (0..n).map(|i| signature(z, i, &blocks)).collect();
        let mut reps: Vec<usize> = Vec::new();
        let mut next = vec![0; n];
        for i in 0..n {
            let found = reps
                .iter()
                .position(|&r| blocks[r] == blocks[i] && sig_eq(&sigs[r], &sigs[i], eq));
            next[i] = found.unwrap_or_else(|| {
                reps.push(i);
                reps.len() - 1
            });
        }
        let stable = reps.len() == count;
        blocks = next;
        count = reps.len();
        if stable {
            return blocks;
        }
    }
}

/// Every state has the signature of its block's least member.
fn stable(z: &Space, blocks: &[usize], eq: &WeightEq) -> bool {
    let sigs: Vec<Signature> = (0..z.len()).map(|i| signature(z, i, blocks)).collect();
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    (0..z.len()).all(|i| {
        let r = *first.entry(blocks[i]).or_insert(i);
        sig_eq(&sigs[r], &sigs[i], eq)
    })
}

pub fn kernel_bisim(a: &Elts, b: &Elts) -> Result<Bisimulation> {
    let z = Space::new(a, b)?;
    let ctx = z.ctx.clone();
    let eq = |v: &EffectValue, w: &EffectValue| ctx.approx_eq(v, w);
    let blocks = refine(&z, &eq);
    assert!(stable(&z, &blocks, &eq), "refined partition must be a cocongruence");
    Ok(Bisimulation {
        kind: BisimKind::Kernel,
        numerics: Numerics {
            tol: ctx.tol(),
            feas_tol: None,
            max_iters: None,
            max_residual: None,
            certified: true,
        },
        space: z,
        blocks,
        relation: None,
        couplings: BTreeMap::new(),
        failures: BTreeMap::new(),
    })
}

pub fn kernel_equiv(a: &Elts, b: &Elts, x: &str, y: &str) -> Result<bool> {
    kernel_bisim(a, b)?.related(x, y)
}

/// Whether `partition` (over the union of both systems, named as in a
/// verdict) is a cocongruence: quotienting by it gives every state of a block
/// the same transition structure.
pub fn check_cocongruence(a: &Elts, b: &Elts, partition: &Partition) -> Result<bool> {
    let z = Space::new(a, b)?;
    let mut blocks = vec![usize::MAX; z.len()];
    let index: BTreeMap<&str, usize> = z.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    for (k, block) in partition.blocks.iter().enumerate() {
        for name in block {
            let i = *index
                .get(name.as_str())
                .ok_or_else(|| Error::IllFormed(format!("partition names unknown state `{name}`")))?;
            if blocks[i] != usize::MAX {
                return Err(Error::IllFormed(format!("state `{name}` appears in two blocks")));
            }
            blocks[i] = k;
        }
    }
    if let Some(i) = blocks.iter().position(|&b| b == usize::MAX) {
        return Err(Error::IllFormed(format!("partition misses state `{}`", z.names[i])));
    }
    let ctx = z.ctx.clone();
    Ok(stable(&z, &blocks, &|v, w| ctx.approx_eq(v, w)))
}
