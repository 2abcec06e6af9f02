//! Finite effect algebras given by an explicit addition table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk form of a finite table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteTableSpec {
    pub carrier: Vec<String>,
    pub zero: String,
    pub one: String,
    /// Triples `[a, b, c]` meaning `a + b = c`.
    #[serde(default)]
    pub sum: Vec<[String; 3]>,
    pub complement: BTreeMap<String, String>,
}

/// A validated finite effect algebra.
///
/// The addition table is completed with `0 + a = a` and with the symmetric
/// entry of every given triple; conflicting entries are axiom violations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteTable {
    spec: FiniteTableSpec,
    index: BTreeMap<String, usize>,
    zero: usize,
    one: usize,
    sum: Vec<Vec<Option<usize>>>,
    complement: Vec<usize>,
}

fn violation(axiom: &'static str, detail: impl Into<String>) -> Error {
    Error::Axiom {
        axiom,
        detail: detail.into(),
    }
}

impl FiniteTable {
    pub fn new(spec: FiniteTableSpec) -> Result<Self> {
        if spec.carrier.is_empty() {
            return Err(violation("carrier", "empty carrier"));
        }
        let mut index = BTreeMap::new();
        for (i, name) in spec.carrier.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(violation("carrier", format!("duplicate element `{name}`")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| violation("carrier", format!("`{name}` is not in the carrier")))
        };
        let zero = lookup(&spec.zero)?;
        let one = lookup(&spec.one)?;
        let n = spec.carrier.len();

        let mut sum: Vec<Vec<Option<usize>>> = vec![vec![None; n]; n];
        let mut put = |a: usize, b: usize, c: usize, axiom: &'static str| -> Result<()> {
            match sum[a][b] {
                Some(prev) if prev != c => Err(violation(
                    axiom,
                    format!(
                        "{} + {} is both {} and {}",
                        spec.carrier[a], spec.carrier[b], spec.carrier[prev], spec.carrier[c]
                    ),
                )),
                _ => {
                    sum[a][b] = Some(c);
                    Ok(())
                }
            }
        };
        for [a, b, c] in &spec.sum {
            let (a, b, c) = (lookup(a)?, lookup(b)?, lookup(c)?);
            put(a, b, c, "commutativity")?;
            put(b, a, c, "commutativity")?;
        }
        for a in 0..n {
            put(zero, a, a, "zero")?;
            put(a, zero, a, "zero")?;
        }

        let mut complement = vec![usize::MAX; n];
        for (a, a_c) in &spec.complement {
            complement[lookup(a)?] = lookup(a_c)?;
        }
        if let Some(missing) = complement.iter().position(|&c| c == usize::MAX) {
            return Err(violation(
                "orthocomplement",
                format!("no complement given for `{}`", spec.carrier[missing]),
            ));
        }

        let table = FiniteTable {
            index,
            zero,
            one,
            sum,
            complement,
            spec,
        };
        table.check_axioms()?;
        Ok(table)
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.len();
        let name = |i: usize| self.spec.carrier[i].as_str();

        for a in 0..n {
            for b in 0..n {
                if self.sum[a][b] != self.sum[b][a] {
                    return Err(violation(
                        "commutativity",
                        format!("{} + {} differs from {} + {}", name(a), name(b), name(b), name(a)),
                    ));
                }
            }
        }

        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let Some(bc) = self.sum[b][c] else { continue };
                    let Some(lhs) = self.sum[a][bc] else { continue };
                    let rhs = self.sum[a][b].and_then(|ab| self.sum[ab][c]);
                    if rhs != Some(lhs) {
                        return Err(violation(
                            "associativity",
                            format!(
                                "{a} + ({b} + {c}) is defined but ({a} + {b}) + {c} is not equal to it",
                                a = name(a),
                                b = name(b),
                                c = name(c)
                            ),
                        ));
                    }
                }
            }
        }

        for a in 0..n {
            let witnesses: Vec<usize> = (0..n).filter(|&b| self.sum[a][b] == Some(self.one)).collect();
            if witnesses != [self.complement[a]] {
                return Err(violation(
                    "orthocomplement",
                    format!(
                        "`{}` must have exactly one complement (declared `{}`), found {:?}",
                        name(a),
                        name(self.complement[a]),
                        witnesses.iter().map(|&w| name(w)).collect::<Vec<_>>()
                    ),
                ));
            }
        }

        for a in 0..n {
            if a != self.zero && self.sum[a][self.one].is_some() {
                return Err(violation(
                    "zero-one law",
                    format!("{} + {} is defined", name(a), name(self.one)),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.spec.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.carrier.is_empty()
    }

    pub fn spec(&self) -> &FiniteTableSpec {
        &self.spec
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.spec.carrier[id]
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn sum(&self, a: usize, b: usize) -> Option<usize> {
        self.sum[a][b]
    }

    pub fn complement(&self, a: usize) -> usize {
        self.complement[a]
    }

    /// The unique `c` with `a + c = b`, if any.
    pub fn difference(&self, a: usize, b: usize) -> Option<usize> {
        (0..self.len()).find(|&c| self.sum[a][c] == Some(b))
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.difference(a, b).is_some()
    }

    /// Exhaustive decomposability check. Returns a counterexample
    /// `(a, b, c, d)` with `a + b = c + d` admitting no 2×2 refinement.
    pub fn decomposability_counterexample(&self) -> Option<[usize; 4]> {
        let n = self.len();
        let pairs: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter_map(|(a, b)| self.sum[a][b].map(|s| (a, b, s)))
            .collect();
        for &(a, b, s) in &pairs {
            for &(c, d, t) in &pairs {
                if s != t {
                    continue;
                }
                let refined = (0..n).any(|e11| {
                    let Some(e12) = self.difference(e11, a) else { return false };
                    let Some(e21) = self.difference(e11, c) else { return false };
                    let Some(e22) = self.difference(e21, b) else { return false };
                    self.sum[e12][e22] == Some(d)
                });
                if !refined {
                    return Some([a, b, c, d]);
                }
            }
        }
        None
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The four-element algebra {0, a, a', 1} with a + a' = 1.
    pub(crate) fn diamond() -> FiniteTableSpec {
        FiniteTableSpec {
            carrier: ["0", "a", "a'", "1"].map(String::from).to_vec(),
            zero: "0".into(),
            one: "1".into(),
            sum: vec![["a".into(), "a'".into(), "1".into()]],
            complement: [("0", "1"), ("1", "0"), ("a", "a'"), ("a'", "a")]
                .into_iter()
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .collect(),
        }
    }

    /// Three-step chain {0, h, 1} with h + h = 1.
    pub(crate) fn chain3() -> FiniteTableSpec {
        FiniteTableSpec {
            carrier: ["0", "h", "1"].map(String::from).to_vec(),
            zero: "0".into(),
            one: "1".into(),
            sum: vec![["h".into(), "h".into(), "1".into()]],
            complement: [("0", "1"), ("1", "0"), ("h", "h")]
                .into_iter()
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .collect(),
        }
    }

    #[test]
    fn diamond_is_a_valid_decomposable_effect_algebra() {
        let t = FiniteTable::new(diamond()).unwrap();
        let a = t.id("a").unwrap();
        assert_eq!(t.name(t.complement(a)), "a'");
        assert!(t.leq(a, t.one()));
        assert_eq!(t.decomposability_counterexample(), None);
    }

    #[test]
    fn broken_complement_is_rejected() {
        let mut spec = diamond();
        spec.complement.insert("a".into(), "a".into());
        let err = FiniteTable::new(spec).unwrap_err();
        assert!(matches!(err, Error::Axiom { axiom: "orthocomplement", .. }), "{err}");
    }

    #[test]
    fn conflicting_commuted_entry_is_rejected() {
        let mut spec = diamond();
        spec.sum.push(["a'".into(), "a".into(), "a".into()]);
        let err = FiniteTable::new(spec).unwrap_err();
        assert!(matches!(err, Error::Axiom { axiom: "commutativity", .. }), "{err}");
    }

    #[test]
    fn zero_one_law_is_enforced() {
        let mut spec = diamond();
        spec.sum.push(["a".into(), "1".into(), "1".into()]);
        let err = FiniteTable::new(spec).unwrap_err();
        assert!(matches!(err, Error::Axiom { .. }), "{err}");
    }

    #[test]
    fn non_associative_table_is_rejected() {
        // h + h = 1 together with g + h = h' forces associativity checks.
        let spec = FiniteTableSpec {
            carrier: ["0", "g", "h", "k", "1"].map(String::from).to_vec(),
            zero: "0".into(),
            one: "1".into(),
            sum: vec![
                ["g".into(), "k".into(), "1".into()],
                ["h".into(), "h".into(), "1".into()],
                ["g".into(), "g".into(), "h".into()],
            ],
            complement: [("0", "1"), ("1", "0"), ("g", "k"), ("k", "g"), ("h", "h")]
                .into_iter()
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .collect(),
        };
        let err = FiniteTable::new(spec).unwrap_err();
        assert!(matches!(err, Error::Axiom { axiom: "associativity", .. }), "{err}");
    }

    #[test]
    fn empty_carrier_is_rejected() {
        let spec = FiniteTableSpec {
            carrier: vec![],
            zero: "0".into(),
            one: "1".into(),
            sum: vec![],
            complement: BTreeMap::new(),
        };
        assert!(FiniteTable::new(spec).is_err());
    }
}
