//! JSON reading and writing for systems, weights, densities and effect sets.
//!
//! Weights are written canonically as `{"rational":"1/2"}`,
//! `{"matrix":[[[re,im],...],...]}` or `{"finite":"a"}`. On input a
//! `{"named":"proj+"}` object is also accepted, as is a bare string (a named
//! matrix, a rational or a table element, depending on the algebra) and, for
//! probabilities, a bare number.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{
    format_rational, parse_rational, AlgebraKind, EffectAlgebraContext, EffectValue, FiniteTable, FiniteTableSpec,
    Registry, SystemCollection,
};
use crate::distribution::FiniteHom;
use crate::error::{Error, Result};
use crate::lts::{Distribution, Elts, LabelSet};
use crate::quantum::{self, c, CMatrix, DensityOperator};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum AlgebraJson {
    Probability {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    Quantum {
        registry: BTreeMap<String, usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    Finite {
        table: FiniteTableSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsJson {
    #[serde(default = "default_tau")]
    tau: String,
    #[serde(default)]
    visible: Vec<String>,
    #[serde(default)]
    bar: BTreeMap<String, String>,
}

fn default_tau() -> String {
    "tau".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grade: Option<Vec<String>>,
    #[serde(default)]
    weights: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionJson {
    from: String,
    label: String,
    dist: DistJson,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EltsJson {
    algebra: AlgebraJson,
    #[serde(default)]
    grade: Vec<String>,
    labels: LabelsJson,
    states: Vec<String>,
    #[serde(default)]
    transitions: Vec<TransitionJson>,
    #[serde(default)]
    markov_chain: bool,
}

fn from_str_with_path<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::Parse(e.inner().to_string())
        } else {
            Error::Parse(format!("{path}: {}", e.inner()))
        }
    })
}

fn context_from_json(algebra: AlgebraJson) -> Result<EffectAlgebraContext> {
    let (ctx, tol) = match algebra {
        AlgebraJson::Probability { tol } => (EffectAlgebraContext::probability(), tol),
        AlgebraJson::Quantum { registry, tol } => (EffectAlgebraContext::quantum(Registry::new(registry)?), tol),
        AlgebraJson::Finite { table, tol } => (EffectAlgebraContext::finite(FiniteTable::new(table)?), tol),
    };
    match tol {
        Some(t) if !(t >= 0.0 && t.is_finite()) => Err(Error::Parse(format!("algebra.tol: {t} is not a valid tolerance"))),
        Some(t) => Ok(ctx.with_tol(t)),
        None => Ok(ctx),
    }
}

fn default_tol(ctx: &EffectAlgebraContext) -> f64 {
    if ctx.is_quantum() {
        quantum::DEFAULT_TOL
    } else {
        0.0
    }
}

fn context_to_json(ctx: &EffectAlgebraContext) -> AlgebraJson {
    let tol = (ctx.tol() != default_tol(ctx)).then_some(ctx.tol());
    match ctx.kind() {
        AlgebraKind::Probability => AlgebraJson::Probability { tol },
        AlgebraKind::Quantum(r) => AlgebraJson::Quantum {
            registry: r.dims().clone(),
            tol,
        },
        AlgebraKind::Finite(t) => AlgebraJson::Finite {
            table: t.spec().clone(),
            tol,
        },
    }
}

/// 1-based line of every `"from"` key, used to anchor diagnostics.
fn transition_lines(text: &str) -> Vec<usize> {
    text.match_indices("\"from\"")
        .map(|(i, _)| text[..i].matches('\n').count() + 1)
        .collect()
}

/// Parses and validates a system.
pub fn parse_elts(text: &str) -> Result<Elts> {
    let raw: EltsJson = from_str_with_path(text)?;
    let ctx = context_from_json(raw.algebra)?;
    let registry = ctx.registry();
    let grade = SystemCollection::new(&registry, raw.grade.iter())?;
    let labels = LabelSet::new(
        raw.labels.tau,
        raw.labels.visible,
        raw.labels.bar.into_iter(),
    )?;
    let mut problems = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for s in &raw.states {
        if !seen.insert(s) {
            problems.push(format!("duplicate state `{s}`"));
        }
    }

    let lines = transition_lines(text);
    let anchored = lines.len() == raw.transitions.len();
    let mut sys = Elts::new(ctx.clone(), grade.clone(), raw.states.iter().cloned(), labels, raw.markov_chain);
    for (k, t) in raw.transitions.into_iter().enumerate() {
        let here = if anchored {
            format!("line {}: transition {k} ({} --{}-->)", lines[k], t.from, t.label)
        } else {
            format!("transition {k} ({} --{}-->)", t.from, t.label)
        };
        let dist_grade = match &t.dist.grade {
            Some(names) => match SystemCollection::new(&registry, names.iter()) {
                Ok(g) => g,
                Err(e) => {
                    problems.push(format!("{here}: {e}"));
                    continue;
                }
            },
            None => grade.clone(),
        };
        let mut weights = BTreeMap::new();
        for (s, v) in &t.dist.weights {
            match effect_from_json(v, &ctx) {
                Ok(w) if ctx.is_zero(&w) => {}
                Ok(w) => {
                    weights.insert(s.clone(), w);
                }
                Err(e) => problems.push(format!("{here}: weight of `{s}`: {e}")),
            }
        }
        let d = Distribution::from_parts(dist_grade, weights);
        let issues = sys.transition_violations(&t.from, &t.label, &d);
        if issues.is_empty() {
            sys.add_transition(t.from, t.label, d);
        } else {
            problems.extend(issues.into_iter().map(|v| format!("{here}: {v}")));
        }
    }
    if problems.is_empty() {
        problems = sys.validate();
    }
    if problems.is_empty() {
        Ok(sys)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Canonical pretty-printed JSON for a system.
pub fn emit_elts(sys: &Elts) -> String {
    let labels = sys.labels();
    let raw = EltsJson {
        algebra: context_to_json(sys.context()),
        grade: sys.grade().to_vec(),
        labels: LabelsJson {
            tau: labels.tau().to_string(),
            visible: labels.visible().iter().cloned().collect(),
            bar: labels.bar_pairs().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        },
        states: sys.states().iter().cloned().collect(),
        transitions: sys
            .transitions()
            .map(|(s, l, d)| TransitionJson {
                from: s.to_string(),
                label: l.to_string(),
                dist: DistJson {
                    grade: Some(d.grade().to_vec()),
                    weights: d.weights().iter().map(|(k, w)| (k.clone(), effect_to_json(w))).collect(),
                },
            })
            .collect(),
        markov_chain: sys.markov_chain(),
    };
    serde_json::to_string_pretty(&raw).expect("serializable") + "\n"
}

pub fn read_elts(path: impl AsRef<Path>) -> Result<Elts> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_elts(&text)
}

pub fn write_elts(sys: &Elts, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, emit_elts(sys)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// A square matrix of `[re, im]` pairs or plain reals, or a named matrix.
pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    if let Some(name) = v.as_str() {
        return quantum::named(name);
    }
    let bad = |why: &str| Error::Parse(format!("matrix: {why}"));
    let rows = v.as_array().ok_or_else(|| bad("expected an array of rows"))?;
    let n = rows.len();
    let mut m = quantum::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("expected an array of entries"))?;
        if row.len() != n {
            return Err(Error::ShapeMismatch(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = match z {
                Value::Number(x) => c(x.as_f64().ok_or_else(|| bad("non-finite entry"))?, 0.0),
                Value::Array(p) if p.len() == 2 => {
                    let re = p[0].as_f64().ok_or_else(|| bad("entry parts must be numbers"))?;
                    let im = p[1].as_f64().ok_or_else(|| bad("entry parts must be numbers"))?;
                    c(re, im)
                }
                _ => return Err(bad("entries are numbers or [re, im] pairs")),
            };
        }
    }
    Ok(m)
}

pub fn effect_to_json(v: &EffectValue) -> Value {
    match v {
        EffectValue::Rational(r) => json!({ "rational": format_rational(r) }),
        EffectValue::Matrix(m) => json!({ "matrix": matrix_to_json(m) }),
        EffectValue::Finite(n) => json!({ "finite": n }),
    }
}

fn rational_from_json(v: &Value) -> Result<EffectValue> {
    match v {
        Value::String(s) => Ok(EffectValue::Rational(parse_rational(s)?)),
        Value::Number(n) => Ok(EffectValue::Rational(parse_rational(&n.to_string())?)),
        _ => Err(Error::Parse("rational: expected a string or a number".into())),
    }
}

/// Reads a weight, interpreting bare values according to `ctx`.
pub fn effect_from_json(v: &Value, ctx: &EffectAlgebraContext) -> Result<EffectValue> {
    match v {
        Value::Object(map) if map.len() == 1 => {
            let (key, inner) = map.iter().next().expect("one entry");
            match key.as_str() {
                "rational" => rational_from_json(inner),
                "matrix" => matrix_from_json(inner).map(EffectValue::Matrix),
                "named" => inner
                    .as_str()
                    .ok_or_else(|| Error::Parse("named: expected a string".into()))
                    .and_then(quantum::named)
                    .map(EffectValue::Matrix),
                "finite" => inner
                    .as_str()
                    .map(|s| EffectValue::Finite(s.to_string()))
                    .ok_or_else(|| Error::Parse("finite: expected a string".into())),
                other => Err(Error::Parse(format!("unknown weight form `{other}`"))),
            }
        }
        Value::String(s) => match ctx.kind() {
            AlgebraKind::Probability => Ok(EffectValue::Rational(parse_rational(s)?)),
            AlgebraKind::Quantum(_) => quantum::named(s).map(EffectValue::Matrix),
            AlgebraKind::Finite(_) => Ok(EffectValue::Finite(s.clone())),
        },
        Value::Number(_) if !ctx.is_quantum() => rational_from_json(v),
        _ => Err(Error::Parse(format!("cannot read a weight from {v}"))),
    }
}

pub fn distribution_to_json(d: &Distribution) -> Value {
    let weights: serde_json::Map<String, Value> = d.weights().iter().map(|(k, w)| (k.clone(), effect_to_json(w))).collect();
    json!({ "grade": d.grade().to_vec(), "weights": weights })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityJson {
    systems: Vec<String>,
    matrix: Value,
}

pub fn density_to_json(rho: &DensityOperator) -> Value {
    json!({ "systems": rho.systems().to_vec(), "matrix": matrix_to_json(rho.matrix()) })
}

pub fn parse_density(text: &str, registry: &Registry, tol: f64) -> Result<DensityOperator> {
    let raw: DensityJson = from_str_with_path(text)?;
    let systems = SystemCollection::new(registry, raw.systems.iter())?;
    DensityOperator::new(systems, matrix_from_json(&raw.matrix)?, tol)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectSetJson {
    #[serde(default)]
    registry: Option<BTreeMap<String, usize>>,
    systems: Vec<String>,
    effects: Vec<Value>,
}

/// An effect set `{"registry":{..}, "systems":[..], "effects":[..]}`; without
/// a registry every listed system is a qubit.
pub fn parse_effect_set(text: &str) -> Result<(SystemCollection, Vec<CMatrix>)> {
    let raw: EffectSetJson = from_str_with_path(text)?;
    let registry = match raw.registry {
        Some(r) => Registry::new(r)?,
        None => Registry::new(raw.systems.iter().map(|s| (s.clone(), 2)).collect())?,
    };
    let systems = SystemCollection::new(&registry, raw.systems.iter())?;
    let ctx = EffectAlgebraContext::quantum(registry);
    let effects = raw
        .effects
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let e = effect_from_json(v, &ctx).map_err(|e| Error::Parse(format!("effects[{i}]: {e}")))?;
            ctx.check_graded(&e, &systems).map_err(|e| Error::Parse(format!("effects[{i}]: {e}")))?;
            Ok(e.as_matrix().cloned().expect("quantum weight"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((systems, effects))
}

/// A standalone finite table, checked against the effect-algebra axioms.
pub fn parse_table(text: &str) -> Result<FiniteTable> {
    FiniteTable::new(from_str_with_path(text)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HomJson {
    images: BTreeMap<String, Value>,
}

/// A homomorphism from `source` into the probabilities, given as
/// `{"images": {"a": "1/2", ...}}`.
pub fn parse_finite_hom(text: &str, source: &FiniteTable) -> Result<FiniteHom> {
    let raw: HomJson = from_str_with_path(text)?;
    let target = EffectAlgebraContext::probability();
    let images = raw
        .images
        .iter()
        .map(|(k, v)| {
            let e = effect_from_json(v, &target).map_err(|e| Error::Parse(format!("images.{k}: {e}")))?;
            Ok((k.clone(), e))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    FiniteHom::new(source, target, images)
}
