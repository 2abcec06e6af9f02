//! Effect algebras: exact probabilities, quantum effects and finite tables.
//!
//! Every operation takes an [`EffectAlgebraContext`], which fixes the kind of
//! weights in play together with the equality tolerance. Probabilities and
//! finite elements compare exactly by default; quantum effects compare entry
//! by entry within the tolerance, and positivity is decided on the smallest
//! eigenvalue.

mod coupling;
mod finite;
mod flow;
mod systems;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::quantum::{self, CMatrix};

pub use coupling::{
    coupling_feasible, is_decomposable_instance, CouplingMethod, FeasibilityOptions, FeasibilityVerdict,
};
pub use finite::{FiniteTable, FiniteTableSpec};
pub use systems::{Registry, SystemCollection};

#[cfg(test)]
pub(crate) use finite::tests::diamond as diamond_spec;

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"n/d"`, `"n"` or a plain decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("`{text}` is not a rational number"));
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let digits = format!("{whole}{frac}");
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(n, d));
    }
    text.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad())
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// A weight: an exact probability, a quantum effect, or a table element.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectValue {
    Rational(Rational),
    Matrix(CMatrix),
    Finite(String),
}

impl EffectValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EffectValue::Rational(_) => "rational",
            EffectValue::Matrix(_) => "matrix",
            EffectValue::Finite(_) => "finite",
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            EffectValue::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match self {
            EffectValue::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

impl From<Rational> for EffectValue {
    fn from(r: Rational) -> Self {
        EffectValue::Rational(r)
    }
}

impl From<CMatrix> for EffectValue {
    fn from(m: CMatrix) -> Self {
        EffectValue::Matrix(m)
    }
}

impl fmt::Display for EffectValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectValue::Rational(r) => write!(f, "{}", format_rational(r)),
            EffectValue::Finite(n) => write!(f, "{n}"),
            EffectValue::Matrix(m) => {
                write!(f, "[")?;
                for i in 0..m.nrows() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    for j in 0..m.ncols() {
                        if j > 0 {
                            write!(f, ", ")?;
                        }
                        let z = m[(i, j)];
                        if z.im.abs() < 1e-15 {
                            write!(f, "{:.6}", z.re)?;
                        } else {
                            write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
                        }
                    }
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlgebraKind {
    Probability,
    Quantum(Registry),
    Finite(Arc<FiniteTable>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectAlgebraContext {
    kind: AlgebraKind,
    tol: f64,
    tol_exact: Rational,
}

impl EffectAlgebraContext {
    pub fn probability() -> Self {
        Self::new(AlgebraKind::Probability, 0.0)
    }

    pub fn quantum(registry: Registry) -> Self {
        Self::new(AlgebraKind::Quantum(registry), quantum::DEFAULT_TOL)
    }

    pub fn finite(table: FiniteTable) -> Self {
        Self::new(AlgebraKind::Finite(Arc::new(table)), 0.0)
    }

    fn new(kind: AlgebraKind, tol: f64) -> Self {
        EffectAlgebraContext {
            kind,
            tol,
            tol_exact: Rational::from_float(tol).unwrap_or_else(Rational::zero),
        }
    }

    /// Same algebra with another equality tolerance.
    pub fn with_tol(self, tol: f64) -> Self {
        assert!(tol >= 0.0 && tol.is_finite(), "tolerance must be non-negative");
        Self::new(self.kind, tol)
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            AlgebraKind::Probability => "probability",
            AlgebraKind::Quantum(_) => "quantum",
            AlgebraKind::Finite(_) => "finite",
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self.kind, AlgebraKind::Quantum(_))
    }

    pub fn registry(&self) -> Registry {
        match &self.kind {
            AlgebraKind::Quantum(r) => r.clone(),
            _ => Registry::default(),
        }
    }

    pub fn table(&self) -> Option<&FiniteTable> {
        match &self.kind {
            AlgebraKind::Finite(t) => Some(t),
            _ => None,
        }
    }

    /// Same kind of algebra (registries and tables compared, tolerance not).
    pub fn same_kind(&self, other: &EffectAlgebraContext) -> bool {
        self.kind == other.kind
    }

    fn mismatch(&self, v: &EffectValue) -> Error {
        Error::KindMismatch {
            expected: self.kind_name().into(),
            found: v.kind_name().into(),
        }
    }

    fn finite_id(&self, v: &EffectValue) -> Result<(&FiniteTable, usize)> {
        match (&self.kind, v) {
            (AlgebraKind::Finite(t), EffectValue::Finite(name)) => t
                .id(name)
                .map(|id| (t.as_ref(), id))
                .ok_or_else(|| Error::InvalidValue(format!("`{name}` is not in the table carrier"))),
            _ => Err(self.mismatch(v)),
        }
    }

    fn finite_value(&self, t: &FiniteTable, id: usize) -> EffectValue {
        EffectValue::Finite(t.name(id).to_string())
    }

    /// Checks that `v` is an element of this algebra.
    pub fn check(&self, v: &EffectValue) -> Result<()> {
        match (&self.kind, v) {
            (AlgebraKind::Probability, EffectValue::Rational(r)) => {
                if r.is_negative() || *r > Rational::one() + &self.tol_exact {
                    Err(Error::InvalidValue(format!("{} is outside [0, 1]", format_rational(r))))
                } else {
                    Ok(())
                }
            }
            (AlgebraKind::Quantum(_), EffectValue::Matrix(m)) => {
                if quantum::validate_effect(m, self.tol)? {
                    Ok(())
                } else {
                    Err(Error::InvalidValue("matrix is not a quantum effect (0 ⊑ L ⊑ I)".into()))
                }
            }
            (AlgebraKind::Finite(_), EffectValue::Finite(_)) => self.finite_id(v).map(|_| ()),
            _ => Err(self.mismatch(v)),
        }
    }

    /// Checks `v` and, for matrices, its dimension against `grade`.
    pub fn check_graded(&self, v: &EffectValue, grade: &SystemCollection) -> Result<()> {
        if let EffectValue::Matrix(m) = v {
            if m.nrows() != grade.dim() {
                return Err(Error::DimensionMismatch {
                    expected: grade.dim(),
                    found: m.nrows(),
                });
            }
        }
        self.check(v)
    }

    pub fn zero(&self, grade: &SystemCollection) -> EffectValue {
        match &self.kind {
            AlgebraKind::Probability => EffectValue::Rational(Rational::zero()),
            AlgebraKind::Quantum(_) => EffectValue::Matrix(quantum::zeros(grade.dim())),
            AlgebraKind::Finite(t) => self.finite_value(t, t.zero()),
        }
    }

    pub fn one(&self, grade: &SystemCollection) -> EffectValue {
        match &self.kind {
            AlgebraKind::Probability => EffectValue::Rational(Rational::one()),
            AlgebraKind::Quantum(_) => EffectValue::Matrix(quantum::identity(grade.dim())),
            AlgebraKind::Finite(t) => self.finite_value(t, t.one()),
        }
    }

    pub fn is_zero(&self, v: &EffectValue) -> bool {
        match v {
            EffectValue::Rational(r) => r.abs() <= self.tol_exact,
            EffectValue::Matrix(m) => m.iter().all(|z| z.norm() <= self.tol),
            EffectValue::Finite(_) => self.finite_id(v).map(|(t, id)| id == t.zero()).unwrap_or(false),
        }
    }

    /// Equality up to the context tolerance.
    pub fn approx_eq(&self, a: &EffectValue, b: &EffectValue) -> bool {
        match (a, b) {
            (EffectValue::Rational(x), EffectValue::Rational(y)) => (x - y).abs() <= self.tol_exact,
            (EffectValue::Matrix(x), EffectValue::Matrix(y)) => quantum::max_abs_diff(x, y) <= self.tol,
            (EffectValue::Finite(x), EffectValue::Finite(y)) => x == y,
            _ => false,
        }
    }

    /// A real-valued distance used for diagnostics and law reports.
    pub fn distance(&self, a: &EffectValue, b: &EffectValue) -> f64 {
        match (a, b) {
            (EffectValue::Rational(x), EffectValue::Rational(y)) => rational_to_f64(&(x - y).abs()),
            (EffectValue::Matrix(x), EffectValue::Matrix(y)) => quantum::max_abs_diff(x, y),
            (EffectValue::Finite(x), EffectValue::Finite(y)) if x == y => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Partial sum: `None` when `a ⊥ b` fails.
    pub fn sum(&self, a: &EffectValue, b: &EffectValue) -> Result<Option<EffectValue>> {
        match (&self.kind, a, b) {
            (AlgebraKind::Probability, EffectValue::Rational(x), EffectValue::Rational(y)) => {
                let s = x + y;
                Ok((s <= Rational::one() + &self.tol_exact).then_some(EffectValue::Rational(s)))
            }
            (AlgebraKind::Quantum(_), EffectValue::Matrix(x), EffectValue::Matrix(y)) => {
                if x.shape() != y.shape() {
                    return Err(Error::DimensionMismatch {
                        expected: x.nrows(),
                        found: y.nrows(),
                    });
                }
                let s = x + y;
                let top = quantum::eigenvalues(&s).last().copied().unwrap_or(0.0);
                Ok((top <= 1.0 + self.tol).then_some(EffectValue::Matrix(s)))
            }
            (AlgebraKind::Finite(_), _, _) => {
                let (t, x) = self.finite_id(a)?;
                let (_, y) = self.finite_id(b)?;
                Ok(t.sum(x, y).map(|s| self.finite_value(t, s)))
            }
            _ => Err(self.mismatch(if self.check_kind(a) { b } else { a })),
        }
    }

    fn check_kind(&self, v: &EffectValue) -> bool {
        matches!(
            (&self.kind, v),
            (AlgebraKind::Probability, EffectValue::Rational(_))
                | (AlgebraKind::Quantum(_), EffectValue::Matrix(_))
                | (AlgebraKind::Finite(_), EffectValue::Finite(_))
        )
    }

    /// n-ary sum starting from the zero of `grade`; `None` if undefined.
    pub fn sum_all<'a, I>(&self, values: I, grade: &SystemCollection) -> Result<Option<EffectValue>>
    where
        I: IntoIterator<Item = &'a EffectValue>,
    {
        let mut acc = self.zero(grade);
        for v in values {
            match self.sum(&acc, v)? {
                Some(s) => acc = s,
                None => return Ok(None),
            }
        }
        Ok(Some(acc))
    }

    /// The unique `a′` with `a + a′ = 1`.
    pub fn orthocomplement(&self, a: &EffectValue) -> Result<EffectValue> {
        match (&self.kind, a) {
            (AlgebraKind::Probability, EffectValue::Rational(r)) => Ok(EffectValue::Rational(Rational::one() - r)),
            (AlgebraKind::Quantum(_), EffectValue::Matrix(m)) => {
                Ok(EffectValue::Matrix(quantum::identity(m.nrows()) - m))
            }
            (AlgebraKind::Finite(_), _) => {
                let (t, id) = self.finite_id(a)?;
                Ok(self.finite_value(t, t.complement(id)))
            }
            _ => Err(self.mismatch(a)),
        }
    }

    /// The `c` with `a + c = b`, when `a ⪯ b`.
    pub fn difference(&self, a: &EffectValue, b: &EffectValue) -> Result<Option<EffectValue>> {
        match (&self.kind, a, b) {
            (AlgebraKind::Probability, EffectValue::Rational(x), EffectValue::Rational(y)) => {
                let d = y - x;
                if d.is_negative() {
                    if d.abs() <= self.tol_exact {
                        return Ok(Some(EffectValue::Rational(Rational::zero())));
                    }
                    return Ok(None);
                }
                Ok(Some(EffectValue::Rational(d)))
            }
            (AlgebraKind::Quantum(_), EffectValue::Matrix(x), EffectValue::Matrix(y)) => {
                if x.shape() != y.shape() {
                    return Err(Error::DimensionMismatch {
                        expected: x.nrows(),
                        found: y.nrows(),
                    });
                }
                let d = y - x;
                let low = quantum::eigenvalues(&d).first().copied().unwrap_or(0.0);
                Ok((low >= -self.tol).then_some(EffectValue::Matrix(d)))
            }
            (AlgebraKind::Finite(_), _, _) => {
                let (t, x) = self.finite_id(a)?;
                let (_, y) = self.finite_id(b)?;
                Ok(t.difference(x, y).map(|d| self.finite_value(t, d)))
            }
            _ => Err(self.mismatch(if self.check_kind(a) { b } else { a })),
        }
    }

    pub fn leq(&self, a: &EffectValue, b: &EffectValue) -> Result<bool> {
        Ok(self.difference(a, b)?.is_some())
    }

    /// Graded product `a@ga ⊠ b@gb`.
    ///
    /// Probabilities multiply; quantum effects take the sorted Kronecker
    /// product. Finite tables carry no product, so only the trivial cases
    /// with a `0` or `1` factor are defined there.
    pub fn product(
        &self,
        a: &EffectValue,
        ga: &SystemCollection,
        b: &EffectValue,
        gb: &SystemCollection,
    ) -> Result<EffectValue> {
        match (&self.kind, a, b) {
            (AlgebraKind::Probability, EffectValue::Rational(x), EffectValue::Rational(y)) => {
                Ok(EffectValue::Rational(x * y))
            }
            (AlgebraKind::Quantum(_), EffectValue::Matrix(x), EffectValue::Matrix(y)) => {
                Ok(EffectValue::Matrix(quantum::boxtimes(x, ga, y, gb)?.0))
            }
            (AlgebraKind::Finite(_), _, _) => {
                let (t, x) = self.finite_id(a)?;
                let (_, y) = self.finite_id(b)?;
                if x == t.one() {
                    Ok(b.clone())
                } else if y == t.one() {
                    Ok(a.clone())
                } else if x == t.zero() || y == t.zero() {
                    Ok(self.finite_value(t, t.zero()))
                } else {
                    Err(Error::Unsupported(format!(
                        "finite table has no product for {} ⊠ {}",
                        t.name(x),
                        t.name(y)
                    )))
                }
            }
            _ => Err(self.mismatch(if self.check_kind(a) { b } else { a })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::finite::tests::diamond;
    use super::*;
    use crate::quantum::{named, DEFAULT_TOL};

    fn q(n: i64, d: i64) -> EffectValue {
        EffectValue::Rational(ratio(n, d))
    }

    fn m(name: &str) -> EffectValue {
        EffectValue::Matrix(named(name).unwrap())
    }

    fn fin(name: &str) -> EffectValue {
        EffectValue::Finite(name.into())
    }

    fn qubit_ctx() -> (EffectAlgebraContext, SystemCollection) {
        let r = Registry::qubits(1);
        (EffectAlgebraContext::quantum(r.clone()), r.all())
    }

    #[test]
    fn complementary_probabilities_sum_to_one() {
        let ctx = EffectAlgebraContext::probability();
        assert_eq!(ctx.sum(&q(1, 2), &q(1, 2)).unwrap(), Some(q(1, 1)));
        assert_eq!(ctx.sum(&q(3, 4), &q(1, 2)).unwrap(), None);
    }

    #[test]
    fn basis_projectors_sum_to_identity() {
        let (ctx, g) = qubit_ctx();
        let s = ctx.sum(&m("proj0"), &m("proj1")).unwrap().unwrap();
        assert!(ctx.approx_eq(&s, &ctx.one(&g)));
    }

    #[test]
    fn overfull_matrix_sum_is_undefined() {
        let (ctx, _) = qubit_ctx();
        assert_eq!(ctx.sum(&m("proj0"), &m("proj+")).unwrap(), None);
    }

    #[test]
    fn mixing_kinds_is_an_error() {
        let ctx = EffectAlgebraContext::probability();
        assert!(matches!(ctx.sum(&q(1, 2), &m("proj0")), Err(Error::KindMismatch { .. })));
        assert!(matches!(ctx.check(&fin("a")), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn orthocomplements() {
        let ctx = EffectAlgebraContext::probability();
        assert_eq!(ctx.orthocomplement(&q(1, 4)).unwrap(), q(3, 4));
        let (qctx, _) = qubit_ctx();
        assert!(qctx.approx_eq(&qctx.orthocomplement(&m("proj+")).unwrap(), &m("proj-")));
        let fctx = EffectAlgebraContext::finite(FiniteTable::new(diamond()).unwrap());
        assert_eq!(fctx.orthocomplement(&fin("a")).unwrap(), fin("a'"));
    }

    #[test]
    fn order_and_difference() {
        let ctx = EffectAlgebraContext::probability();
        assert!(ctx.leq(&q(1, 3), &q(1, 2)).unwrap());
        assert_eq!(ctx.difference(&q(1, 3), &q(1, 2)).unwrap(), Some(q(1, 6)));
        assert_eq!(ctx.difference(&q(1, 2), &q(1, 3)).unwrap(), None);

        let (qctx, g) = qubit_ctx();
        assert!(qctx.leq(&m("proj0"), &qctx.one(&g)).unwrap());
        let d = qctx.difference(&m("proj0"), &qctx.one(&g)).unwrap().unwrap();
        assert!(qctx.approx_eq(&d, &m("proj1")));
    }

    #[test]
    fn proj0_is_not_below_proj_plus() {
        // Oracle: |+⟩⟨+| - |0⟩⟨0| = [[-1/2, 1/2], [1/2, 1/2]], whose
        // characteristic polynomial λ² - 1/2 has root -1/√2 < 0.
        let diff = named("proj+").unwrap() - named("proj0").unwrap();
        let ev = quantum::eigenvalues(&diff);
        assert!((ev[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let (qctx, _) = qubit_ctx();
        assert!(!qctx.leq(&m("proj0"), &m("proj+")).unwrap());
    }

    #[test]
    fn finite_table_arithmetic() {
        let ctx = EffectAlgebraContext::finite(FiniteTable::new(diamond()).unwrap());
        let g = SystemCollection::empty(&Registry::default());
        assert_eq!(ctx.sum(&fin("a"), &fin("a'")).unwrap(), Some(fin("1")));
        assert_eq!(ctx.sum(&fin("a"), &fin("a")).unwrap(), None);
        assert_eq!(ctx.sum(&fin("a"), &ctx.zero(&g)).unwrap(), Some(fin("a")));
        assert!(ctx.leq(&fin("a"), &fin("1")).unwrap());
        assert_eq!(ctx.difference(&fin("a"), &fin("1")).unwrap(), Some(fin("a'")));
        assert!(ctx.check(&fin("zz")).is_err());
    }

    #[test]
    fn products_per_kind() {
        let ctx = EffectAlgebraContext::probability();
        let e = SystemCollection::empty(&Registry::default());
        assert_eq!(ctx.product(&q(1, 2), &e, &q(1, 3), &e).unwrap(), q(1, 6));
        let fctx = EffectAlgebraContext::finite(FiniteTable::new(diamond()).unwrap());
        assert_eq!(fctx.product(&fin("1"), &e, &fin("a"), &e).unwrap(), fin("a"));
        assert!(matches!(fctx.product(&fin("a"), &e, &fin("a'"), &e), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("1").unwrap(), ratio(1, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("half").is_err());
        assert_eq!(format_rational(&ratio(6, 8)), "3/4");
        assert_eq!(format_rational(&ratio(0, 8)), "0");
    }

    #[test]
    fn quantum_context_uses_default_tolerance() {
        let (ctx, _) = qubit_ctx();
        assert_eq!(ctx.tol(), DEFAULT_TOL);
        assert_eq!(EffectAlgebraContext::probability().tol(), 0.0);
    }
}
