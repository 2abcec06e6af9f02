use num_traits::One;

use crate::algebra::Rational;

/// How a floating Born value is turned into an exact probability.
///
/// The result is the rational with the smallest denominator inside
/// `[x - eps, x + eps]`; with the default `eps = 1e-12` its denominator is at
/// most `10^12`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rationalization {
    pub eps: f64,
}

impl Default for Rationalization {
    fn default() -> Self {
        Rationalization { eps: 1e-12 }
    }
}

/// Rationalize `x`, clamped to `[0, 1]`.
pub fn rationalize(x: f64, how: Rationalization) -> Rational {
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    let exact = |v: f64| Rational::from_float(v).expect("finite");
    let lo = exact((x - how.eps).max(0.0));
    let hi = exact((x + how.eps).min(1.0));
    simplest_between(&lo, &hi)
}

/// Simplest rational in `[lo, hi]`, `0 ≤ lo ≤ hi`, via continued fractions.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    let next = &fl + Rational::one();
    if &next <= hi {
        return next;
    }
    let lo_frac = lo - &fl;
    let hi_frac = hi - &fl;
    let inner = simplest_between(&hi_frac.recip(), &lo_frac.recip());
    fl + inner.recip()
}
