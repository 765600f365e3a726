//! Scalar abstraction for probability and index arithmetic.
//!
//! Population objects are computed over exact rationals so that every
//! "with probability one" statement reduces to a decidable comparison;
//! the same code paths accept `f64` for in-memory float tables.

use num_bigint::BigInt;
use num_traits::{Num, One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Arbitrary-precision rational, the default scalar of the exact lane.
pub type Rational = num_rational::BigRational;

/// Numeric requirements shared by every table and index in the crate.
///
/// `Num` supplies field arithmetic and exact equality; ordering is total on
/// the values we construct (no NaN enters through the public constructors).
pub trait Scalar: Num + PartialOrd + Clone + fmt::Debug + fmt::Display {
    fn from_int(n: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy view used for tolerance comparisons and report rendering.
    fn to_f64(&self) -> f64;

    /// Canonical string form: `num/den` for rationals, shortest-round-trip
    /// decimal for floats.
    fn encode(&self) -> String;
}

impl Scalar for Rational {
    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn encode(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Scalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn encode(&self) -> String {
        let mut buf = ryu_format(*self);
        if buf.is_empty() {
            buf = format!("{self}");
        }
        buf
    }
}

fn ryu_format(v: f64) -> String {
    // serde_json renders f64 through ryu; reuse it so report values match
    // serialized output byte for byte.
    serde_json::to_string(&v).unwrap_or_default()
}

/// Parse a scalar from its canonical string form (`"3/4"`, `"2"`, `"-1/3"`).
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| RationalParseError(s.to_string()))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| RationalParseError(s.to_string()))?;
    if den.is_zero() {
        return Err(RationalParseError(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a rational number: {0:?}")]
pub struct RationalParseError(pub String);

/// Total-order comparison for scalars we construct (panics on NaN, which the
/// public constructors never admit).
pub fn cmp_scalar<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b)
        .expect("scalar comparison must be defined (NaN is not a valid probability or index)")
}

pub fn sum<'a, T: Scalar + 'a>(values: impl IntoIterator<Item = &'a T>) -> T {
    values
        .into_iter()
        .fold(T::zero(), |acc, v| acc + v.clone())
}

pub fn mean_of<T: Scalar>(values: &[T]) -> T {
    let n = T::from_int(values.len() as i64);
    sum(values) / n
}

pub fn is_probability<T: Scalar>(v: &T) -> bool {
    *v >= T::zero() && *v <= T::one()
}

pub fn rational_one() -> Rational {
    Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trips_through_encode() {
        let v = Rational::from_ratio(-6, 8);
        assert_eq!(v.encode(), "-3/4");
        assert_eq!(parse_rational(&v.encode()).unwrap(), v);
        assert_eq!(parse_rational("5").unwrap(), Rational::from_int(5));
    }

    #[test]
    fn parse_rejects_zero_denominator_and_garbage() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn mean_is_exact_for_rationals() {
        let vals = [Rational::from_ratio(1, 5), Rational::from_ratio(7, 10)];
        assert_eq!(mean_of(&vals), Rational::from_ratio(9, 20));
    }

    #[test]
    fn float_lane_satisfies_the_same_surface() {
        let vals = [0.25f64, 0.75];
        assert_eq!(mean_of(&vals), 0.5);
        assert_eq!(0.5f64.encode(), "0.5");
    }
}
