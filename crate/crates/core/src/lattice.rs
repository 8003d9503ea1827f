//! Extended reals over exact rationals.
//!
//! `ExtReal` is the carrier of the quantity lattice: a totally ordered set with
//! `-inf` at the bottom and `+inf` at the top. Meet is `min`, join is `max`.
//! Only the arithmetic needed by the transformers is provided: addition that
//! refuses `(+inf) + (-inf)`, scaling by non-negative rationals, and negation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("indeterminate form: (+inf) + (-inf)")]
    Indeterminate,
    #[error("negative scaling factor {0}")]
    NegativeScale(BigRational),
    #[error("cannot parse extended real from {0:?}")]
    Parse(String),
}

/// An extended real number: a finite rational, `-inf` or `+inf`.
///
/// The derived order is the lattice order because the variants are declared
/// bottom to top.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtReal {
    NegInf,
    Finite(BigRational),
    PosInf,
}

impl ExtReal {
    pub fn int(n: i64) -> Self {
        ExtReal::Finite(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        ExtReal::Finite(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Self {
        ExtReal::Finite(BigRational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn meet(&self, other: &Self) -> Self {
        meet(self, other)
    }

    pub fn join(&self, other: &Self) -> Self {
        join(self, other)
    }
}

impl From<i64> for ExtReal {
    fn from(n: i64) -> Self {
        ExtReal::int(n)
    }
}

impl From<BigRational> for ExtReal {
    fn from(r: BigRational) -> Self {
        ExtReal::Finite(r)
    }
}

/// Pointwise minimum.
pub fn meet(a: &ExtReal, b: &ExtReal) -> ExtReal {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Pointwise maximum.
pub fn join(a: &ExtReal, b: &ExtReal) -> ExtReal {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Exact sum. Same-sign infinities dominate finite operands; opposite
/// infinities are rejected.
pub fn add(a: &ExtReal, b: &ExtReal) -> Result<ExtReal, LatticeError> {
    use ExtReal::*;
    match (a, b) {
        (PosInf, NegInf) | (NegInf, PosInf) => Err(LatticeError::Indeterminate),
        (PosInf, _) | (_, PosInf) => Ok(PosInf),
        (NegInf, _) | (_, NegInf) => Ok(NegInf),
        (Finite(x), Finite(y)) => Ok(Finite(x + y)),
    }
}

/// `r * a` for `r >= 0`. Zero annihilates infinities.
pub fn scale(r: &BigRational, a: &ExtReal) -> Result<ExtReal, LatticeError> {
    if r.is_negative() {
        return Err(LatticeError::NegativeScale(r.clone()));
    }
    if r.is_zero() {
        return Ok(ExtReal::zero());
    }
    Ok(match a {
        ExtReal::Finite(x) => ExtReal::Finite(r * x),
        inf => inf.clone(),
    })
}

pub fn negate(a: &ExtReal) -> ExtReal {
    match a {
        ExtReal::NegInf => ExtReal::PosInf,
        ExtReal::PosInf => ExtReal::NegInf,
        ExtReal::Finite(x) => ExtReal::Finite(-x),
    }
}

/// Renders a rational as `p/q`, or as a bare integer when `q = 1`.
pub fn fmt_rational(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            ExtReal::Finite(r) => fmt_rational(r, f),
        }
    }
}

/// Parses `p`, `p/q`, `+inf`, `inf` or `-inf`.
pub fn parse_rational(s: &str) -> Result<BigRational, LatticeError> {
    let err = || LatticeError::Parse(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = num.parse().map_err(|_| err())?;
    let d: BigInt = den.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(BigRational::new(n, d))
}

impl FromStr for ExtReal {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+inf" | "inf" => Ok(ExtReal::PosInf),
            "-inf" => Ok(ExtReal::NegInf),
            other => parse_rational(other).map(ExtReal::Finite),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use ExtReal::{NegInf, PosInf};

    fn r(n: i64) -> ExtReal {
        ExtReal::int(n)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn meet_examples() {
        assert_eq!(meet(&PosInf, &r(7)), r(7));
        assert_eq!(meet(&NegInf, &r(7)), NegInf);
        assert_eq!(meet(&r(3), &r(5)), r(3));
    }

    #[test]
    fn join_examples() {
        assert_eq!(join(&NegInf, &r(7)), r(7));
        assert_eq!(join(&PosInf, &r(7)), PosInf);
        assert_eq!(join(&r(3), &r(5)), r(5));
    }

    #[test]
    fn add_examples() {
        assert_eq!(add(&r(2), &r(3)), Ok(r(5)));
        assert_eq!(add(&PosInf, &r(3)), Ok(PosInf));
        assert_eq!(add(&PosInf, &NegInf), Err(LatticeError::Indeterminate));
        assert_eq!(add(&NegInf, &PosInf), Err(LatticeError::Indeterminate));
        assert_eq!(add(&NegInf, &NegInf), Ok(NegInf));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale(&q(2, 1), &r(3)), Ok(r(6)));
        assert_eq!(scale(&q(0, 1), &PosInf), Ok(r(0)));
        assert_eq!(scale(&q(0, 1), &NegInf), Ok(r(0)));
        assert_eq!(scale(&q(3, 1), &NegInf), Ok(NegInf));
        assert_eq!(scale(&q(1, 2), &r(3)), Ok(ExtReal::ratio(3, 2)));
        assert!(matches!(scale(&q(-1, 1), &r(3)), Err(LatticeError::NegativeScale(_))));
    }

    #[test]
    fn negate_examples() {
        assert_eq!(negate(&r(5)), r(-5));
        assert_eq!(negate(&PosInf), NegInf);
        assert_eq!(negate(&r(0)), r(0));
    }

    #[test]
    fn render_and_parse() {
        assert_eq!(ExtReal::ratio(6, 4).to_string(), "3/2");
        assert_eq!(r(-4).to_string(), "-4");
        assert_eq!(PosInf.to_string(), "+inf");
        assert_eq!(NegInf.to_string(), "-inf");
        for s in ["3/2", "-4", "+inf", "-inf", "0"] {
            assert_eq!(s.parse::<ExtReal>().unwrap().to_string(), s);
        }
        assert_eq!("inf".parse::<ExtReal>(), Ok(PosInf));
        assert!("1/0".parse::<ExtReal>().is_err());
        assert!("abc".parse::<ExtReal>().is_err());
    }

    fn ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            1 => Just(NegInf),
            1 => Just(PosInf),
            6 => (-20i64..20, 1i64..5).prop_map(|(n, d)| ExtReal::ratio(n, d)),
        ]
    }

    proptest! {
        #[test]
        fn total_order(a in ext(), b in ext()) {
            let n = [a < b, a == b, a > b].iter().filter(|x| **x).count();
            prop_assert_eq!(n, 1);
            prop_assert!(NegInf <= a && a <= PosInf);
        }

        #[test]
        fn double_negation(a in ext()) {
            prop_assert_eq!(negate(&negate(&a)), a);
        }

        #[test]
        fn de_morgan(a in ext(), b in ext()) {
            prop_assert_eq!(negate(&meet(&a, &b)), join(&negate(&a), &negate(&b)));
            prop_assert_eq!(negate(&join(&a, &b)), meet(&negate(&a), &negate(&b)));
        }

        #[test]
        fn meet_join_laws(a in ext(), b in ext(), c in ext()) {
            prop_assert_eq!(meet(&a, &b), meet(&b, &a));
            prop_assert_eq!(join(&a, &b), join(&b, &a));
            prop_assert_eq!(meet(&a, &meet(&b, &c)), meet(&meet(&a, &b), &c));
            prop_assert_eq!(join(&a, &join(&b, &c)), join(&join(&a, &b), &c));
            prop_assert_eq!(meet(&a, &a), a.clone());
            prop_assert_eq!(join(&a, &a), a.clone());
            prop_assert_eq!(meet(&NegInf, &a), NegInf);
            prop_assert_eq!(join(&PosInf, &a), PosInf);
            prop_assert_eq!(meet(&a, &join(&b, &c)), join(&meet(&a, &b), &meet(&a, &c)));
            prop_assert_eq!(join(&a, &meet(&b, &c)), meet(&join(&a, &b), &join(&a, &c)));
        }

        #[test]
        fn add_commutative_associative(a in ext(), b in ext(), c in ext()) {
            prop_assert_eq!(add(&a, &b), add(&b, &a));
            if let (Ok(ab), Ok(bc)) = (add(&a, &b), add(&b, &c)) {
                if let (Ok(l), Ok(r)) = (add(&ab, &c), add(&a, &bc)) {
                    prop_assert_eq!(l, r);
                }
            }
        }
    }
}
