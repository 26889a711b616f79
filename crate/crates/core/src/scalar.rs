//! Exact scalar layer.
//!
//! Interval algebra, linear elimination and the concentration bounds are
//! generic over [`Exact`]; everything measure-valued uses [`Rational`].

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact ordered field elements.
pub trait Exact:
    Clone + Ord + Hash + Debug + Display + Signed + num_traits::Num + FromStr + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self;
    fn from_frac(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }
    fn half() -> Self {
        Self::from_frac(1, 2)
    }
    fn to_big(&self) -> BigRational;
}

impl Exact for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_big(&self) -> BigRational {
        self.clone()
    }
}

impl Exact for Ratio<i64> {
    fn from_int(n: i64) -> Self {
        Ratio::from_integer(n)
    }
    fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pow2_neg(k: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// Renders `p/q`, or `n` for integers.
pub fn fmt_rat<S: Exact>(r: &S) -> String {
    let b = r.to_big();
    if b.denom().is_one() {
        b.numer().to_string()
    } else {
        format!("{}/{}", b.numer(), b.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse { pos: 0, msg: format!("bad rational `{s}`") };
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

pub fn in_unit(r: &BigRational) -> bool {
    !r.is_negative() && *r <= BigRational::one()
}
