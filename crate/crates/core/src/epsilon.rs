//! Exact rational accuracy parameter.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// ε = p/q with 0 < ε < 1/2, kept in lowest terms.
///
/// All "smaller than an ε fraction" comparisons go through integer
/// cross-multiplication in `u128`; nothing here touches floating point
/// except [`Epsilon::as_f64`], which exists for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Epsilon {
    p: u64,
    q: u64,
}

impl Epsilon {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::domain(format!("epsilon {p}/{q} must be positive")));
        }
        let g = p.gcd(&q);
        let (p, q) = (p / g, q / g);
        if 2 * (p as u128) >= q as u128 {
            return Err(Error::domain(format!(
                "epsilon {p}/{q} must be strictly below 1/2"
            )));
        }
        Ok(Epsilon { p, q })
    }

    pub fn numer(&self) -> u64 {
        self.p
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    pub fn as_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn as_ratio(&self) -> Ratio<i128> {
        Ratio::new(self.p as i128, self.q as i128)
    }

    /// `count < ε · total`.
    #[inline]
    pub fn below(&self, count: usize, total: usize) -> bool {
        (count as u128) * (self.q as u128) < (self.p as u128) * (total as u128)
    }

    /// `count ≥ ε · total`.
    #[inline]
    pub fn at_least(&self, count: usize, total: usize) -> bool {
        !self.below(count, total)
    }

    /// `count ≤ ε · total`.
    #[inline]
    pub fn at_most(&self, count: usize, total: usize) -> bool {
        (count as u128) * (self.q as u128) <= (self.p as u128) * (total as u128)
    }

    /// `count ≥ (1 − ε) · total`.
    #[inline]
    pub fn co_at_least(&self, count: usize, total: usize) -> bool {
        (count as u128) * (self.q as u128) >= ((self.q - self.p) as u128) * (total as u128)
    }

    /// `size ≥ ε^exponent · total`, exact.
    pub fn power_bound_holds(&self, size: usize, exponent: u32, total: usize) -> bool {
        let lhs = BigUint::from(size) * BigUint::from(self.q).pow(exponent);
        let rhs = BigUint::from(total) * BigUint::from(self.p).pow(exponent);
        lhs >= rhs
    }

    /// Largest mistake count `c` with `c < ε · len`, or `None` when even zero fails.
    pub fn max_below(&self, len: usize) -> Option<usize> {
        let bound = (self.p as u128) * (len as u128);
        if bound == 0 {
            return None;
        }
        Some(((bound - 1) / self.q as u128) as usize)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    /// Accepts only the `p/q` form.
    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::domain(format!("epsilon `{s}` must be written as p/q")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::domain(format!("epsilon `{s}` must be written as p/q")))
        };
        Epsilon::new(parse(p)?, parse(q)?)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
