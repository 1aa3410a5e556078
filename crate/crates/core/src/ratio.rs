//! Exact rational helpers and the `"p/q"` text form used in every export.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn ratio(numer: u128, denom: u128) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// `1 / (k * n)`.
pub fn reciprocal(k: u128, n: usize) -> BigRational {
    ratio(1, k * n as u128)
}

/// Always `numer/denom` in lowest terms, including integers (`"1/1"`).
pub fn to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(text: &str) -> Result<BigRational> {
    let bad = || Error::Malformed(format!("not a rational: {text:?}"));
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Decimal approximation for display and float comparisons.
pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// A rational `p/q` with `p/q <= log2(s)`, tight to within `1/q`.
///
/// `p` is the largest integer with `2^p <= s^q`, so the result is a rigorous
/// lower bound usable in exact comparisons against irrational logarithms.
pub fn log2_lower_bound(s: u64, q: u32) -> BigRational {
    assert!(s >= 1 && q >= 1);
    let power = BigUint::from(s).pow(q);
    let p = power.bits() - 1;
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// True iff `x <= 2^e` for a rational exponent `e = a/b`, checked exactly as
/// `x^b <= 2^a` (for `x >= 0`, `b > 0`).
pub fn le_pow2(x: &BigRational, a: i64, b: u32) -> bool {
    assert!(b > 0 && !x.is_negative());
    let xb = x.pow(b as i32);
    let rhs = if a >= 0 {
        BigRational::from_integer(BigInt::one() << a as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-a) as usize)
    };
    xb <= rhs
}

/// Largest integer `s >= 1` with `s^b < 2^a`, i.e. the largest size strictly
/// below the threshold `2^(a/b)`; `0` when even `1` fails (`a <= 0`).
pub fn largest_below_pow2(a: u64, b: u32) -> u64 {
    let bound = BigUint::one() << a as usize;
    let fits = |s: u64| BigUint::from(s).pow(b) < bound;
    if !fits(1) {
        return 0;
    }
    let (mut lo, mut hi) = (1u64, 2u64);
    while fits(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// True iff `x <= c · log2(s)` for `x >= 0`, `s >= 1`, checked exactly as
/// `2^p <= s^(c·q)` where `x = p/q`.
pub fn le_log2_multiple(x: &BigRational, c: u32, s: u64) -> bool {
    use num_traits::ToPrimitive;
    assert!(!x.is_negative() && s >= 1);
    let p = x.numer().to_usize().expect("small numerator");
    let q = x.denom().to_u32().expect("small denominator");
    let lhs = BigUint::one() << p;
    lhs <= BigUint::from(s).pow(c * q)
}

pub mod serde_ratio {
    //! `#[serde(with = "...")]` adapter writing rationals as `"p/q"`.
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}
