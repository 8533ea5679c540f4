//! Scalar abstraction for edge weights, distances, radii and charges.
//!
//! Every algorithm in the crate is written against [`Scalar`]. The exact
//! instantiation ([`BigRational`]) is the one the certificates are meant to
//! be checked with; `f64` and [`Rational64`] are provided for fast exploratory
//! runs where the instance magnitudes allow it.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// The exact value of `self`.
    fn to_rational(&self) -> BigRational;

    /// Closest representable value to `r`.
    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    fn from_u64(n: u64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn from_frac(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }

    /// `2^e`.
    fn pow2(e: i64) -> Self {
        Self::from_rational(&pow2(e))
    }

    /// `⌊log₂ self⌋` for a strictly positive value.
    fn floor_log2(&self) -> i64 {
        floor_log2(&self.to_rational())
    }

    fn is_exact() -> bool {
        true
    }
}

impl Scalar for BigRational {
    fn to_rational(&self) -> BigRational {
        self.clone()
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for Rational64 {
    fn to_rational(&self) -> BigRational {
        BigRational::new((*self.numer()).into(), (*self.denom()).into())
    }
    /// Panics if `r` does not fit in 64-bit numerator/denominator.
    fn from_rational(r: &BigRational) -> Self {
        let n = r.numer().to_i64().expect("numerator overflows i64");
        let d = r.denom().to_i64().expect("denominator overflows i64");
        Rational64::new(n, d)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for f64 {
    fn to_rational(&self) -> BigRational {
        BigRational::from_float(*self).expect("non-finite f64 weight")
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_exact() -> bool {
        false
    }
}

/// Exact `2^e` for any integer exponent.
pub fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Exact `⌊log₂ r⌋`; `r` must be strictly positive.
pub fn floor_log2(r: &BigRational) -> i64 {
    assert!(r.is_positive(), "floor_log2 of a non-positive value");
    let n = r.numer();
    let d = r.denom();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // n / d >= 2^e  <=>  n >= d * 2^e
    let ge = |e: i64| -> bool {
        if e >= 0 {
            n >= &(d << (e as u64))
        } else {
            (n << ((-e) as u64)) >= *d
        }
    };
    if !ge(e) {
        e -= 1;
    }
    debug_assert!(ge(e) && !ge(e + 1));
    e
}

/// Whether `r` is an exact (possibly negative) power of two.
pub fn is_power_of_two(r: &BigRational) -> bool {
    r.is_positive() && pow2(floor_log2(r)) == *r
}

/// `lg⁺(x) = max(1, ⌈log₂ x⌉)`, the integer logarithm used by every
/// threshold formula in the crate.
pub fn lg_plus(x: u64) -> u64 {
    if x <= 2 {
        1
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// `lg⁺` of a rational argument (used for contraction bounds).
pub fn lg_plus_rational(x: &BigRational) -> u64 {
    if *x <= BigRational::from_integer(2.into()) {
        return 1;
    }
    let f = floor_log2(x);
    let c = if is_power_of_two(x) { f } else { f + 1 };
    c.max(1) as u64
}

/// Render a rational as the reduced `"num/den"` text used by every file format.
pub fn format_fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `"num/den"` (or a bare integer). Unreduced fractions and zero
/// denominators are rejected so that text round-trips bit-exactly.
pub fn parse_fraction(s: &str) -> Result<BigRational> {
    let bad = |why: &str| Error::Parse(format!("fraction {s:?}: {why}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
    let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
    if !d.is_positive() {
        return Err(bad("denominator must be positive"));
    }
    if !n.gcd(&d).is_one() {
        return Err(bad("not reduced"));
    }
    Ok(BigRational::new_raw(n, d))
}

pub fn format_scalar<W: Scalar>(w: &W) -> String {
    format_fraction(&w.to_rational())
}

pub fn parse_scalar<W: Scalar>(s: &str) -> Result<W> {
    parse_fraction(s).map(|r| W::from_rational(&r))
}

/// A value in `[0, ∞]`, used for contractions.
#[derive(Debug, Clone, PartialEq)]
pub enum Extended<W> {
    Finite(W),
    Infinite,
}

impl<W: Scalar> Extended<W> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<&W> {
        match self {
            Extended::Finite(w) => Some(w),
            Extended::Infinite => None,
        }
    }

    /// `self < bound`, with `∞ < b` false and `f < ∞` true.
    pub fn lt(&self, bound: &Extended<W>) -> bool {
        match (self, bound) {
            (Extended::Infinite, _) => false,
            (Extended::Finite(_), Extended::Infinite) => true,
            (Extended::Finite(a), Extended::Finite(b)) => a < b,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Extended::Finite(w) => format_scalar(w),
            Extended::Infinite => "inf".to_string(),
        }
    }

    pub fn from_text(s: &str) -> Result<Self> {
        if s == "inf" {
            Ok(Extended::Infinite)
        } else {
            parse_scalar(s).map(Extended::Finite)
        }
    }
}

/// Ratio `num / den` as an extended value (`∞` when `den` is zero).
pub fn ratio_or_infinite<W: Scalar>(num: &W, den: &W) -> Extended<W> {
    if den.is_zero() {
        Extended::Infinite
    } else {
        Extended::Finite(num.clone() / den.clone())
    }
}

/// Sum of a sequence of scalars.
pub fn sum<'a, W: Scalar, I: IntoIterator<Item = &'a W>>(it: I) -> W {
    it.into_iter().fold(W::zero(), |acc, w| acc + w.clone())
}

/// Rigorous bounds `lo ≤ e^x ≤ hi` for a nonnegative rational `x`,
/// computed in fixed point with `prec` fractional bits and directed rounding.
pub fn exp_bounds(x: &BigRational, prec: u32) -> (BigRational, BigRational) {
    assert!(!x.is_negative(), "exp_bounds expects x >= 0");
    let scale = BigInt::one() << prec;
    // halve until y <= 1/2
    let mut s = 0u32;
    let half = BigRational::new(1.into(), 2.into());
    let mut y = x.clone();
    while y > half {
        y /= BigRational::from_integer(2.into());
        s += 1;
    }
    let (yn, yd) = (y.numer().clone(), y.denom().clone());
    let taylor = |round_up: bool| -> BigInt {
        let mut total = scale.clone();
        let mut term = scale.clone();
        let mut n = 1u64;
        loop {
            let num = &term * &yn;
            let den = &yd * BigInt::from(n);
            term = if round_up { ceil_div(&num, &den) } else { num.div_floor(&den) };
            if term.is_zero() {
                break;
            }
            total += &term;
            n += 1;
            if !round_up && term <= BigInt::one() {
                break;
            }
            if round_up && term <= BigInt::one() {
                // remainder after this term is at most 2 * next term <= 2 ulp
                total += BigInt::from(2);
                break;
            }
        }
        total
    };
    let mut lo = taylor(false);
    let mut hi = taylor(true);
    for _ in 0..s {
        lo = (&lo * &lo).div_floor(&scale);
        hi = ceil_div(&(&hi * &hi), &scale);
    }
    (
        BigRational::new(lo, scale.clone()),
        BigRational::new(hi, scale),
    )
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}
