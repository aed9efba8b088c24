//! Exact rational helpers shared by the combinatorial modules.
//!
//! Everything that decides membership in the critical set is done here
//! without floating point: rationals are `BigRational`, and comparisons
//! between a rational and a rational multiple of π use certified Machin
//! bounds that are refined until the answer is unambiguous.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a rational number")]
pub struct ParseRationalError {
    pub input: String,
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p"`, `"p/q"` or a plain decimal such as `"-1.25"` exactly.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !digits_ok(whole_digits) || !digits_ok(frac) || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(err());
        }
        let mantissa: BigInt = format!("{whole_digits}{frac}").parse().unwrap_or_default();
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    let p: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(p))
}

/// Renders `p/q`, or just `p` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

/// A lower and upper rational bound on π.
fn pi_bounds(terms: usize) -> (Rational, Rational) {
    // Machin: π = 16 atan(1/5) − 4 atan(1/239). The alternating series for
    // atan(1/x) brackets the limit between consecutive partial sums.
    fn atan_inv_bounds(x: i64, terms: usize) -> (Rational, Rational) {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut power = x.clone();
        let mut sum = Rational::zero();
        let mut prev = Rational::zero();
        for k in 0..=terms {
            prev = sum.clone();
            let term = Rational::new(BigInt::one(), BigInt::from(2 * k + 1) * &power);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            power *= &x2;
        }
        if sum < prev {
            (sum, prev)
        } else {
            (prev, sum)
        }
    }
    let (lo5, hi5) = atan_inv_bounds(5, terms);
    let (lo239, hi239) = atan_inv_bounds(239, terms);
    let lo = int(16) * lo5 - int(4) * &hi239;
    let hi = int(16) * hi5 - int(4) * &lo239;
    (lo, hi)
}

/// Decides `value` against `coeff · π` exactly, for `coeff ≠ 0`.
///
/// π is irrational, so for nonzero `coeff` the answer is never `Equal`
/// unless both sides vanish.
pub fn cmp_with_pi_multiple(value: &Rational, coeff: &Rational) -> Ordering {
    if coeff.is_zero() {
        return value.cmp(&Rational::zero());
    }
    let mut terms = 12;
    loop {
        let (lo, hi) = pi_bounds(terms);
        let (a, b) = if coeff.is_positive() {
            (coeff * &lo, coeff * &hi)
        } else {
            (coeff * &hi, coeff * &lo)
        };
        if *value < a {
            return Ordering::Less;
        }
        if *value > b {
            return Ordering::Greater;
        }
        terms *= 2;
    }
}

/// Wrapper that displays a rational as `p/q`.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}
