//! Exact rational helpers shared by every module that touches probabilities.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn qi(value: i64) -> Q {
    Q::from_integer(BigInt::from(value))
}

pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Smallest integer `>= value`, for nonnegative values.
pub fn ceil_usize(value: &Q) -> usize {
    value
        .ceil()
        .to_integer()
        .to_usize()
        .expect("ceil of a nonnegative rational fits in usize")
}

pub fn is_unit_interval(value: &Q) -> bool {
    !value.is_negative() && *value <= Q::one()
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Q>) -> Q {
    values.into_iter().fold(Q::zero(), |acc, v| acc + v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot parse {:?} as an exact rational", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

/// Parses `"p/q"`, integers and plain decimals (`"0.125"`, `"-2.5"`) exactly.
pub fn parse_rational(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(num, den));
    }
    let (negative, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let all_digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(err());
    }
    let joined = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
    let numer: BigInt = joined.parse().map_err(|_| err())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = Q::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Canonical `"p/q"` (or `"p"` for integers) rendering.
pub fn fmt_q(value: &Q) -> String {
    value.to_string()
}
