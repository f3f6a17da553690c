//! Exact rational arithmetic helpers built on [`num::BigRational`].

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational used for every exact computation.
pub type Rational = num::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a rational number")]
pub struct ParseRationalError {
    pub input: String,
}

/// Builds `num/den` from machine integers. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `base^exp` for a possibly negative exponent.
pub fn pow(base: &Rational, exp: i32) -> Rational {
    if exp >= 0 {
        num::pow(base.clone(), exp as usize)
    } else {
        num::pow(base.recip(), exp.unsigned_abs() as usize)
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"` or `"1e-3"`.
///
/// Decimals are read exactly from their text, so `"0.1"` is `1/10`.
pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: text.to_string(),
    };
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(s).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{whole}{frac}");
    let mut value = Rational::from_integer(BigInt::from_str(&joined).ok()?);
    let scale = exponent - frac.len() as i32;
    value *= pow(&int(10), scale);
    Some(if negative { -value } else { value })
}

/// Exact conversion of a finite `f64` through its shortest decimal rendering.
pub fn from_f64_decimal(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    parse_decimal(&format!("{x:e}"))
}

/// Renders as `"p/q"`, or `"p"` for integers.
pub fn format(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn floor_to_u64(value: &Rational) -> u64 {
    value.floor().to_integer().to_u64().unwrap_or(0)
}

pub fn ceil_to_u64(value: &Rational) -> u64 {
    value.ceil().to_integer().to_u64().unwrap_or(0)
}

pub fn is_unit_interval(value: &Rational) -> bool {
    !value.is_negative() && *value <= Rational::one()
}

/// Display wrapper printing `"p/q (≈float)"`.
pub struct Exact<'a>(pub &'a Rational);

impl fmt::Display for Exact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{:.12})", format(self.0), to_f64(self.0))
    }
}

/// `#[serde(with = "crate::rational::serde_string")]` for a single rational.
pub mod serde_string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        format(value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Same as [`serde_string`] for `Vec<Rational>`.
pub mod serde_string_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse(" -6/8 ").unwrap(), ratio(-3, 4));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse("2.5E2").unwrap(), int(250));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/0", "abc", "1/x", "--1", "1..2", "."] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn float_conversion_uses_decimal_text() {
        assert_eq!(from_f64_decimal(0.1).unwrap(), ratio(1, 10));
        assert_eq!(from_f64_decimal(0.6).unwrap(), ratio(3, 5));
        assert!(from_f64_decimal(f64::NAN).is_none());
    }

    #[test]
    fn formats_round_trip() {
        for v in [ratio(3, 4), int(-2), ratio(1, 1_000_000_007)] {
            assert_eq!(parse(&format(&v)).unwrap(), v);
        }
    }

    #[test]
    fn negative_powers() {
        assert_eq!(pow(&int(10), -3), ratio(1, 1000));
        assert_eq!(pow(&ratio(2, 3), 2), ratio(4, 9));
    }
}
