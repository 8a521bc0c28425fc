//! Exact rational helpers for interval endpoints and certificates.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// Parses `"3"`, `"-0.05"`, `"1/20"` or `"2.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Config(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(joined.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Exact value of a finite `f64`.
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Config(format!("{x} is not finite")))
}

/// 2^{-k}
pub fn dyadic(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

pub fn ceil_to_u64(r: &BigRational) -> Option<u64> {
    r.ceil().to_integer().to_u64()
}

pub fn floor_to_u64(r: &BigRational) -> Option<u64> {
    if r.is_negative() {
        return Some(0);
    }
    r.floor().to_integer().to_u64()
}

/// Canonical `p/q` text (integers without the denominator).
pub fn format_rational(r: &BigRational) -> String {
    r.to_string()
}

pub(crate) mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_decimal_fraction_and_exponent_forms() {
        assert_eq!(parse_rational("-0.05").unwrap(), r(-1, 20));
        assert_eq!(parse_rational("1/20").unwrap(), r(1, 20));
        assert_eq!(parse_rational("1.01").unwrap(), r(101, 100));
        assert_eq!(parse_rational("2.5e-3").unwrap(), r(1, 400));
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert_eq!(parse_rational("1e2").unwrap(), r(100, 1));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(ceil_to_u64(&r(366025, 10000)), Some(37));
        assert_eq!(floor_to_u64(&r(442890, 10000)), Some(44));
        assert_eq!(floor_to_u64(&r(-1, 2)), Some(0));
        assert_eq!(dyadic(3), r(1, 8));
    }
}
