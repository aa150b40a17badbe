//! Exact rational helpers for threshold evaluation.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

pub fn q(num: i64, den: i64) -> Q {
    Ratio::new(num, den)
}

pub fn qi(v: i64) -> Q {
    Ratio::from_integer(v)
}

pub fn qu(v: usize) -> Q {
    Ratio::from_integer(v as i64)
}

pub fn floor(x: Q) -> i64 {
    x.floor().to_integer()
}

pub fn ceil(x: Q) -> i64 {
    x.ceil().to_integer()
}

/// Largest integer `k >= 0` with `k^2 <= x`; zero for negative `x`.
pub fn floor_sqrt(x: Q) -> i64 {
    if x.is_negative() || x.is_zero() {
        return 0;
    }
    let (num, den) = (*x.numer() as i128, *x.denom() as i128);
    let approx = (num as f64 / den as f64).sqrt().floor() as i128;
    let mut k = approx.max(0);
    while k * k * den > num {
        k -= 1;
    }
    while (k + 1) * (k + 1) * den <= num {
        k += 1;
    }
    k as i64
}

/// `floor(sqrt(eps) * n)`, computed as `floor(sqrt(eps * n^2))`.
pub fn floor_sqrt_eps_n(eps: Q, n: usize) -> i64 {
    floor_sqrt(eps * qi((n * n) as i64))
}

/// Parse a decimal literal ("0.125", "3", "-1.5e-2") into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Q> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let num: i64 = a.trim().parse().map_err(|_| bad_rational(text))?;
        let den: i64 = b.trim().parse().map_err(|_| bad_rational(text))?;
        if den == 0 {
            return Err(bad_rational(text));
        }
        return Ok(q(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| bad_rational(text))?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad_rational(text));
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad_rational(text));
    }
    let mut num: i64 = digits.parse().map_err(|_| bad_rational(text))?;
    let mut den: i64 = 1;
    let shift = exponent - frac_part.len() as i32;
    if shift >= 0 {
        num = num
            .checked_mul(10i64.checked_pow(shift as u32).ok_or_else(|| bad_rational(text))?)
            .ok_or_else(|| bad_rational(text))?;
    } else {
        den = 10i64
            .checked_pow((-shift) as u32)
            .ok_or_else(|| bad_rational(text))?;
    }
    if negative {
        num = -num;
    }
    Ok(q(num, den))
}

/// Exact rational for a JSON float, going through its shortest decimal form.
pub fn from_f64(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::Input(format!("non-finite number {x}")));
    }
    parse_decimal(&format!("{x}"))
}

pub fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn bad_rational(text: &str) -> Error {
    Error::Input(format!("cannot parse {text:?} as an exact rational"))
}

/// Serde adapter: rationals are written as JSON floats and read from
/// either a float, an integer or a "p/q" string.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_integer() {
            s.serialize_i64(x.to_integer())
        } else {
            s.serialize_f64(to_f64(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        from_value(&value).map_err(serde::de::Error::custom)
    }

    pub fn from_value(value: &serde_json::Value) -> Result<Q> {
        match value {
            serde_json::Value::Number(num) => {
                if let Some(i) = num.as_i64() {
                    Ok(qi(i))
                } else {
                    parse_decimal(&num.to_string())
                }
            }
            serde_json::Value::String(s) => parse_decimal(s),
            other => Err(Error::Input(format!("expected a number, got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_decimal("2.50").unwrap(), q(5, 2));
        assert_eq!(parse_decimal("-3").unwrap(), qi(-3));
        assert_eq!(parse_decimal("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_decimal("3/9").unwrap(), q(1, 3));
        assert_eq!(from_f64(0.05).unwrap(), q(1, 20));
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("1/0").is_err());
    }

    #[test]
    fn floor_sqrt_matches_search() {
        for num in 0..400i64 {
            for den in 1..7i64 {
                let x = q(num, den);
                let k = floor_sqrt(x);
                assert!(qi(k * k) <= x);
                assert!(qi((k + 1) * (k + 1)) > x);
            }
        }
        // sqrt(1/100) * 200 = 20 exactly
        assert_eq!(floor_sqrt_eps_n(q(1, 100), 200), 20);
        assert_eq!(floor_sqrt_eps_n(q(1, 10), 2000), 632);
    }
}
