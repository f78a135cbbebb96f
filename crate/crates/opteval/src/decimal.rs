//! Exact base-10 decimals for the formulation IR.
//!
//! Values are stored as `mantissa * 10^-scale` so that parsing and emitting
//! are bit-exact round trips. Arithmetic modules convert to `f64` at the
//! boundary; the IR itself never touches binary floating point.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A base-10 scaled integer: `mantissa * 10^-scale`, kept normalized
/// (no trailing zero digits in the fraction, `-0` collapsed to `0`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Decimal {
    mantissa: i64,
    scale: u8,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecimalError {
    #[error("invalid decimal literal `{0}`")]
    Invalid(String),
    #[error("decimal overflow in `{0}`")]
    Overflow(String),
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { mantissa: 0, scale: 0 };
    pub const ONE: Decimal = Decimal { mantissa: 1, scale: 0 };

    pub fn from_int(v: i64) -> Decimal {
        Decimal { mantissa: v, scale: 0 }
    }

    /// Builds `mantissa * 10^-scale` and normalizes.
    pub fn new(mantissa: i64, scale: u8) -> Decimal {
        let mut d = Decimal { mantissa, scale };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        while self.scale > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.scale -= 1;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    fn widened(&self, scale: u8) -> Option<i128> {
        let extra = (scale - self.scale) as u32;
        (self.mantissa as i128).checked_mul(10i128.checked_pow(extra)?)
    }

    fn from_wide(mantissa: i128, scale: u8) -> Result<Decimal, DecimalError> {
        let mut m = mantissa;
        let mut s = scale;
        while s > 0 && m % 10 == 0 {
            m /= 10;
            s -= 1;
        }
        let m64 = i64::try_from(m).map_err(|_| DecimalError::Overflow(format!("{m}e-{s}")))?;
        Ok(Decimal { mantissa: m64, scale: s })
    }

    pub fn checked_add(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let scale = self.scale.max(other.scale);
        let a = self.widened(scale).ok_or_else(|| DecimalError::Overflow(self.to_string()))?;
        let b = other.widened(scale).ok_or_else(|| DecimalError::Overflow(other.to_string()))?;
        Decimal::from_wide(a + b, scale)
    }

    pub fn checked_sub(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let scale = self
            .scale
            .checked_add(other.scale)
            .ok_or_else(|| DecimalError::Overflow(self.to_string()))?;
        let m = (self.mantissa as i128) * (other.mantissa as i128);
        Decimal::from_wide(m, scale)
    }

    pub fn neg(&self) -> Decimal {
        Decimal { mantissa: -self.mantissa, scale: self.scale }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        match (self.widened(scale), other.widened(scale)) {
            (Some(a), Some(b)) => a.cmp(&b),
            // Overflow during comparison cannot occur for values that were
            // constructible in the first place, but fall back to f64 order.
            _ => self.to_f64().partial_cmp(&other.to_f64()).unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let pow = 10u64.pow(self.scale as u32);
        let int = abs / pow;
        let frac = abs % pow;
        write!(f, "{sign}{int}.{frac:0width$}", width = self.scale as usize)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DecimalError::Invalid(s.to_string());
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        if body.is_empty() {
            return Err(err());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac_part.len() > 18 {
            return Err(DecimalError::Overflow(s.to_string()));
        }
        let digits: String = format!("{int_part}{frac_part}");
        let mantissa: i64 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| DecimalError::Overflow(s.to_string()))?
        };
        let mantissa = if neg { -mantissa } else { mantissa };
        Ok(Decimal::new(mantissa, frac_part.len() as u8))
    }
}

impl From<Decimal> for String {
    fn from(d: Decimal) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for Decimal {
    type Error = DecimalError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_display_round_trip() {
        for s in ["0", "50", "-3", "2.5", "-0.125", "10.33", "1.5", "220"] {
            let d: Decimal = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
    }

    #[test]
    fn normalization_strips_trailing_zeros() {
        let d: Decimal = "2.500".parse().unwrap();
        assert_eq!(d.to_string(), "2.5");
        assert_eq!(d, "2.5".parse().unwrap());
        let z: Decimal = "-0.0".parse().unwrap();
        assert_eq!(z, Decimal::ZERO);
    }

    #[test]
    fn arithmetic() {
        let a: Decimal = "2.5".parse().unwrap();
        let b: Decimal = "0.75".parse().unwrap();
        assert_eq!(a.checked_add(&b).unwrap().to_string(), "3.25");
        assert_eq!(a.checked_sub(&b).unwrap().to_string(), "1.75");
        assert_eq!(a.checked_mul(&b).unwrap().to_string(), "1.875");
        assert_eq!(a.neg().to_string(), "-2.5");
    }

    #[test]
    fn ordering() {
        let a: Decimal = "1.5".parse().unwrap();
        let b: Decimal = "1.25".parse().unwrap();
        assert!(a > b);
        assert!(b < a);
        assert!(Decimal::ZERO < a);
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<Decimal>().is_err());
        assert!("1.2.3".parse::<Decimal>().is_err());
        assert!("abc".parse::<Decimal>().is_err());
        assert!(".".parse::<Decimal>().is_err());
    }
}
