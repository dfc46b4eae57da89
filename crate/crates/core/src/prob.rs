//! Scalars that remember whether they were written as exact fractions.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A real value with an optional exact rational form.
///
/// Values parsed from `"p/q"` strings (or integers) keep the rational; values
/// parsed from decimal floats do not. Arithmetic on two exact values stays
/// exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    value: f64,
    exact: Option<BigRational>,
}

impl Scalar {
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn from_ratio(exact: BigRational) -> Self {
        Self {
            value: ratio_to_f64(&exact),
            exact: Some(exact),
        }
    }

    pub fn new_ratio(numer: i64, denom: i64) -> Self {
        Self::from_ratio(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn one() -> Self {
        Self::from_ratio(BigRational::one())
    }

    pub fn zero() -> Self {
        Self::from_ratio(BigRational::zero())
    }

    /// Parses `"p/q"`, an integer, or a decimal literal.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse `{text}` as a number"));
        if let Some((n, d)) = text.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Self::from_ratio(BigRational::new(n, d)));
        }
        if let Ok(i) = text.parse::<BigInt>() {
            return Ok(Self::from_ratio(BigRational::from_integer(i)));
        }
        let v: f64 = text.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Ok(Self::from_f64(v))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Scalar::from_ratio(a * b),
            _ => Scalar::from_f64(self.value * other.value),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Scalar::from_ratio(a + b),
            _ => Scalar::from_f64(self.value + other.value),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.value == 0.0,
        }
    }

    /// Textual form used in JSON output: `"p/q"` when exact, otherwise `None`
    /// (callers emit the float as a JSON number).
    pub fn exact_text(&self) -> Option<String> {
        self.exact.as_ref().map(|r| {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        })
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_text() {
            Some(t) => write!(f, "{t}"),
            None => write!(f, "{}", self.value),
        }
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 9.0e15 && d < 9.0e15 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trips() {
        let third = Scalar::parse("1/3").unwrap();
        assert_eq!(third.exact_text().as_deref(), Some("1/3"));
        assert_eq!(third.exact().unwrap(), &BigRational::new(1.into(), 3.into()));
        assert!((third.value() - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(Scalar::parse("2/4").unwrap().exact_text().as_deref(), Some("1/2"));
        assert_eq!(Scalar::parse("1").unwrap().exact_text().as_deref(), Some("1"));
    }

    #[test]
    fn decimals_are_inexact() {
        let s = Scalar::parse("0.3333").unwrap();
        assert!(s.exact().is_none());
        assert_eq!(s.value(), 0.3333);
        assert!(Scalar::parse("1/0").is_err());
        assert!(Scalar::parse("abc").is_err());
    }

    #[test]
    fn exactness_is_contagious_only_when_both_exact() {
        let a = Scalar::new_ratio(1, 3);
        let b = Scalar::new_ratio(2, 3);
        assert_eq!(a.add(&b).exact_text().as_deref(), Some("1"));
        assert!(a.mul(&Scalar::from_f64(0.5)).exact().is_none());
    }
}
