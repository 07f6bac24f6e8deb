//! Exact rational arithmetic helpers.
//!
//! Probabilities, loss values, and every quantity a test calls "exact" are
//! `BigRational`s. Values constructed from integer weights stay exact;
//! values constructed from floats are converted through the float's exact
//! dyadic expansion and normalized once, and remain exact afterwards.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Rational from an integer pair.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_usize(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_zero() -> Q {
    Q::zero()
}

pub fn q_one() -> Q {
    Q::one()
}

/// Exact rational value of a finite float (floats are dyadic rationals).
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Input(format!("non-finite value {x}")))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses "3", "-1/4", and decimal literals like "0.25" exactly.
pub fn q_parse(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("bad rational {s:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("bad rational {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| Error::Input(format!("bad decimal {s:?}")))?
        };
        let digits = frac.len() as u32;
        let frac_num: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse()
                .map_err(|_| Error::Input(format!("bad decimal {s:?}")))?
        };
        let scale = BigInt::from(10u32).pow(digits);
        let mag = int.abs() * &scale + frac_num;
        let signed = if neg { -mag } else { mag };
        return Ok(Q::new(signed, scale));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Input(format!("bad integer {s:?}")))?;
    Ok(Q::from_integer(n))
}

/// Renders a rational as `num/den` (or `num` when integral); inverse of `q_parse`.
pub fn q_display(x: &Q) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `base^exp` as an exact rational.
pub fn q_pow(base: &Q, exp: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(q_parse("3").unwrap(), q_int(3));
        assert_eq!(q_parse("-1/4").unwrap(), q(-1, 4));
        assert_eq!(q_parse("0.25").unwrap(), q(1, 4));
        assert_eq!(q_parse("-0.125").unwrap(), q(-1, 8));
        assert_eq!(q_parse("10.50").unwrap(), q(21, 2));
        assert!(q_parse("1/0").is_err());
    }

    #[test]
    fn display_round_trips() {
        for v in [q(3, 7), q_int(-2), q(22, 4)] {
            assert_eq!(q_parse(&q_display(&v)).unwrap(), v);
        }
    }

    #[test]
    fn float_conversion_is_exact_dyadic() {
        assert_eq!(q_from_f64(0.5).unwrap(), q(1, 2));
        assert_eq!(q_from_f64(0.375).unwrap(), q(3, 8));
        assert!(q_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 0), BigInt::from(1));
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(binomial(5, 3), BigInt::from(10));
        assert_eq!(binomial(3, 5), BigInt::from(0));
    }
}
