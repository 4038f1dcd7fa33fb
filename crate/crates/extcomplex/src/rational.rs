//! Exact rational scalars shared across the crate.
//!
//! Rationals are arbitrary-precision, always in lowest terms with a positive
//! denominator (the representation `num_rational` maintains). They serialize
//! as strings, either `"p"` or `"p/q"`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// `n/d` as a rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer constant as a rational.
pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rzero() -> Rational {
    Rational::zero()
}

pub fn rone() -> Rational {
    Rational::one()
}

/// Parses `"p"` or `"p/q"` with decimal integers. The denominator must be
/// nonzero; sign may sit on either component.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::BadRational(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Formats in the same shape `parse_rational` accepts.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest-double conversion. Values far outside the double range saturate.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite double into a rational (every finite double
/// is a dyadic rational).
pub fn from_f64_exact(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::BadRational(format!("{x}")))
}

/// Best rational approximation to `x` with denominator at most `max_den`,
/// via continued fractions. Used to snap floating-point search results onto
/// nearby simple rationals before exact re-verification.
pub fn snap_to_rational(x: f64, max_den: u64) -> Rational {
    if !x.is_finite() {
        return rzero();
    }
    let exact = Rational::from_float(x).unwrap_or_else(Rational::zero);
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (exact.floor().to_integer(), BigInt::from(1));
    let mut frac = &exact - Rational::from_integer(p1.clone());
    let cap = BigInt::from(max_den);
    while !frac.is_zero() {
        let inv = frac.recip();
        let a = inv.floor().to_integer();
        frac = &inv - Rational::from_integer(a.clone());
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > cap {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    Rational::new(p1, q1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "-3", "1/2", "-7/3", "22/7"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
    }

    #[test]
    fn parse_reduces_to_lowest_terms() {
        let r = parse_rational("6/4").unwrap();
        assert_eq!(format_rational(&r), "3/2");
        // negative denominators normalize onto the numerator
        let r = parse_rational("1/-2").unwrap();
        assert_eq!(format_rational(&r), "-1/2");
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "1/0", "a/2", "1.5", "1//2"] {
            assert!(parse_rational(s).is_err(), "{s:?} should fail");
        }
    }

    #[test]
    fn snap_recovers_simple_fractions() {
        assert_eq!(snap_to_rational(0.333333333333333, 100), rat(1, 3));
        assert_eq!(snap_to_rational(-1.0000000001, 1000), rint(-1));
        assert_eq!(snap_to_rational(0.5, 10), rat(1, 2));
    }

    #[test]
    fn f64_round_trips_exactly() {
        let r = from_f64_exact(0.1).unwrap();
        assert_eq!(to_f64(&r), 0.1);
    }
}
