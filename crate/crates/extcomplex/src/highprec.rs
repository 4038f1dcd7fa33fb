//! Thin high-precision floating-point context used by the bound formulas.
//!
//! The lower-bound expressions divide logarithms of potentially huge
//! integers, so they are evaluated in multi-precision floats rather than
//! f64. The working precision defaults to 80 bits and can be overridden
//! with the `EXTCOMPLEX_PRECISION` environment variable (value in bits).

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;

use crate::rational::Rational;
use crate::{Error, Result};

const DEFAULT_BITS: usize = 80;
const MIN_BITS: usize = 64;
const MAX_BITS: usize = 8192;

/// Reads the working precision from the environment, falling back to the
/// default and clamping unreasonable values.
pub fn env_precision_bits() -> usize {
    parse_precision(std::env::var("EXTCOMPLEX_PRECISION").ok().as_deref())
}

fn parse_precision(value: Option<&str>) -> usize {
    match value.and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(bits) => bits.clamp(MIN_BITS, MAX_BITS),
        None => DEFAULT_BITS,
    }
}

/// Evaluation context: precision, rounding mode, and the shared constants
/// cache the logarithm routines need.
pub struct Ctx {
    p: usize,
    rm: RoundingMode,
    consts: Consts,
}

impl Ctx {
    /// Context at the environment-configured precision.
    pub fn new() -> Self {
        Ctx::with_bits(env_precision_bits())
    }

    pub fn with_bits(bits: usize) -> Self {
        Ctx {
            p: bits.clamp(MIN_BITS, MAX_BITS),
            rm: RoundingMode::ToEven,
            consts: Consts::new().expect("constants cache allocation"),
        }
    }

    pub fn bits(&self) -> usize {
        self.p
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn from_u64(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.p)
    }

    pub fn from_biguint(&mut self, x: &BigUint) -> BigFloat {
        BigFloat::parse(&x.to_string(), Radix::Dec, self.p, self.rm, &mut self.consts)
    }

    pub fn from_rational(&mut self, x: &Rational) -> BigFloat {
        let numer = BigFloat::parse(
            &x.numer().to_string(),
            Radix::Dec,
            self.p,
            self.rm,
            &mut self.consts,
        );
        let denom = BigFloat::parse(
            &x.denom().to_string(),
            Radix::Dec,
            self.p,
            self.rm,
            &mut self.consts,
        );
        numer.div(&denom, self.p, self.rm)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, self.rm)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, self.rm)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, self.rm)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, self.rm)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.p, self.rm)
    }

    /// Fourth root via two square roots.
    pub fn root4(&self, a: &BigFloat) -> BigFloat {
        self.sqrt(&self.sqrt(a))
    }

    pub fn log2(&mut self, a: &BigFloat) -> BigFloat {
        a.log2(self.p, self.rm, &mut self.consts)
    }

    /// Decimal rendering used by the JSON writers.
    pub fn decimal_string(&mut self, a: &BigFloat) -> String {
        a.format(Radix::Dec, self.rm, &mut self.consts)
            .unwrap_or_else(|_| "NaN".into())
    }

    /// Nearest f64, via the decimal representation (the wrapper type has no
    /// direct conversion).
    pub fn to_f64(&mut self, a: &BigFloat) -> f64 {
        self.decimal_string(a).parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Smallest integer not below `a`, as u64. Errors when `a` is negative,
    /// not finite, or too large.
    pub fn ceil_u64(&mut self, a: &BigFloat) -> Result<u64> {
        let up = a.ceil();
        let value = self.to_f64(&up);
        if !value.is_finite() || value < 0.0 || value > 2e18 {
            return Err(Error::Malformed(format!(
                "ceiling out of range: {value}"
            )));
        }
        Ok(value.round() as u64)
    }
}

impl Default for Ctx {
    fn default() -> Self {
        Ctx::new()
    }
}
