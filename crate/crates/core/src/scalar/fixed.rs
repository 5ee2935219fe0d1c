use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::rational::ln_abs_bigint;
use super::{Field, RealField, Ring, ScalarError};

/// A fixed-point number `mantissa · 2^(-frac_bits)` with an arbitrary-precision
/// mantissa. Operands of one expression must share `frac_bits`; mixing
/// precisions panics.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    pub mantissa: BigInt,
    pub frac_bits: u32,
}

/// `round(num / den)` with ties to even. `den` must be positive.
fn div_round_half_even(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    let (q, r) = num.div_mod_floor(den);
    let twice = &r << 1u32;
    match twice.cmp(den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_odd() {
                q + 1
            } else {
                q
            }
        }
    }
}

/// Rounds an exact rational to `frac_bits` fractional bits, ties to even.
pub fn fx_round(x: &BigRational, frac_bits: u32) -> FixedPoint {
    let scaled = x.numer() << frac_bits;
    FixedPoint {
        mantissa: div_round_half_even(&scaled, x.denom()),
        frac_bits,
    }
}

impl FixedPoint {
    pub fn zero(frac_bits: u32) -> Self {
        FixedPoint {
            mantissa: BigInt::zero(),
            frac_bits,
        }
    }

    pub fn from_int(v: i64, frac_bits: u32) -> Self {
        FixedPoint {
            mantissa: BigInt::from(v) << frac_bits,
            frac_bits,
        }
    }

    pub fn from_mantissa(mantissa: impl Into<BigInt>, frac_bits: u32) -> Self {
        FixedPoint {
            mantissa: mantissa.into(),
            frac_bits,
        }
    }

    /// Parses `"1.25"`, `"-3"`, `"2.5e-3"` or hex floats like `"0x1.4p0"`,
    /// rounding to `frac_bits`.
    pub fn parse(text: &str, frac_bits: u32) -> Result<Self, ScalarError> {
        Ok(fx_round(&parse_exact(text)?, frac_bits))
    }

    fn check_bits(&self, other: &Self) {
        assert_eq!(
            self.frac_bits, other.frac_bits,
            "mixed fixed-point precisions in one expression"
        );
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), BigInt::one() << self.frac_bits)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_bits(other);
        FixedPoint {
            mantissa: &self.mantissa + &other.mantissa,
            frac_bits: self.frac_bits,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_bits(other);
        FixedPoint {
            mantissa: &self.mantissa - &other.mantissa,
            frac_bits: self.frac_bits,
        }
    }

    /// Exact product rounded back to `frac_bits`.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_bits(other);
        let prod = &self.mantissa * &other.mantissa;
        let den = BigInt::one() << self.frac_bits;
        FixedPoint {
            mantissa: div_round_half_even(&prod, &den),
            frac_bits: self.frac_bits,
        }
    }

    /// Quotient rounded to nearest; additive error at most `2^(-frac_bits-1)`.
    pub fn div(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_bits(other);
        if other.mantissa.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let mut num = &self.mantissa << self.frac_bits;
        let mut den = other.mantissa.clone();
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        Ok(FixedPoint {
            mantissa: div_round_half_even(&num, &den),
            frac_bits: self.frac_bits,
        })
    }

    pub fn neg(&self) -> Self {
        FixedPoint {
            mantissa: -&self.mantissa,
            frac_bits: self.frac_bits,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        if bits == 0 {
            return 0.0;
        }
        let shift = bits.saturating_sub(60);
        let top = (&self.mantissa >> shift).to_f64().expect("at most 61 bits");
        let exp = shift as i64 - self.frac_bits as i64;
        top * 2f64.powi(exp.clamp(-2000, 2000) as i32)
    }
}

/// Parses a decimal or hex-float literal to an exact rational.
fn parse_exact(text: &str) -> Result<BigRational, ScalarError> {
    let err = || ScalarError::Parse(text.to_string());
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        let (mant, exp) = match hex.find(['p', 'P']) {
            Some(pos) => (
                &hex[..pos],
                hex[pos + 1..].parse::<i64>().map_err(|_| err())?,
            ),
            None => (hex, 0),
        };
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let m = BigInt::parse_bytes(digits.as_bytes(), 16).ok_or_else(err)?;
        let e2 = exp - 4 * frac_part.len() as i64;
        pow2_scale(m, e2)
    } else {
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(pos) => (
                &body[..pos],
                body[pos + 1..].parse::<i64>().map_err(|_| err())?,
            ),
            None => (body, 0),
        };
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let m = BigInt::from_str(&digits).map_err(|_| err())?;
        let e10 = exp - frac_part.len() as i64;
        let p = num_traits::pow(BigInt::from(10), e10.unsigned_abs() as usize);
        if e10 >= 0 {
            BigRational::from_integer(m * p)
        } else {
            BigRational::new(m, p)
        }
    };
    Ok(if neg { -value } else { value })
}

fn pow2_scale(m: BigInt, e2: i64) -> BigRational {
    if e2 >= 0 {
        BigRational::from_integer(m << e2 as u64)
    } else {
        BigRational::new(m, BigInt::one() << e2.unsigned_abs())
    }
}

impl fmt::Display for FixedPoint {
    /// Exact decimal expansion (always terminates for dyadic values).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.mantissa.is_negative();
        let m = self.mantissa.abs();
        let b = self.frac_bits;
        let int_part = &m >> b;
        let frac = &m - (&int_part << b);
        if neg {
            write!(f, "-")?;
        }
        write!(f, "{int_part}")?;
        if !frac.is_zero() {
            // frac / 2^b = frac * 5^b / 10^b
            let digits = (frac * num_traits::pow(BigInt::from(5), b as usize)).to_string();
            let padded = format!("{:0>width$}", digits, width = b as usize);
            write!(f, ".{}", padded.trim_end_matches('0'))?;
        }
        Ok(())
    }
}

/// Fixed-point arithmetic with `frac_bits` fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedRing {
    pub frac_bits: u32,
}

impl FixedRing {
    pub fn new(frac_bits: u32) -> Self {
        FixedRing { frac_bits }
    }

    pub fn round(&self, x: &BigRational) -> FixedPoint {
        fx_round(x, self.frac_bits)
    }
}

impl Ring for FixedRing {
    type Elem = FixedPoint;

    fn zero(&self) -> FixedPoint {
        FixedPoint::zero(self.frac_bits)
    }
    fn one(&self) -> FixedPoint {
        FixedPoint::from_int(1, self.frac_bits)
    }
    fn from_i64(&self, v: i64) -> FixedPoint {
        FixedPoint::from_int(v, self.frac_bits)
    }
    fn add(&self, a: &FixedPoint, b: &FixedPoint) -> FixedPoint {
        a.add(b)
    }
    fn sub(&self, a: &FixedPoint, b: &FixedPoint) -> FixedPoint {
        a.sub(b)
    }
    fn mul(&self, a: &FixedPoint, b: &FixedPoint) -> FixedPoint {
        a.mul(b)
    }
    fn neg(&self, a: &FixedPoint) -> FixedPoint {
        a.neg()
    }
    fn is_zero(&self, a: &FixedPoint) -> bool {
        a.mantissa.is_zero()
    }
}

impl Field for FixedRing {
    fn inv(&self, a: &FixedPoint) -> Result<FixedPoint, ScalarError> {
        if a.mantissa.is_zero() {
            return Err(ScalarError::ZeroInverse);
        }
        self.one().div(a)
    }
    fn div(&self, a: &FixedPoint, b: &FixedPoint) -> Result<FixedPoint, ScalarError> {
        a.div(b)
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn pivot_magnitude(&self, a: &FixedPoint) -> f64 {
        a.to_f64().abs()
    }
    /// `|a| < 2^(-b/2)`.
    fn is_negligible(&self, a: &FixedPoint, _scale: f64) -> bool {
        let half = self.frac_bits - self.frac_bits / 2;
        a.mantissa.abs() < (BigInt::one() << half)
    }
    fn from_rational(&self, q: &BigRational) -> Result<FixedPoint, ScalarError> {
        Ok(fx_round(q, self.frac_bits))
    }
}

impl RealField for FixedRing {
    fn to_f64(&self, a: &FixedPoint) -> f64 {
        a.to_f64()
    }
    fn to_rational(&self, a: &FixedPoint) -> BigRational {
        a.to_rational()
    }
    fn from_f64(&self, x: f64) -> FixedPoint {
        fx_round(
            &BigRational::from_float(x).expect("finite float"),
            self.frac_bits,
        )
    }
    /// Floor of the exact square root; negative inputs map to zero.
    fn sqrt(&self, a: &FixedPoint) -> FixedPoint {
        if !a.mantissa.is_positive() {
            return self.zero();
        }
        let shifted = &a.mantissa << self.frac_bits;
        FixedPoint {
            mantissa: shifted.sqrt(),
            frac_bits: self.frac_bits,
        }
    }
    fn signum(&self, a: &FixedPoint) -> i8 {
        match a.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }
    fn ln_abs(&self, a: &FixedPoint) -> f64 {
        ln_abs_bigint(&a.mantissa) - self.frac_bits as f64 * std::f64::consts::LN_2
    }
}
