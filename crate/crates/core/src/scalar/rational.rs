use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Field, RealField, Ring, ScalarError};

/// Exact rational arithmetic (reduced `BigInt` fractions).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RationalRing;

/// `ln |x|` of a big integer, accurate to f64 precision at any size.
pub(crate) fn ln_abs_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(60);
    let top = (x.abs() >> shift).to_f64().expect("at most 60 bits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_abs_rational(q: &BigRational) -> f64 {
    ln_abs_bigint(q.numer()) - ln_abs_bigint(q.denom())
}

impl Ring for RationalRing {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
}

impl Field for RationalRing {
    fn inv(&self, a: &BigRational) -> Result<BigRational, ScalarError> {
        if a.is_zero() {
            return Err(ScalarError::ZeroInverse);
        }
        Ok(a.recip())
    }
    fn div(&self, a: &BigRational, b: &BigRational) -> Result<BigRational, ScalarError> {
        if b.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(a / b)
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn pivot_magnitude(&self, a: &BigRational) -> f64 {
        if a.is_zero() {
            0.0
        } else {
            // Prefer pivots with short representations; any nonzero pivot is exact.
            1.0 / (1.0 + (a.numer().bits() + a.denom().bits()) as f64)
        }
    }
    fn is_negligible(&self, a: &BigRational, _scale: f64) -> bool {
        a.is_zero()
    }
    fn from_rational(&self, q: &BigRational) -> Result<BigRational, ScalarError> {
        Ok(q.clone())
    }
}

impl RealField for RationalRing {
    fn to_f64(&self, a: &BigRational) -> f64 {
        match a.to_f64() {
            Some(v) if v.is_finite() => v,
            _ => {
                let s = if a.is_negative() { -1.0 } else { 1.0 };
                s * ln_abs_rational(a).exp()
            }
        }
    }
    fn to_rational(&self, a: &BigRational) -> BigRational {
        a.clone()
    }
    fn from_f64(&self, x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite float")
    }
    /// Rational square roots are generally irrational; this rounds through f64.
    fn sqrt(&self, a: &BigRational) -> BigRational {
        self.from_f64(self.to_f64(a).sqrt())
    }
    fn signum(&self, a: &BigRational) -> i8 {
        match a.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }
    fn ln_abs(&self, a: &BigRational) -> f64 {
        ln_abs_rational(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_huge_rational() {
        let big = BigRational::from_integer(BigInt::one() << 4000u32);
        let got = ln_abs_rational(&big);
        assert!((got - 4000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let tiny = big.recip();
        assert!((ln_abs_rational(&tiny) + got).abs() < 1e-9);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(
            RationalRing.inv(&RationalRing.zero()),
            Err(ScalarError::ZeroInverse)
        );
    }
}
