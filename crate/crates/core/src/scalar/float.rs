use std::marker::PhantomData;

use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, ToPrimitive};

use super::{Field, RealField, Ring, ScalarError};

/// IEEE floating point, generic over `f32`/`f64`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FloatRing<T>(PhantomData<T>);

impl<T> FloatRing<T> {
    pub const fn new() -> Self {
        FloatRing(PhantomData)
    }
}

/// Relative pivot tolerance for floating point elimination.
const REL_TOL: f64 = 1e-12;

impl<T> Ring for FloatRing<T>
where
    T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display,
{
    type Elem = T;

    fn zero(&self) -> T {
        T::zero()
    }
    fn one(&self) -> T {
        T::one()
    }
    fn from_i64(&self, v: i64) -> T {
        T::from_i64(v).expect("integer representable as float")
    }
    fn add(&self, a: &T, b: &T) -> T {
        *a + *b
    }
    fn sub(&self, a: &T, b: &T) -> T {
        *a - *b
    }
    fn mul(&self, a: &T, b: &T) -> T {
        *a * *b
    }
    fn neg(&self, a: &T) -> T {
        -*a
    }
    fn is_zero(&self, a: &T) -> bool {
        a.is_zero()
    }
    fn mul_add(&self, acc: &T, a: &T, b: &T) -> T {
        *acc + *a * *b
    }
}

impl<T> Field for FloatRing<T>
where
    T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display,
{
    fn inv(&self, a: &T) -> Result<T, ScalarError> {
        if a.is_zero() {
            return Err(ScalarError::ZeroInverse);
        }
        Ok(T::one() / *a)
    }
    fn div(&self, a: &T, b: &T) -> Result<T, ScalarError> {
        if b.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(*a / *b)
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn pivot_magnitude(&self, a: &T) -> f64 {
        a.abs().to_f64().unwrap_or(f64::NAN)
    }
    fn is_negligible(&self, a: &T, scale: f64) -> bool {
        let v = a.abs().to_f64().unwrap_or(0.0);
        !(v >= REL_TOL * scale.max(f64::MIN_POSITIVE))
    }
    fn from_rational(&self, q: &BigRational) -> Result<T, ScalarError> {
        Ok(T::from_f64(q.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(T::nan))
    }
}

impl<T> RealField for FloatRing<T>
where
    T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display,
{
    fn to_f64(&self, a: &T) -> f64 {
        a.to_f64().unwrap_or(f64::NAN)
    }
    fn to_rational(&self, a: &T) -> BigRational {
        BigRational::from_float(self.to_f64(a)).expect("finite float")
    }
    fn from_f64(&self, x: f64) -> T {
        T::from_f64(x).unwrap_or_else(T::nan)
    }
    fn sqrt(&self, a: &T) -> T {
        a.sqrt()
    }
    fn signum(&self, a: &T) -> i8 {
        if a.is_zero() {
            0
        } else if a.is_sign_negative() {
            -1
        } else {
            1
        }
    }
    fn ln_abs(&self, a: &T) -> f64 {
        self.to_f64(a).abs().ln()
    }
}
