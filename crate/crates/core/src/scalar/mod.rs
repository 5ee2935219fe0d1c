//! Scalar rings.
//!
//! Every matrix algorithm in this crate is written against the [`Ring`] /
//! [`Field`] / [`RealField`] traits rather than a concrete number type. A ring
//! is a small *context* value (it may carry runtime parameters such as the
//! number of fractional bits or the field modulus) that knows how to combine
//! its elements.
//!
//! Provided rings:
//!
//! | ring                 | element          | exact | notes                                   |
//! |----------------------|------------------|-------|-----------------------------------------|
//! | [`FloatRing<f64>`]   | `f64`            | no    | any `num_traits::Float`                  |
//! | [`RationalRing`]     | `BigRational`    | yes   | oracle arithmetic                        |
//! | [`FixedRing`]        | [`FixedPoint`]   | no    | `b` fractional bits, round-half-to-even  |
//! | [`PrimeField`]       | [`FieldElem`]    | yes   | `Z_p`, default `p = 2^61 - 1`            |

mod field;
mod fixed;
mod float;
mod rational;

use std::fmt;

use num_rational::BigRational;

pub use field::{is_prime, FieldElem, PrimeField, MERSENNE_61};
pub use fixed::{fx_round, FixedPoint, FixedRing};
pub use float::FloatRing;
pub use rational::{ln_abs_rational, RationalRing};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0} is not an odd prime below 2^62")]
    NotPrime(u64),
    #[error("cannot parse {0:?} as a scalar")]
    Parse(String),
    #[error("denominator vanishes modulo {0}")]
    DenominatorNotInvertible(u64),
}

/// A commutative ring with a runtime context.
pub trait Ring: Clone + fmt::Debug {
    type Elem: Clone + fmt::Debug + fmt::Display + PartialEq;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// `acc + a * b`.
    fn mul_add(&self, acc: &Self::Elem, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(acc, &self.mul(a, b))
    }
}

/// A ring in which every nonzero element is invertible, together with the
/// pivoting policy used by elimination and Sherman–Morrison denominators.
pub trait Field: Ring {
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem, ScalarError>;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, ScalarError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// True when arithmetic in this ring never rounds.
    fn is_exact(&self) -> bool;

    /// Score used for partial pivoting; larger is preferred, zero means unusable.
    fn pivot_magnitude(&self, a: &Self::Elem) -> f64;

    /// Singularity test for a pivot or update denominator. `scale` is the
    /// magnitude of the quantities the value was computed from.
    fn is_negligible(&self, a: &Self::Elem, scale: f64) -> bool;

    /// Embedding of a rational number. Exact rings reproduce it exactly
    /// (or fail in `Z_p` when the denominator vanishes); approximate rings round.
    fn from_rational(&self, q: &BigRational) -> Result<Self::Elem, ScalarError>;
}

/// A field embedded in the reals.
pub trait RealField: Field {
    fn to_f64(&self, a: &Self::Elem) -> f64;
    /// Exact value of an element (fixed-point and binary floats are dyadic).
    fn to_rational(&self, a: &Self::Elem) -> BigRational;
    fn from_f64(&self, x: f64) -> Self::Elem;
    fn sqrt(&self, a: &Self::Elem) -> Self::Elem;
    fn signum(&self, a: &Self::Elem) -> i8;
    /// `ln |a|`, computed without overflowing for huge or tiny values.
    fn ln_abs(&self, a: &Self::Elem) -> f64;

    fn abs(&self, a: &Self::Elem) -> Self::Elem {
        if self.signum(a) < 0 {
            self.neg(a)
        } else {
            a.clone()
        }
    }
}
