use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{Field, Ring, ScalarError};

/// The Mersenne prime `2^61 - 1`, the default modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// A residue modulo a prime. The modulus is carried so that mismatched
/// fields are caught in debug builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    pub residue: u64,
    pub modulus: u64,
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The prime field `Z_p` for an odd prime `p < 2^62`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { p: MERSENNE_61 }
    }
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, ScalarError> {
        if p < 3 || p >= 1 << 62 || !is_prime(p) {
            return Err(ScalarError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, v: u64) -> FieldElem {
        FieldElem {
            residue: v % self.p,
            modulus: self.p,
        }
    }

    pub fn from_bigint(&self, v: &BigInt) -> FieldElem {
        let r = v.mod_floor(&BigInt::from(self.p));
        self.elem(r.to_u64().expect("reduced residue fits u64"))
    }

    pub fn pow(&self, a: &FieldElem, exp: u64) -> FieldElem {
        self.elem(pow_mod(a.residue, exp, self.p))
    }

    #[inline]
    fn reduce_product(&self, x: u128) -> u64 {
        if self.p == MERSENNE_61 {
            let p = MERSENNE_61 as u128;
            let r = (x & p) + (x >> 61);
            let r = (r & p) + (r >> 61);
            let r = r as u64;
            if r >= MERSENNE_61 {
                r - MERSENNE_61
            } else {
                r
            }
        } else {
            (x % self.p as u128) as u64
        }
    }

    #[inline]
    fn wrap(&self, residue: u64) -> FieldElem {
        FieldElem {
            residue,
            modulus: self.p,
        }
    }
}

impl Ring for PrimeField {
    type Elem = FieldElem;

    fn zero(&self) -> FieldElem {
        self.wrap(0)
    }
    fn one(&self) -> FieldElem {
        self.wrap(1)
    }
    fn from_i64(&self, v: i64) -> FieldElem {
        let r = (v as i128).rem_euclid(self.p as i128);
        self.wrap(r as u64)
    }
    #[inline]
    fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        debug_assert!(a.modulus == self.p && b.modulus == self.p);
        let s = a.residue + b.residue;
        self.wrap(if s >= self.p { s - self.p } else { s })
    }
    #[inline]
    fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        debug_assert!(a.modulus == self.p && b.modulus == self.p);
        self.wrap(if a.residue >= b.residue {
            a.residue - b.residue
        } else {
            a.residue + self.p - b.residue
        })
    }
    #[inline]
    fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        debug_assert!(a.modulus == self.p && b.modulus == self.p);
        self.wrap(self.reduce_product(a.residue as u128 * b.residue as u128))
    }
    fn neg(&self, a: &FieldElem) -> FieldElem {
        self.wrap(if a.residue == 0 {
            0
        } else {
            self.p - a.residue
        })
    }
    fn is_zero(&self, a: &FieldElem) -> bool {
        a.residue == 0
    }
}

impl Field for PrimeField {
    fn inv(&self, a: &FieldElem) -> Result<FieldElem, ScalarError> {
        if a.residue == 0 {
            return Err(ScalarError::ZeroInverse);
        }
        Ok(self.pow(a, self.p - 2))
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn pivot_magnitude(&self, a: &FieldElem) -> f64 {
        if a.residue == 0 {
            0.0
        } else {
            1.0
        }
    }
    fn is_negligible(&self, a: &FieldElem, _scale: f64) -> bool {
        a.residue == 0
    }
    fn from_rational(&self, q: &BigRational) -> Result<FieldElem, ScalarError> {
        let den = self.from_bigint(q.denom());
        if den.residue == 0 {
            return Err(ScalarError::DenominatorNotInvertible(self.p));
        }
        let num = self.from_bigint(q.numer());
        Ok(self.mul(&num, &self.inv(&den)?))
    }
}

impl PrimeField {
    /// Uniform element from a `u64` source (rejection sampling, no bias).
    pub fn sample(&self, mut next_u64: impl FnMut() -> u64) -> FieldElem {
        let zone = u64::MAX - u64::MAX % self.p;
        loop {
            let x = next_u64();
            if x < zone {
                return self.wrap(x % self.p);
            }
        }
    }

    /// Whether `q` has an invertible denominator here.
    pub fn admits(&self, q: &BigRational) -> bool {
        !(q.denom() % BigInt::from(self.p)).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn primality() {
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1));
        assert!(!is_prime(561));
        assert!(!is_prime(3_215_031_751));
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(15).is_err());
        assert!(PrimeField::new((1 << 61) + 1).is_err());
        assert!(PrimeField::new(101).is_ok());
    }

    #[test]
    fn rational_embedding() {
        let f = PrimeField::new(7).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(f.from_rational(&half).unwrap().residue, 4);
        let bad = BigRational::new(1.into(), 14.into());
        assert_eq!(
            f.from_rational(&bad),
            Err(ScalarError::DenominatorNotInvertible(7))
        );
        assert_eq!(f.from_i64(-1).residue, 6);
    }

    proptest! {
        #[test]
        fn mersenne_reduction_matches_generic(a in 0u64..MERSENNE_61, b in 0u64..MERSENNE_61) {
            let f = PrimeField::default();
            let got = f.mul(&f.elem(a), &f.elem(b)).residue;
            prop_assert_eq!(got, mul_mod(a, b, MERSENNE_61));
        }

        #[test]
        fn inverse_roundtrip(a in 1u64..MERSENNE_61) {
            let f = PrimeField::default();
            let x = f.elem(a);
            prop_assert_eq!(f.mul(&x, &f.inv(&x).unwrap()), f.one());
        }
    }
}
