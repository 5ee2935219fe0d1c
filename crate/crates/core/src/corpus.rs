//! Random formula instances with exact rational inputs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use crate::construct::ceil_sqrt;
use crate::formula::{random_formula, Formula, GenParams};
use crate::matrix::Matrix;
use crate::oracle::{eval_exact, inv_exact, inversion_inputs, OracleError, RatMatrix};

#[derive(Debug, Clone)]
pub struct Instance {
    pub formula: Formula,
    /// One input per leaf; leaves sharing a name share a matrix.
    pub inputs: Vec<RatMatrix>,
    pub value: RatMatrix,
}

fn random_int_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    bound: i64,
) -> RatMatrix {
    Matrix::from_fn(rows, cols, |_, _| {
        BigRational::from_integer(BigInt::from(rng.random_range(-bound..=bound)))
    })
}

/// Draws inputs for every declared name and expands them per leaf.
pub fn random_inputs<R: Rng + ?Sized>(rng: &mut R, f: &Formula, bound: i64) -> Vec<RatMatrix> {
    let named: BTreeMap<&String, RatMatrix> = f
        .dims
        .iter()
        .map(|(name, &(r, c))| (name, random_int_matrix(rng, r, c, bound)))
        .collect();
    f.leaves().iter().map(|l| named[&l.name].clone()).collect()
}

/// A random formula with at most `params.max_gates` gates whose inversions
/// are all defined on small-integer inputs in `[-bound, bound]`.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: GenParams, bound: i64) -> Instance {
    loop {
        let formula = random_formula(rng, params);
        for _ in 0..8 {
            let inputs = random_inputs(rng, &formula, bound);
            match eval_exact(&formula, &inputs) {
                Ok(value) => {
                    return Instance {
                        formula,
                        inputs,
                        value,
                    }
                }
                Err(OracleError::SingularInversion(_)) => continue,
                Err(e) => panic!("generator produced an inconsistent formula: {e}"),
            }
        }
    }
}

/// Smallest integer `κ ≥ 2` bounding every `n_i + m_i`, every input's
/// Frobenius norm and every inversion output's Frobenius norm.
pub fn instance_kappa(inst: &Instance) -> BigRational {
    let mut k = BigInt::from(2);
    let frob_sq = |m: &RatMatrix| {
        m.as_slice()
            .iter()
            .fold(BigRational::zero(), |acc, x| acc + x * x)
    };
    for m in &inst.inputs {
        k = k.max(BigInt::from(m.rows() + m.cols()));
        k = k.max(ceil_sqrt(&frob_sq(m)));
    }
    let inv_in =
        inversion_inputs(&inst.formula, &inst.inputs).expect("instance inversions are defined");
    for b in &inv_in {
        let out = inv_exact(b).expect("instance inversions are defined");
        k = k.max(ceil_sqrt(&frob_sq(&out)));
    }
    BigRational::from_integer(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn instances_evaluate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, GenParams::default(), 3);
            assert_eq!(eval_exact(&inst.formula, &inst.inputs).unwrap(), inst.value);
            assert!(instance_kappa(&inst) >= BigRational::from_integer(2.into()));
        }
    }
}
