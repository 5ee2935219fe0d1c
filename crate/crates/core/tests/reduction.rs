use formulads_core::construct::{build, build_hat, norm_budget};
use formulads_core::corpus::{instance_kappa, random_instance, Instance};
use formulads_core::formula::{Formula, GenParams};
use formulads_core::matrix::frobenius_sq;
use formulads_core::oracle::{det_bareiss, eval_exact, inv_exact, inversion_inputs};
use formulads_core::scalar::RationalRing;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, GenParams::default(), 3)
}

fn sq(q: &BigRational) -> BigRational {
    q * q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_block_is_the_value(seed in any::<u64>()) {
        let inst = instance(seed);
        let r = RationalRing;
        let c = build(&r, &inst.formula, &inst.inputs).unwrap();
        let ninv = inv_exact(&c.n).unwrap();
        prop_assert_eq!(c.extract_value(&ninv), inst.value.clone());
        prop_assert_eq!(eval_exact(&inst.formula, &inst.inputs).unwrap(), inst.value);
    }

    #[test]
    fn determinant_ratio_and_inversion_product(seed in any::<u64>()) {
        let inst = instance(seed);
        let r = RationalRing;
        let c = build(&r, &inst.formula, &inst.inputs).unwrap();
        let det_n = det_bareiss(&c.n);
        let product = inversion_inputs(&inst.formula, &inst.inputs)
            .unwrap()
            .iter()
            .fold(BigRational::one(), |acc, b| acc * det_bareiss(b));
        prop_assert_eq!(det_n.abs(), product.abs());
        if inst.value.is_square() {
            let hat = build_hat(&r, &c).unwrap();
            prop_assert_eq!(det_bareiss(&hat.n_hat), det_n * det_bareiss(&inst.value));
        }
    }

    #[test]
    fn norm_and_size_bounds(seed in any::<u64>()) {
        let inst = instance(seed);
        let r = RationalRing;
        let c = build(&r, &inst.formula, &inst.inputs).unwrap();
        let budget = norm_budget(inst.formula.gate_count(), &instance_kappa(&inst));
        let ninv = inv_exact(&c.n).unwrap();
        let rows_i = ninv.submatrix(&c.i_set, &(0..c.side()).collect::<Vec<_>>());
        let cols_j = ninv.submatrix(&(0..c.side()).collect::<Vec<_>>(), &c.j_set);
        prop_assert!(frobenius_sq(&r, &c.n) <= sq(&budget.bound_n));
        prop_assert!(frobenius_sq(&r, &ninv) <= sq(&budget.bound_ninv));
        prop_assert!(frobenius_sq(&r, &rows_i) <= sq(&budget.bound_rowblock));
        prop_assert!(frobenius_sq(&r, &cols_j) <= sq(&budget.bound_rowblock));
        let dims: usize = inst.inputs.iter().map(|m| m.rows() + m.cols()).sum();
        prop_assert!(c.side() <= 3 * dims);
    }
}

#[test]
fn inversion_free_formulas_have_unit_determinant() {
    let r = RationalRing;
    let mut seen = 0;
    for seed in 0..200 {
        let inst = instance(seed);
        if inst.formula.has_inversions() {
            continue;
        }
        seen += 1;
        let c = build(&r, &inst.formula, &inst.inputs).unwrap();
        assert_eq!(det_bareiss(&c.n).abs(), BigRational::one());
    }
    assert!(seen > 10);
}

#[test]
fn construction_json_golden() {
    let r = RationalRing;
    let f = Formula::parse("A:1x1; inv(A)").unwrap();
    let a = formulads_core::matrix::from_i64(&r, &[&[2]]);
    let c = build(&r, &f, &[a]).unwrap();
    let want = serde_json::json!({
        "size": 3,
        "N": [["1", "2", "0"], ["0", "-1", "-1"], ["1", "0", "0"]],
        "I": [2],
        "J": [2],
        "gate_count": 2,
        "leaf_names": ["A"],
        "leaf_blocks": [{"leaf": 0, "row": 0, "col": 1, "rows": 1, "cols": 1}],
        "inversions": [{"path": "root", "offset": 0, "size": 2, "child_i": [0], "child_j": [1]}],
    });
    assert_eq!(c.to_json(), want);
}

#[test]
fn singular_inversions_are_rejected_by_the_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = GenParams {
        max_gates: 6,
        max_dim: 2,
        reuse_prob: 0.5,
    };
    for _ in 0..50 {
        let inst = random_instance(&mut rng, params, 1);
        let det_n = det_bareiss(&build(&RationalRing, &inst.formula, &inst.inputs).unwrap().n);
        assert!(!det_n.is_zero());
    }
}
