use formulads_core::construct::ceil_sqrt;
use formulads_core::dyndet::DetTracker;
use formulads_core::dyninv::{EngineKind, InverseEngine, WoodburyState};
use formulads_core::formula::Formula;
use formulads_core::matrix::{frobenius_sq, Matrix};
use formulads_core::oracle::{
    det_bareiss, det_perturbation_bounds, eval_exact, inv_exact, RatMatrix,
};
use formulads_core::scalar::{FloatRing, RationalRing};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn random_int(rng: &mut ChaCha8Rng, n: usize, m: usize, bound: i64) -> RatMatrix {
    Matrix::from_fn(n, m, |_, _| q(rng.random_range(-bound..=bound)))
}

fn to_f64(m: &RatMatrix) -> Matrix<f64> {
    m.map(|x| x.to_f64().unwrap())
}

fn rows_f64(m: &RatMatrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| x.to_f64().unwrap()).collect())
        .collect()
}

fn diff_sq(a: &RatMatrix, b: &RatMatrix) -> BigRational {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(BigRational::zero(), |acc, (x, y)| {
            let d = x - y;
            acc + &d * &d
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `‖(N+E)⁻¹ − N⁻¹‖_F ≤ 2κ²ε` whenever `‖E‖_F ≤ ε ≤ 1/(2κ)`.
    #[test]
    fn forward_backward_bound(seed in any::<u64>(), frac in 1u32..=64) {
        let r = RationalRing;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = loop {
            let a = random_int(&mut rng, 4, 4, 3);
            if !det_bareiss(&a).is_zero() {
                break a;
            }
        };
        let ninv = inv_exact(&n).unwrap();
        let kappa = BigRational::from_integer(
            ceil_sqrt(&frobenius_sq(&r, &n)).max(ceil_sqrt(&frobenius_sq(&r, &ninv))),
        );
        let eps = BigRational::new(BigInt::from(frac), BigInt::from(64)) / (q(2) * &kappa);
        let raw = random_int(&mut rng, 4, 4, 5);
        let raw_norm = ceil_sqrt(&frobenius_sq(&r, &raw)).max(BigInt::from(1));
        let scale = &eps / BigRational::from_integer(raw_norm);
        let e = raw.map(|x| x * &scale);
        let perturbed = Matrix::from_fn(4, 4, |i, j| &n[(i, j)] + &e[(i, j)]);
        let pinv = inv_exact(&perturbed).unwrap();
        let bound = q(2) * &kappa * &kappa * &eps;
        prop_assert!(diff_sq(&pinv, &ninv) <= &bound * &bound);
    }

    /// One Sherman–Morrison step in floating point adds no more than
    /// `513·κ^26·ε_D` to the previous error, with `ε_D` the error of the
    /// computed scalar `(1 + vᵀZ̃⁻¹u)⁻¹`.
    #[test]
    fn woodbury_error_envelope(seed in any::<u64>()) {
        let f = FloatRing::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Matrix::from_fn(6, 6, |i, j| q(rng.random_range(-2..=2) + if i == j { 12 } else { 0 }));
        let mut st = WoodburyState::new(&f, to_f64(&z), 0.0).unwrap();
        let mut prev = diff_sq(&st.inverse().map(|&x| BigRational::from_float(x).unwrap()), &inv_exact(&z).unwrap())
            .to_f64()
            .unwrap()
            .sqrt();
        for _ in 0..5 {
            let u: Vec<i64> = (0..6).map(|_| rng.random_range(-1..=1)).collect();
            let v: Vec<i64> = (0..6).map(|_| rng.random_range(-1..=1)).collect();
            let next = Matrix::from_fn(6, 6, |a, b| &z[(a, b)] + q(u[a] * v[b]));
            if det_bareiss(&next).is_zero() {
                continue;
            }
            let approx = st.inverse().map(|&x| BigRational::from_float(x).unwrap());
            let uq: Vec<BigRational> = u.iter().map(|&x| q(x)).collect();
            let zu: Vec<BigRational> = (0..6)
                .map(|a| (0..6).fold(BigRational::zero(), |acc, b| acc + &approx[(a, b)] * &uq[b]))
                .collect();
            let denom = (0..6).fold(q(1), |acc, a| acc + q(v[a]) * &zu[a]);
            let uf: Vec<f64> = u.iter().map(|&x| x as f64).collect();
            let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let zuf: Vec<f64> = (0..6).map(|a| (0..6).map(|b| st.inverse()[(a, b)] * uf[b]).sum()).collect();
            let d_approx = 1.0 / (1.0 + vf.iter().zip(&zuf).map(|(a, b)| a * b).sum::<f64>());
            let eps_d = (d_approx - (q(1) / &denom).to_f64().unwrap()).abs().max(f64::EPSILON);
            st.update_rank1(&uf, &vf).unwrap();
            z = next;
            let exact = inv_exact(&z).unwrap();
            let kappa = ceil_sqrt(&frobenius_sq(&RationalRing, &z))
                .max(ceil_sqrt(&frobenius_sq(&RationalRing, &exact)))
                .to_f64()
                .unwrap();
            let err = diff_sq(&st.inverse().map(|&x| BigRational::from_float(x).unwrap()), &exact)
                .to_f64()
                .unwrap()
                .sqrt();
            prop_assert!(err <= 513.0 * kappa.powi(26) * eps_d + prev);
            prev = err;
        }
    }

    #[test]
    fn perturbation_bounds_hold(seed in any::<u64>(), eps_milli in 0u32..=1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = loop {
            let a = random_int(&mut rng, 4, 4, 4);
            if !det_bareiss(&a).is_zero() {
                break a;
            }
        };
        let x = random_int(&mut rng, 4, 4, 4);
        let eps = f64::from(eps_milli) / 1000.0;
        let (lo, hi, eps_hat) = det_perturbation_bounds(&rows_f64(&a), &rows_f64(&x), eps).unwrap();
        let eh = BigRational::from_float(eps_hat).unwrap();
        let pert = Matrix::from_fn(4, 4, |i, j| &a[(i, j)] + &eh * &x[(i, j)]);
        let d = det_bareiss(&pert);
        let d0 = det_bareiss(&a);
        prop_assert_eq!(d.signum(), d0.signum());
        let mag = d.abs().to_f64().unwrap();
        prop_assert!(lo * (1.0 - 1e-12) <= mag && mag <= hi * (1.0 + 1e-12));
    }
}

/// Tracked `det f` stays within `1 ± 1e-3` of the exact value with the
/// right sign.
#[test]
fn det_tracker_accuracy_in_f64() {
    let f = FloatRing::<f64>::new();
    let formula = Formula::parse("A:4x4; B:4x4; A*inv(B) + A").unwrap();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = |rng: &mut ChaCha8Rng| {
            Matrix::from_fn(4, 4, |i, j| {
                q(rng.random_range(-2..=2) + if i == j { 10 } else { 0 })
            })
        };
        let (a, b) = (dom(&mut rng), dom(&mut rng));
        let mut exact = vec![a.clone(), b, a];
        let inputs: Vec<_> = exact.iter().map(to_f64).collect();
        for kind in EngineKind::ALL {
            let mut tr = DetTracker::new(&f, &formula, &inputs, kind, 1e-3, 16).unwrap();
            let mut ex = exact.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            for _ in 0..16 {
                let (leaf, i, j) = (
                    rng.random_range(0..3),
                    rng.random_range(0..4),
                    rng.random_range(0..4),
                );
                let d = rng.random_range(-2..=2);
                let mut next = ex.clone();
                next[leaf][(i, j)] += q(d);
                let Ok(val) = eval_exact(&formula, &next) else {
                    continue;
                };
                let want = det_bareiss(&val);
                if want.is_zero() {
                    continue;
                }
                let got = tr.update(leaf, i, j, &(d as f64)).unwrap();
                ex = next;
                assert_eq!(i64::from(got.sign), want.signum().to_i64().unwrap());
                let ratio = (got.log_abs - want.abs().to_f64().unwrap().ln()).exp();
                assert!(
                    (ratio - 1.0).abs() <= 1e-3,
                    "{kind} seed {seed}: ratio {ratio}"
                );
            }
        }
        exact.clear();
    }
}

/// Every engine agrees with the exact inverse in floating point after a
/// mixed update sequence.
#[test]
fn engines_agree_in_f64() {
    let f = FloatRing::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut z = Matrix::from_fn(10, 10, |i, j| {
        q(rng.random_range(-3..=3) + if i == j { 40 } else { 0 })
    });
    let mut engines: Vec<_> = EngineKind::ALL
        .iter()
        .map(|&k| formulads_core::dyninv::Engine::new(k, &f, to_f64(&z), 1e-12).unwrap())
        .collect();
    for _ in 0..25 {
        let (i, j) = (rng.random_range(0..10), rng.random_range(0..10));
        let d = rng.random_range(-4..=4);
        z[(i, j)] += q(d);
        let exact = inv_exact(&z).unwrap();
        for e in engines.iter_mut() {
            e.update_entry(i, j, &(d as f64)).unwrap();
            for a in 0..10 {
                for b in 0..10 {
                    let want = exact[(a, b)].to_f64().unwrap();
                    assert!((e.query_entry(a, b) - want).abs() < 1e-12);
                }
            }
        }
    }
}
