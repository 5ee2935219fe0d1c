//! Determinant of a formula's value maintained under entry updates.
//!
//! With `N` the reduction matrix of `f` and `N̂` its bordered version,
//! `det f = det N̂ / det N`. Both determinants are held in log form and
//! updated by the determinant lemma `det(A + uvᵀ) = det A · (1 + vᵀA⁻¹u)`,
//! where the factor is read off a dynamic inverse engine.

use std::fmt;

use serde::Serialize;

use crate::construct::{build, build_hat, ConstructError, Construction, HatConstruction};
use crate::dyninv::{DynInvError, Engine, EngineKind, EngineSnapshot, InverseEngine};
use crate::formula::Formula;
use crate::matrix::{det, Matrix};
use crate::scalar::RealField;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetError {
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("formula output is {0}x{1}, not square")]
    NonSquareOutput(usize, usize),
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("update would make the determinant vanish")]
    SingularUpdate,
    #[error("no update to revert")]
    EmptyUndoLog,
}

impl From<DynInvError> for DetError {
    fn from(e: DynInvError) -> Self {
        match e {
            DynInvError::SingularMatrix => DetError::SingularMatrix,
            _ => DetError::SingularUpdate,
        }
    }
}

/// A determinant as `sign · exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedLogDet {
    pub sign: i8,
    /// `ln |det|`; meaningless when `sign == 0`.
    pub log_abs: f64,
}

impl SignedLogDet {
    pub const ONE: SignedLogDet = SignedLogDet {
        sign: 1,
        log_abs: 0.0,
    };
    pub const ZERO: SignedLogDet = SignedLogDet {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            SignedLogDet {
                sign: sign.signum(),
                log_abs,
            }
        }
    }

    pub fn from_value<F: RealField>(field: &F, x: &F::Elem) -> Self {
        match field.signum(x) {
            0 => Self::ZERO,
            s => SignedLogDet {
                sign: s,
                log_abs: field.ln_abs(x),
            },
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLogDet {
                sign: if x < 0.0 { -1 } else { 1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn mul(&self, other: &SignedLogDet) -> SignedLogDet {
        SignedLogDet::new(self.sign * other.sign, self.log_abs + other.log_abs)
    }

    /// Panics when `other` is zero.
    pub fn div(&self, other: &SignedLogDet) -> SignedLogDet {
        assert!(!other.is_zero(), "division by a zero determinant");
        SignedLogDet::new(self.sign * other.sign, self.log_abs - other.log_abs)
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_abs.exp()
        }
    }
}

impl fmt::Display for SignedLogDet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => f.write_str("0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "+" }, self.log_abs),
        }
    }
}

/// Sign and log-magnitude of `det a`.
///
/// Approximate rings use Householder QR: `det Q = (-1)^r` for `r`
/// reflections and `|det a| = ∏ |R_ii|`. Exact rings use elimination.
pub fn signed_logdet_qr<F: RealField>(
    field: &F,
    a: &Matrix<F::Elem>,
) -> Result<SignedLogDet, DetError> {
    if !a.is_square() {
        let (r, c) = a.shape();
        return Err(DetError::NonSquareOutput(r, c));
    }
    if field.is_exact() {
        let d = det(field, a);
        return if field.is_zero(&d) {
            Err(DetError::SingularMatrix)
        } else {
            Ok(SignedLogDet::from_value(field, &d))
        };
    }
    let n = a.rows();
    let scale = a
        .as_slice()
        .iter()
        .map(|x| field.pivot_magnitude(x))
        .fold(0.0, f64::max);
    let mut r = a.clone();
    let mut sign: i8 = 1;
    let mut log_abs = 0.0;
    for k in 0..n {
        let below_zero = (k + 1..n).all(|i| field.is_zero(&r[(i, k)]));
        if !below_zero {
            let mut norm_sq = field.zero();
            for i in k..n {
                norm_sq = field.mul_add(&norm_sq, &r[(i, k)], &r[(i, k)]);
            }
            let norm = field.sqrt(&norm_sq);
            let alpha = if field.signum(&r[(k, k)]) < 0 {
                norm
            } else {
                field.neg(&norm)
            };
            let mut v: Vec<F::Elem> = (k..n).map(|i| r[(i, k)].clone()).collect();
            v[0] = field.sub(&v[0], &alpha);
            let mut vtv = field.zero();
            for x in &v {
                vtv = field.mul_add(&vtv, x, x);
            }
            if !field.is_zero(&vtv) {
                let two_over = field
                    .div(&field.from_i64(2), &vtv)
                    .map_err(|_| DetError::SingularMatrix)?;
                for j in k + 1..n {
                    let mut s = field.zero();
                    for (t, vt) in v.iter().enumerate() {
                        s = field.mul_add(&s, vt, &r[(k + t, j)]);
                    }
                    let s = field.mul(&s, &two_over);
                    for (t, vt) in v.iter().enumerate() {
                        r[(k + t, j)] = field.sub(&r[(k + t, j)], &field.mul(&s, vt));
                    }
                }
                r[(k, k)] = alpha;
                for i in k + 1..n {
                    r[(i, k)] = field.zero();
                }
                sign = -sign;
            }
        }
        let d = &r[(k, k)];
        if field.is_negligible(d, scale) {
            return Err(DetError::SingularMatrix);
        }
        sign *= field.signum(d);
        log_abs += field.ln_abs(d);
    }
    Ok(SignedLogDet::new(sign, log_abs))
}

#[derive(Debug, Clone)]
struct UndoRecord<F: RealField> {
    /// `(row, col, old value)` of every touched entry of `N`, in update order.
    entries: Vec<(usize, usize, F::Elem)>,
    ld_n: SignedLogDet,
    ld_hat: SignedLogDet,
    inv_n: Engine<F>,
    inv_hat: Engine<F>,
    since_restart: usize,
}

/// Report view of a tracker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackerSnapshot {
    pub det: SignedLogDet,
    pub det_n: SignedLogDet,
    pub det_hat: SignedLogDet,
    pub eps: f64,
    pub eps_step: f64,
    pub undo_depth: usize,
    pub updates_since_restart: usize,
    pub restarts: usize,
    pub engine_n: EngineSnapshot,
    pub engine_hat: EngineSnapshot,
}

/// Maintains `det f(inputs)` under entry updates of the inputs.
#[derive(Debug, Clone)]
pub struct DetTracker<F: RealField> {
    field: F,
    kind: EngineKind,
    cons: Construction<F::Elem>,
    hat: HatConstruction<F::Elem>,
    inv_n: Engine<F>,
    inv_hat: Engine<F>,
    ld_n: SignedLogDet,
    ld_hat: SignedLogDet,
    eps: f64,
    eps_step: f64,
    since_restart: usize,
    restarts: usize,
    undo: Vec<UndoRecord<F>>,
}

impl<F: RealField> DetTracker<F> {
    /// `inputs` holds one matrix per leaf. `eps` is the target multiplicative
    /// error over `t_max` updates; each update is budgeted `eps / (2·t_max)`.
    pub fn new(
        field: &F,
        f: &Formula,
        inputs: &[Matrix<F::Elem>],
        kind: EngineKind,
        eps: f64,
        t_max: usize,
    ) -> Result<Self, DetError> {
        let (a, b) = f.check_dims().map_err(ConstructError::from)?;
        if a != b {
            return Err(DetError::NonSquareOutput(a, b));
        }
        let cons = build(field, f, inputs)?;
        let hat = build_hat(field, &cons)?;
        let eps_step = eps / (2 * t_max.max(1)) as f64;
        let ld_n = signed_logdet_qr(field, &cons.n)?;
        let ld_hat = signed_logdet_qr(field, &hat.n_hat)?;
        let inv_n = Engine::new(kind, field, cons.n.clone(), eps_step)?;
        let inv_hat = Engine::new(kind, field, hat.n_hat.clone(), eps_step)?;
        Ok(DetTracker {
            field: field.clone(),
            kind,
            cons,
            hat,
            inv_n,
            inv_hat,
            ld_n,
            ld_hat,
            eps,
            eps_step,
            since_restart: 0,
            restarts: 0,
            undo: Vec::new(),
        })
    }

    /// `det f` as `det N̂ / det N`.
    pub fn current_det(&self) -> SignedLogDet {
        self.ld_hat.div(&self.ld_n)
    }

    pub fn det_n(&self) -> SignedLogDet {
        self.ld_n
    }

    pub fn det_hat(&self) -> SignedLogDet {
        self.ld_hat
    }

    pub fn construction(&self) -> &Construction<F::Elem> {
        &self.cons
    }

    pub fn hat(&self) -> &HatConstruction<F::Elem> {
        &self.hat
    }

    pub fn engines(&self) -> (&Engine<F>, &Engine<F>) {
        (&self.inv_n, &self.inv_hat)
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    /// Current value of an input leaf.
    pub fn leaf_value(&self, leaf: usize) -> Result<Matrix<F::Elem>, DetError> {
        Ok(self.cons.leaf_value(leaf)?)
    }

    /// Adds `delta` to entry `(i, j)` of leaf `leaf`.
    pub fn update(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        delta: &F::Elem,
    ) -> Result<SignedLogDet, DetError> {
        let pos = self.cons.entry_position(leaf, i, j)?;
        self.update_positions(&[pos], delta)
    }

    /// Adds `delta` to entry `(i, j)` of every leaf named `name`; reverted as
    /// one step.
    pub fn update_input(
        &mut self,
        name: &str,
        i: usize,
        j: usize,
        delta: &F::Elem,
    ) -> Result<SignedLogDet, DetError> {
        let leaves = self.cons.leaves_named(name);
        if leaves.is_empty() {
            return Err(ConstructError::UnknownInput(name.to_string()).into());
        }
        let pos = leaves
            .iter()
            .map(|&l| self.cons.entry_position(l, i, j))
            .collect::<Result<Vec<_>, _>>()?;
        self.update_positions(&pos, delta)
    }

    /// Sets entry `(i, j)` of leaf `leaf` to `value`.
    pub fn set_entry(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        value: &F::Elem,
    ) -> Result<SignedLogDet, DetError> {
        let (r, c) = self.cons.entry_position(leaf, i, j)?;
        let delta = self.field.sub(value, &self.cons.n[(r, c)]);
        self.update_positions(&[(r, c)], &delta)
    }

    fn update_positions(
        &mut self,
        pos: &[(usize, usize)],
        delta: &F::Elem,
    ) -> Result<SignedLogDet, DetError> {
        if self.since_restart >= self.cons.side() {
            self.restart()?;
        }
        let record = UndoRecord {
            entries: pos
                .iter()
                .map(|&(r, c)| (r, c, self.cons.n[(r, c)].clone()))
                .collect(),
            ld_n: self.ld_n,
            ld_hat: self.ld_hat,
            inv_n: self.inv_n.clone(),
            inv_hat: self.inv_hat.clone(),
            since_restart: self.since_restart,
        };
        for &(r, c) in pos {
            if let Err(e) = self.apply(r, c, delta) {
                self.restore(record);
                return Err(e);
            }
        }
        self.since_restart += 1;
        self.undo.push(record);
        Ok(self.current_det())
    }

    /// One entry update of `N` (and the same position of `N̂`).
    fn apply(&mut self, r: usize, c: usize, delta: &F::Elem) -> Result<(), DetError> {
        let f = &self.field;
        let factor = |e: &Engine<F>| {
            let t = f.mul(delta, &e.query_entry(c, r));
            let d = f.add(&f.one(), &t);
            if f.is_negligible(&d, f.pivot_magnitude(&t).max(1.0)) {
                Err(DetError::SingularUpdate)
            } else {
                Ok(SignedLogDet::from_value(f, &d))
            }
        };
        let d1 = factor(&self.inv_n)?;
        let d2 = factor(&self.inv_hat)?;
        self.inv_n.update_entry(r, c, delta)?;
        self.inv_hat.update_entry(r, c, delta)?;
        self.ld_n = self.ld_n.mul(&d1);
        self.ld_hat = self.ld_hat.mul(&d2);
        let v = self.field.add(&self.cons.n[(r, c)], delta);
        self.cons.n[(r, c)] = v.clone();
        self.hat.n_hat[(r, c)] = v;
        Ok(())
    }

    fn restore(&mut self, record: UndoRecord<F>) {
        for (r, c, old) in record.entries.into_iter().rev() {
            self.cons.n[(r, c)] = old.clone();
            self.hat.n_hat[(r, c)] = old;
        }
        self.ld_n = record.ld_n;
        self.ld_hat = record.ld_hat;
        self.inv_n = record.inv_n;
        self.inv_hat = record.inv_hat;
        self.since_restart = record.since_restart;
    }

    /// Undoes the most recent update since the last restart.
    pub fn revert(&mut self) -> Result<SignedLogDet, DetError> {
        let record = self.undo.pop().ok_or(DetError::EmptyUndoLog)?;
        self.restore(record);
        Ok(self.current_det())
    }

    /// Recomputes both determinants and both engines from the tracked
    /// matrices and clears the undo log.
    pub fn restart(&mut self) -> Result<(), DetError> {
        let f = &self.field;
        let ld_n = signed_logdet_qr(f, &self.cons.n)?;
        let ld_hat = signed_logdet_qr(f, &self.hat.n_hat)?;
        let inv_n = Engine::new(self.kind, f, self.cons.n.clone(), self.eps_step)?;
        let inv_hat = Engine::new(self.kind, f, self.hat.n_hat.clone(), self.eps_step)?;
        self.ld_n = ld_n;
        self.ld_hat = ld_hat;
        self.inv_n = inv_n;
        self.inv_hat = inv_hat;
        self.undo.clear();
        self.since_restart = 0;
        self.restarts += 1;
        Ok(())
    }

    pub fn snapshot(&self) -> TrackerSnapshot {
        TrackerSnapshot {
            det: self.current_det(),
            det_n: self.ld_n,
            det_hat: self.ld_hat,
            eps: self.eps,
            eps_step: self.eps_step,
            undo_depth: self.undo.len(),
            updates_since_restart: self.since_restart,
            restarts: self.restarts,
            engine_n: self.inv_n.snapshot(),
            engine_hat: self.inv_hat.snapshot(),
        }
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{Signed, ToPrimitive, Zero};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::matrix::{from_i64, identity};
    use crate::oracle::{det_bareiss, det_cofactor, eval_exact};
    use crate::scalar::{FixedRing, FloatRing, RationalRing};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn close(d: SignedLogDet, want: f64) -> bool {
        (d.to_f64() - want).abs() <= 1e-9 * want.abs().max(1.0)
    }

    #[test]
    fn qr_examples() {
        let f = FloatRing::<f64>::new();
        assert_eq!(
            signed_logdet_qr(&f, &identity(&f, 3)).unwrap(),
            SignedLogDet::ONE
        );
        let p = signed_logdet_qr(&f, &from_i64(&f, &[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(p.sign, -1);
        assert!(p.log_abs.abs() < 1e-12);
        let d = signed_logdet_qr(&f, &from_i64(&f, &[&[2, 0], &[0, 3]])).unwrap();
        assert_eq!(d.sign, 1);
        assert!((d.log_abs - 6f64.ln()).abs() < 1e-12);
        assert_eq!(
            signed_logdet_qr(&f, &from_i64(&f, &[&[1, 2], &[2, 4]])),
            Err(DetError::SingularMatrix)
        );
    }

    #[test]
    fn qr_on_fixed_point() {
        let fx = FixedRing::new(64);
        let a = from_i64(&fx, &[&[1, 2, 0], &[3, 4, 1], &[0, 1, 5]]);
        let d = signed_logdet_qr(&fx, &a).unwrap();
        // 1·(20 − 1) − 2·15 = −11.
        assert_eq!(d.sign, -1);
        assert!((d.log_abs - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tracker_init_examples() {
        let f = FloatRing::<f64>::new();
        let fa = Formula::parse("A:1x1; A").unwrap();
        let tr = DetTracker::new(
            &f,
            &fa,
            &[from_i64(&f, &[&[2]])],
            EngineKind::Explicit,
            1e-3,
            4,
        )
        .unwrap();
        assert!(close(tr.det_n(), -1.0));
        assert!(close(tr.det_hat(), -2.0));
        assert!(close(tr.current_det(), 2.0));

        let fab = Formula::parse("A:1x1; B:1x1; A*B").unwrap();
        let tr = DetTracker::new(
            &f,
            &fab,
            &[from_i64(&f, &[&[2]]), from_i64(&f, &[&[3]])],
            EngineKind::Lazy,
            1e-3,
            4,
        )
        .unwrap();
        assert!(close(tr.current_det(), 6.0));

        let err = DetTracker::new(
            &f,
            &fa,
            &[from_i64(&f, &[&[0]])],
            EngineKind::Explicit,
            1e-3,
            4,
        )
        .unwrap_err();
        assert_eq!(err, DetError::SingularMatrix);

        let rect = Formula::parse("A:2x3; A").unwrap();
        let zero = Matrix::filled(2, 3, 0.0);
        assert_eq!(
            DetTracker::new(&f, &rect, &[zero], EngineKind::Explicit, 1e-3, 4).unwrap_err(),
            DetError::NonSquareOutput(2, 3)
        );
    }

    #[test]
    fn update_revert_and_singular_update() {
        let r = RationalRing;
        let fa = Formula::parse("A:1x1; A").unwrap();
        let mut tr = DetTracker::new(
            &r,
            &fa,
            &[from_i64(&r, &[&[2]])],
            EngineKind::Explicit,
            0.0,
            4,
        )
        .unwrap();
        let before = tr.snapshot();
        assert!(close(tr.update(0, 0, 0, &q(1)).unwrap(), 3.0));
        assert_eq!(tr.leaf_value(0).unwrap(), from_i64(&r, &[&[3]]));
        tr.revert().unwrap();
        assert_eq!(tr.snapshot(), before);
        assert_eq!(tr.current_det().to_f64(), 2.0);
        assert_eq!(tr.update(0, 0, 0, &q(-2)), Err(DetError::SingularUpdate));
        assert_eq!(tr.snapshot(), before);
        assert_eq!(tr.revert(), Err(DetError::EmptyUndoLog));
    }

    #[test]
    fn five_updates_five_reverts() {
        let f = FloatRing::<f64>::new();
        let fab = Formula::parse("A:2x2; B:2x2; A*B").unwrap();
        let a = from_i64(&f, &[&[3, 1], &[0, 2]]);
        let b = from_i64(&f, &[&[1, 0], &[1, 4]]);
        let mut tr = DetTracker::new(&f, &fab, &[a, b], EngineKind::TwoLevel, 1e-3, 8).unwrap();
        let initial = tr.current_det();
        let inv_before = tr.engines().0.inverse_matrix();
        for (leaf, i, j) in [(0, 0, 1), (1, 1, 0), (0, 1, 1), (1, 0, 0), (0, 0, 0)] {
            tr.update(leaf, i, j, &0.5).unwrap();
        }
        for _ in 0..5 {
            tr.revert().unwrap();
        }
        assert_eq!(tr.current_det(), initial);
        assert_eq!(tr.engines().0.inverse_matrix(), inv_before);
        assert!(close(initial, 24.0));
    }

    #[test]
    fn named_updates_fan_out() {
        let r = RationalRing;
        let f = Formula::parse("A:1x1; A*A").unwrap();
        let mut tr = DetTracker::new(
            &r,
            &f,
            &[from_i64(&r, &[&[2]]), from_i64(&r, &[&[2]])],
            EngineKind::Explicit,
            0.0,
            4,
        )
        .unwrap();
        assert!(close(tr.update_input("A", 0, 0, &q(1)).unwrap(), 9.0));
        assert_eq!(tr.undo_depth(), 1);
        tr.revert().unwrap();
        assert!(close(tr.current_det(), 4.0));
    }

    #[test]
    fn restart_clears_undo_log() {
        let f = FloatRing::<f64>::new();
        let fa = Formula::parse("A:1x1; A").unwrap();
        let mut tr = DetTracker::new(
            &f,
            &fa,
            &[from_i64(&f, &[&[2]])],
            EngineKind::Explicit,
            1e-3,
            8,
        )
        .unwrap();
        for t in 0..5 {
            tr.update(0, 0, 0, &1.0).unwrap();
            assert!(close(tr.current_det(), 3.0 + t as f64));
        }
        assert!(tr.snapshot().restarts >= 2);
        assert!(tr.undo_depth() <= 2);
    }

    /// Random invertible `n × n` inputs for `A*inv(B)` and an update stream.
    fn ratio_case(seed: u64, steps: usize) -> bool {
        let r = RationalRing;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Formula::parse("A:3x3; B:3x3; A*inv(B) + A").unwrap();
        let dom = |rng: &mut ChaCha8Rng| {
            Matrix::from_fn(3, 3, |i, j| {
                q(rng.random_range(-2..=2) + if i == j { 9 } else { 0 })
            })
        };
        let inputs = vec![dom(&mut rng), dom(&mut rng), dom(&mut rng)];
        let mut tr = DetTracker::new(&r, &f, &inputs, EngineKind::Lazy, 0.0, steps).unwrap();
        for _ in 0..steps {
            if rng.random_bool(0.3) && tr.undo_depth() > 0 {
                tr.revert().unwrap();
            } else {
                let leaf = rng.random_range(0..3);
                let _ = tr.update(
                    leaf,
                    rng.random_range(0..3),
                    rng.random_range(0..3),
                    &q(rng.random_range(-3..=3)),
                );
            }
            let n = &tr.construction().n;
            let nh = &tr.hat().n_hat;
            let ins: Vec<_> = (0..3).map(|l| tr.leaf_value(l).unwrap()).collect();
            let val = eval_exact(&f, &ins).unwrap();
            if det_bareiss(nh) != det_bareiss(n) * det_bareiss(&val) {
                return false;
            }
            let want = det_bareiss(&val);
            let got = tr.current_det();
            if want.is_zero() || i8::try_from(want.signum().to_i64().unwrap()).unwrap() != got.sign
            {
                return false;
            }
            let lw = want.abs().to_f64().unwrap().ln();
            if (got.log_abs - lw).abs() > 1e-9 {
                return false;
            }
        }
        true
    }

    #[test]
    fn ratio_identity_after_updates_and_reverts() {
        for seed in 0..5 {
            assert!(ratio_case(seed, 12), "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn qr_sign_and_magnitude(seed in any::<u64>(), n in 1usize..6) {
            let f = FloatRing::<f64>::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Matrix::from_fn(n, n, |_, _| q(rng.random_range(-4..=4)));
            let exact = det_cofactor(&a);
            let got = signed_logdet_qr(&f, &a.map(|x| x.to_f64().unwrap()));
            if exact.is_zero() {
                prop_assert!(got.is_err() || got.unwrap().log_abs < -20.0);
            } else {
                let got = got.unwrap();
                prop_assert_eq!(i64::from(got.sign), exact.signum().to_i64().unwrap());
                prop_assert!((got.log_abs - exact.abs().to_f64().unwrap().ln()).abs() < 1e-9);
            }
        }

        #[test]
        fn signed_logdet_mul_composes(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let p = SignedLogDet::from_f64(a).mul(&SignedLogDet::from_f64(b));
            prop_assert_eq!(p.sign, SignedLogDet::from_f64(a * b).sign);
            if a != 0.0 && b != 0.0 {
                prop_assert!((p.to_f64() - a * b).abs() <= 1e-9 * (a * b).abs());
            }
        }
    }
}
