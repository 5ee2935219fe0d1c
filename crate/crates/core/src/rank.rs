//! Rank of a formula's value over `Z_p` under entry updates.
//!
//! For `f` with `n × n` output, the embedding
//!
//! ```text
//! g = P·f·Q + R_k,    g = [[f, X, 0], [Y, 0, I], [0, I, I_k]]
//! ```
//!
//! with uniformly random `X`, `Y` is nonsingular (with high probability)
//! exactly when `rank f ≥ n − k`. The smallest such `k` is tracked by
//! toggling diagonal ones of `I_k` after each update, and `det g` is kept
//! exactly as `det N̂ / det N` of `g`'s reduction matrices.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::{build, build_hat, ConstructError, Construction};
use crate::formula::{DimTable, Expr, Formula};
use crate::matrix::{det, inverse, zeros, Matrix};
use crate::scalar::{Field, FieldElem, PrimeField, Ring, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RankError {
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("formula output is {0}x{1}, not square")]
    NonSquareOutput(usize, usize),
    #[error("update makes the determinant zero")]
    ZeroDeterminant,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("update makes an inverted subexpression singular")]
    SingularInversion,
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// An exact inverse and determinant over `Z_p`, updated by
/// Sherman–Morrison and the determinant lemma.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDetState {
    field: PrimeField,
    z: Matrix<FieldElem>,
    zinv: Matrix<FieldElem>,
    det: FieldElem,
}

impl FieldDetState {
    pub fn new(field: &PrimeField, z: Matrix<FieldElem>) -> Result<Self, RankError> {
        let d = det(field, &z);
        if field.is_zero(&d) {
            return Err(RankError::SingularMatrix);
        }
        let zinv = inverse(field, &z).map_err(|_| RankError::SingularMatrix)?;
        Ok(FieldDetState {
            field: field.clone(),
            z,
            zinv,
            det: d,
        })
    }

    pub fn det(&self) -> FieldElem {
        self.det
    }

    pub fn matrix(&self) -> &Matrix<FieldElem> {
        &self.z
    }

    pub fn inverse(&self) -> &Matrix<FieldElem> {
        &self.zinv
    }

    /// `1 + δ·Z⁻¹[c, r]`, the determinant factor of `Z[r, c] += δ`.
    pub fn entry_factor(&self, r: usize, c: usize, delta: &FieldElem) -> FieldElem {
        let f = &self.field;
        f.mul_add(&f.one(), delta, &self.zinv[(c, r)])
    }

    /// `Z ← Z + u vᵀ`. Returns the new determinant, or `ZeroDeterminant`
    /// with the state untouched.
    pub fn rank1(&mut self, u: &[FieldElem], v: &[FieldElem]) -> Result<FieldElem, RankError> {
        let f = self.field.clone();
        let n = self.z.rows();
        assert!(
            u.len() == n && v.len() == n,
            "update vectors must have length {n}"
        );
        let zu = crate::matrix::matvec(&f, &self.zinv, u);
        let vz = crate::matrix::vecmat(&f, v, &self.zinv);
        let c = f.add(&f.one(), &crate::matrix::dot(&f, v, &zu));
        if f.is_zero(&c) {
            return Err(RankError::ZeroDeterminant);
        }
        for (a, ua) in u.iter().enumerate() {
            for (b, vb) in v.iter().enumerate() {
                self.z[(a, b)] = f.mul_add(&self.z[(a, b)], ua, vb);
            }
        }
        self.commit(&zu, &vz, &c);
        Ok(self.det)
    }

    /// `Z[r, c] += δ`.
    pub fn update_entry(
        &mut self,
        r: usize,
        c: usize,
        delta: &FieldElem,
    ) -> Result<FieldElem, RankError> {
        let f = self.field.clone();
        let factor = self.entry_factor(r, c, delta);
        if f.is_zero(&factor) {
            return Err(RankError::ZeroDeterminant);
        }
        let zu: Vec<FieldElem> = (0..self.z.rows())
            .map(|a| f.mul(&self.zinv[(a, r)], delta))
            .collect();
        let vz = self.zinv.row(c).to_vec();
        self.z[(r, c)] = f.add(&self.z[(r, c)], delta);
        self.commit(&zu, &vz, &factor);
        Ok(self.det)
    }

    fn commit(&mut self, zu: &[FieldElem], vz: &[FieldElem], c: &FieldElem) {
        let f = &self.field;
        let inv_c = f.inv(c).expect("nonzero factor");
        for (a, zua) in zu.iter().enumerate() {
            if f.is_zero(zua) {
                continue;
            }
            let s = f.mul(zua, &inv_c);
            for (x, vzb) in self.zinv.row_mut(a).iter_mut().zip(vz) {
                *x = f.sub(x, &f.mul(&s, vzb));
            }
        }
        self.det = f.mul(&self.det, c);
    }
}

/// Report view of a rank tracker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankSnapshot {
    pub n: usize,
    pub k: usize,
    pub rank: usize,
    pub modulus: u64,
    pub seed: u64,
    pub toggles: usize,
    pub updates: usize,
}

/// Maintains `rank f` over `Z_p`.
#[derive(Debug, Clone)]
pub struct RankState {
    field: PrimeField,
    n: usize,
    formula: Formula,
    g: Formula,
    cons: Construction<FieldElem>,
    /// Present only when `f` contains inversions; otherwise `det N = ±1`
    /// for every input.
    det_n: Option<FieldDetState>,
    det_hat: FieldDetState,
    k: usize,
    seed: u64,
    toggles: usize,
    updates: usize,
}

/// Picks a name not declared in `dims`.
fn fresh_name(dims: &DimTable, base: &str) -> String {
    let mut name = base.to_string();
    while dims.contains_key(&name) {
        name.push('_');
    }
    name
}

impl RankState {
    /// `inputs` holds one matrix per leaf of `f`.
    pub fn new(
        field: &PrimeField,
        f: &Formula,
        inputs: &[Matrix<FieldElem>],
        seed: u64,
    ) -> Result<Self, RankError> {
        let (a, b) = f.check_dims().map_err(ConstructError::from)?;
        if a != b {
            return Err(RankError::NonSquareOutput(a, b));
        }
        let n = a;
        let mut dims = f.dims.clone();
        let (p, q, r) = (
            fresh_name(&dims, "P"),
            fresh_name(&dims, "Q"),
            fresh_name(&dims, "R"),
        );
        dims.insert(p.clone(), (3 * n, n));
        dims.insert(q.clone(), (n, 3 * n));
        dims.insert(r.clone(), (3 * n, 3 * n));
        let root = Expr::add(
            Expr::mul(Expr::mul(Expr::input(&p), f.root.clone()), Expr::input(&q)),
            Expr::input(&r),
        );
        let g = Formula::new(root, dims).map_err(ConstructError::from)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let one = field.one();
        let mut pm = zeros(field, 3 * n, n);
        let mut qm = zeros(field, n, 3 * n);
        let mut rm = zeros(field, 3 * n, 3 * n);
        for t in 0..n {
            pm[(t, t)] = one;
            qm[(t, t)] = one;
            for s in 0..n {
                rm[(t, n + s)] = field.sample(|| rng.next_u64());
                rm[(n + t, s)] = field.sample(|| rng.next_u64());
            }
            rm[(n + t, 2 * n + t)] = one;
            rm[(2 * n + t, n + t)] = one;
            rm[(2 * n + t, 2 * n + t)] = one;
        }
        let mut all = Vec::with_capacity(inputs.len() + 3);
        all.push(pm);
        all.extend(inputs.iter().cloned());
        all.push(qm);
        all.push(rm);
        let cons = build(field, &g, &all)?;
        let det_n = if f.has_inversions() {
            Some(FieldDetState::new(field, cons.n.clone())?)
        } else {
            None
        };
        let hat = build_hat(field, &cons)?;
        let det_hat = FieldDetState::new(field, hat.n_hat)
            .map_err(|_| RankError::Internal("embedding is singular with k = n".into()))?;
        let mut st = RankState {
            field: field.clone(),
            n,
            formula: f.clone(),
            g,
            cons,
            det_n,
            det_hat,
            k: n,
            seed,
            toggles: 0,
            updates: 0,
        };
        while st.k > 0 && st.toggle(st.k - 1, false).is_ok() {
            st.k -= 1;
        }
        Ok(st)
    }

    pub fn rank(&self) -> usize {
        self.n - self.k
    }

    /// Current `k`, the number of ones in `I_k`.
    pub fn defect(&self) -> usize {
        self.k
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// The embedding formula `g`.
    pub fn embedding(&self) -> &Formula {
        &self.g
    }

    /// Reduction data of `g`; leaf 0 is `P`, then `f`'s leaves, then `Q`, `R`.
    pub fn construction(&self) -> &Construction<FieldElem> {
        &self.cons
    }

    /// `det N̂` of `g`.
    pub fn det_hat(&self) -> FieldElem {
        self.det_hat.det()
    }

    /// `det g = det N̂ / det N`.
    pub fn det_g(&self) -> FieldElem {
        let f = &self.field;
        match &self.det_n {
            None => {
                let d = det(f, &self.cons.n);
                f.mul(&self.det_hat.det(), &f.inv(&d).expect("N is invertible"))
            }
            Some(s) => f.mul(
                &self.det_hat.det(),
                &f.inv(&s.det()).expect("N is invertible"),
            ),
        }
    }

    /// Current value of leaf `leaf` of `f`.
    pub fn leaf_value(&self, leaf: usize) -> Result<Matrix<FieldElem>, RankError> {
        Ok(self.cons.leaf_value(leaf + 1)?)
    }

    fn r_leaf(&self) -> usize {
        self.cons.leaf_blocks.len() - 1
    }

    /// One entry update of `g`'s matrices, committed only when both
    /// determinants stay nonzero.
    fn try_entry(&mut self, r: usize, c: usize, delta: &FieldElem) -> Result<(), RankError> {
        let f = &self.field;
        if let Some(s) = &self.det_n {
            if f.is_zero(&s.entry_factor(r, c, delta)) {
                return Err(RankError::SingularInversion);
            }
        }
        if f.is_zero(&self.det_hat.entry_factor(r, c, delta)) {
            return Err(RankError::ZeroDeterminant);
        }
        if let Some(s) = self.det_n.as_mut() {
            s.update_entry(r, c, delta)?;
        }
        self.det_hat.update_entry(r, c, delta)?;
        self.cons.n[(r, c)] = f.add(&self.cons.n[(r, c)], delta);
        Ok(())
    }

    /// Sets diagonal entry `t` of `I_k` to `on`.
    fn toggle(&mut self, t: usize, on: bool) -> Result<(), RankError> {
        let d = 2 * self.n + t;
        let (r, c) = self.cons.entry_position(self.r_leaf(), d, d)?;
        let delta = if on {
            self.field.one()
        } else {
            self.field.from_i64(-1)
        };
        self.try_entry(r, c, &delta)?;
        self.toggles += 1;
        Ok(())
    }

    /// Sets entry `(i, j)` of leaf `leaf` of `f` to `value` and returns the
    /// new rank.
    pub fn update(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        value: &FieldElem,
    ) -> Result<usize, RankError> {
        if leaf + 1 >= self.r_leaf() - 1 {
            return Err(ConstructError::UnknownLeaf(leaf).into());
        }
        let (r, c) = self.cons.entry_position(leaf + 1, i, j)?;
        let delta = self.field.sub(value, &self.cons.n[(r, c)]);
        self.updates += 1;
        if self.field.is_zero(&delta) {
            return Ok(self.rank());
        }
        loop {
            match self.try_entry(r, c, &delta) {
                Ok(()) => {
                    if self.k > 0 && self.toggle(self.k - 1, false).is_ok() {
                        self.k -= 1;
                    }
                    return Ok(self.rank());
                }
                Err(RankError::ZeroDeterminant) => {
                    if self.k == self.n {
                        return Err(RankError::Internal("no room to raise k".into()));
                    }
                    self.toggle(self.k, true)
                        .map_err(|_| RankError::Internal("raising k made g singular".into()))?;
                    self.k += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Sets entry `(i, j)` of every leaf of `f` named `name`.
    pub fn update_input(
        &mut self,
        name: &str,
        i: usize,
        j: usize,
        value: &FieldElem,
    ) -> Result<usize, RankError> {
        let leaves: Vec<usize> = self
            .formula
            .leaves()
            .into_iter()
            .filter(|l| l.name == name)
            .map(|l| l.id)
            .collect();
        if leaves.is_empty() {
            return Err(ConstructError::UnknownInput(name.to_string()).into());
        }
        for l in leaves {
            self.update(l, i, j, value)?;
        }
        Ok(self.rank())
    }

    /// Resamples `X`, `Y` and rebuilds from the current inputs.
    pub fn reseed(&mut self, seed: u64) -> Result<(), RankError> {
        let leaves = self.formula.leaf_count();
        let inputs = (0..leaves)
            .map(|l| self.leaf_value(l))
            .collect::<Result<Vec<_>, _>>()?;
        let (toggles, updates) = (self.toggles, self.updates);
        *self = RankState::new(&self.field, &self.formula, &inputs, seed)?;
        self.toggles += toggles;
        self.updates = updates;
        Ok(())
    }

    pub fn snapshot(&self) -> RankSnapshot {
        RankSnapshot {
            n: self.n,
            k: self.k,
            rank: self.rank(),
            modulus: self.field.modulus(),
            seed: self.seed,
            toggles: self.toggles,
            updates: self.updates,
        }
    }

    /// `g`'s value recomputed from scratch (for checks).
    pub fn embedding_value(&self) -> Result<Matrix<FieldElem>, RankError> {
        let ninv = inverse(&self.field, &self.cons.n).map_err(|_| RankError::SingularMatrix)?;
        Ok(self.cons.extract_value(&ninv))
    }
}
