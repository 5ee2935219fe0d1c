use crate::matrix::{identity, inverse_with_scale, matmul, zeros, Matrix};
use crate::scalar::Field;

use super::{approx_inverse, ceil_pow, DynInvError, EngineKind, EngineSnapshot, InverseEngine};

/// Exponents of the query-fast configuration.
pub const LAZY_MU: f64 = 0.528;
pub const LAZY_NU: f64 = 0.0;

/// `Z̃⁻¹ = M⁻¹ − Σ L⁽ⁱ⁾R⁽ⁱ⁾` with the pairs folded back into `M⁻¹` every
/// `⌈n^(μ-ν)⌉` updates.
#[derive(Debug, Clone)]
pub struct LazyState<F: Field> {
    field: F,
    z: Matrix<F::Elem>,
    minv: Matrix<F::Elem>,
    pairs: Vec<(Matrix<F::Elem>, Matrix<F::Elem>)>,
    /// Update columns since the last fold, for the stacked Woodbury flush.
    pending_u: Vec<Vec<F::Elem>>,
    pending_v: Vec<Vec<F::Elem>>,
    mu: f64,
    nu: f64,
    flush_every: usize,
    col_cap: usize,
    eps_step: f64,
    k: usize,
    flushes: usize,
    resets: usize,
}

impl<F: Field> LazyState<F> {
    pub fn new(
        field: &F,
        z: Matrix<F::Elem>,
        mu: f64,
        nu: f64,
        eps_step: f64,
    ) -> Result<Self, DynInvError> {
        assert!(
            (0.0..=1.0).contains(&nu) && nu <= mu && mu <= 1.0,
            "need 0 <= nu <= mu <= 1"
        );
        let n = z.rows();
        let minv = approx_inverse(field, &z)?;
        Ok(LazyState {
            field: field.clone(),
            z,
            minv,
            pairs: Vec::new(),
            pending_u: Vec::new(),
            pending_v: Vec::new(),
            mu,
            nu,
            flush_every: ceil_pow(n, mu - nu),
            col_cap: ceil_pow(n, nu),
            eps_step,
            k: 0,
            flushes: 0,
            resets: 0,
        })
    }

    pub fn flush_every(&self) -> usize {
        self.flush_every
    }

    /// Largest batch accepted by [`Self::update_columns`].
    pub fn column_cap(&self) -> usize {
        self.col_cap
    }

    pub fn pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.mu, self.nu)
    }

    pub fn ledger(&self) -> f64 {
        (self.k + 1) as f64 * self.eps_step
    }

    /// `Z̃⁻¹ X` through the implicit representation.
    fn apply_right(&self, x: &Matrix<F::Elem>) -> Matrix<F::Elem> {
        let f = &self.field;
        let mut out = matmul(f, &self.minv, x);
        for (l, r) in &self.pairs {
            let corr = matmul(f, l, &matmul(f, r, x));
            out = crate::matrix::sub(f, &out, &corr);
        }
        out
    }

    /// `Xᵀ Z̃⁻¹` through the implicit representation.
    fn apply_left(&self, xt: &Matrix<F::Elem>) -> Matrix<F::Elem> {
        let f = &self.field;
        let mut out = matmul(f, xt, &self.minv);
        for (l, r) in &self.pairs {
            let corr = matmul(f, &matmul(f, xt, l), r);
            out = crate::matrix::sub(f, &out, &corr);
        }
        out
    }

    /// `Z ← Z + U Vᵀ` for `n × c` matrices `U`, `V` with `c ≤ ⌈n^ν⌉`.
    pub fn update_columns(
        &mut self,
        u: &Matrix<F::Elem>,
        v: &Matrix<F::Elem>,
    ) -> Result<(), DynInvError> {
        let n = self.z.rows();
        if u.rows() != n || v.rows() != n || u.cols() != v.cols() {
            return Err(DynInvError::Shape("U and V must both be n x c".into()));
        }
        let c = u.cols();
        if c > self.col_cap {
            return Err(DynInvError::TooManyColumns {
                got: c,
                cap: self.col_cap,
            });
        }
        let f = self.field.clone();
        let vt = v.transpose();
        let l = self.apply_right(u);
        let w = self.apply_left(&vt);
        let vtl = matmul(&f, &vt, &l);
        let scale = vtl
            .as_slice()
            .iter()
            .map(|x| f.pivot_magnitude(x))
            .fold(1.0, f64::max);
        let core = crate::matrix::add(&f, &identity(&f, c), &vtl);
        let d = inverse_with_scale(&f, &core, scale).map_err(|_| DynInvError::SingularUpdate)?;
        let r = matmul(&f, &d, &w);

        let mut next = self.clone();
        next.z = crate::matrix::add(&f, &self.z, &matmul(&f, u, &vt));
        next.pairs.push((l, r));
        for b in 0..c {
            next.pending_u.push(u.column(b));
            next.pending_v.push(v.column(b));
        }
        next.k += 1;
        if next.k >= n {
            next.reset()?;
        } else if next.pairs.len() >= next.flush_every {
            next.flush()?;
        }
        *self = next;
        Ok(())
    }

    /// Folds the pending batch into `M⁻¹` with one stacked Woodbury step on
    /// the previous base.
    fn flush(&mut self) -> Result<(), DynInvError> {
        let f = self.field.clone();
        let n = self.z.rows();
        let p = self.pending_u.len();
        if p > 0 {
            let ucat = Matrix::from_fn(n, p, |i, b| self.pending_u[b][i].clone());
            let vcat_t = Matrix::from_fn(p, n, |b, i| self.pending_v[b][i].clone());
            let g = matmul(&f, &self.minv, &ucat);
            let h = matmul(&f, &vcat_t, &self.minv);
            let vg = matmul(&f, &vcat_t, &g);
            let scale = vg
                .as_slice()
                .iter()
                .map(|x| f.pivot_magnitude(x))
                .fold(1.0, f64::max);
            let core = crate::matrix::add(&f, &identity(&f, p), &vg);
            let d =
                inverse_with_scale(&f, &core, scale).map_err(|_| DynInvError::SingularUpdate)?;
            let corr = matmul(&f, &g, &matmul(&f, &d, &h));
            self.minv = crate::matrix::sub(&f, &self.minv, &corr);
        }
        self.pairs.clear();
        self.pending_u.clear();
        self.pending_v.clear();
        self.flushes += 1;
        Ok(())
    }

    pub fn reset(&mut self) -> Result<(), DynInvError> {
        self.minv = approx_inverse(&self.field, &self.z)?;
        self.pairs.clear();
        self.pending_u.clear();
        self.pending_v.clear();
        self.k = 0;
        self.resets += 1;
        Ok(())
    }

    /// Column `j` of `Z̃⁻¹`.
    pub fn query_column(&self, j: usize) -> Vec<F::Elem> {
        (0..self.z.rows()).map(|i| self.query_entry(i, j)).collect()
    }

    /// Row `i` of `Z̃⁻¹`.
    pub fn query_row(&self, i: usize) -> Vec<F::Elem> {
        let f = &self.field;
        let mut row = self.minv.row(i).to_vec();
        for (l, r) in &self.pairs {
            for (a, la) in l.row(i).iter().enumerate() {
                if f.is_zero(la) {
                    continue;
                }
                for (x, rb) in row.iter_mut().zip(r.row(a)) {
                    *x = f.sub(x, &f.mul(la, rb));
                }
            }
        }
        row
    }
}

impl<F: Field> InverseEngine<F> for LazyState<F> {
    fn side(&self) -> usize {
        self.z.rows()
    }

    fn update_entry(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError> {
        let f = &self.field;
        let n = self.z.rows();
        assert!(i < n && j < n, "entry ({i},{j}) out of range");
        let mut u = zeros(f, n, 1);
        u[(i, 0)] = delta.clone();
        let mut v = zeros(f, n, 1);
        v[(j, 0)] = f.one();
        self.update_columns(&u, &v)
    }

    fn query_entry(&self, i: usize, j: usize) -> F::Elem {
        let f = &self.field;
        let mut acc = self.minv[(i, j)].clone();
        for (l, r) in &self.pairs {
            for (a, la) in l.row(i).iter().enumerate() {
                if !f.is_zero(la) {
                    acc = f.sub(&acc, &f.mul(la, &r[(a, j)]));
                }
            }
        }
        acc
    }

    fn matrix(&self) -> &Matrix<F::Elem> {
        &self.z
    }

    fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            kind: EngineKind::Lazy,
            n: self.z.rows(),
            updates_since_reset: self.k,
            ledger: self.ledger(),
            pairs: self.pairs.len(),
            buffer_fill: 0,
            flushes: self.flushes,
            resets: self.resets,
        }
    }
}
