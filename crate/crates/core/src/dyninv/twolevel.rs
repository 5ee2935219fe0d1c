use crate::matrix::{zeros, Matrix};
use crate::scalar::Field;

use super::{
    ceil_pow, DynInvError, EngineKind, EngineSnapshot, InverseEngine, LazyState, WoodburyState,
};

pub const TWO_LEVEL_MU: f64 = 0.86118267;
pub const TWO_LEVEL_NU: f64 = 0.54294416;

/// Entry updates buffered as `Z = M + U Vᵀ` with `U`, `V` of width
/// `w = ⌈n^ν⌉`. The value maintained is
/// `M⁻¹ − (M⁻¹U) C̃⁻¹ (VᵀM⁻¹)` where `C = I + VᵀM⁻¹U` is tracked by a small
/// explicit engine. A full buffer is handed to the base as one batch.
#[derive(Debug, Clone)]
pub struct TwoLevelState<F: Field> {
    field: F,
    z: Matrix<F::Elem>,
    base: LazyState<F>,
    width: usize,
    /// Column `b` of `U` is `δ_b e_{rows[b]}`; column `b` of `V` is `e_{cols[b]}`.
    buf_rows: Vec<usize>,
    buf_deltas: Vec<F::Elem>,
    buf_cols: Vec<usize>,
    /// `M⁻¹ u_b` and `v_bᵀ M⁻¹` for each buffered update.
    minv_u: Vec<Vec<F::Elem>>,
    vt_minv: Vec<Vec<F::Elem>>,
    core: WoodburyState<F>,
    eps_step: f64,
    k: usize,
    flushes: usize,
    resets: usize,
}

impl<F: Field> TwoLevelState<F> {
    pub fn new(field: &F, z: Matrix<F::Elem>, eps_step: f64) -> Result<Self, DynInvError> {
        Self::with_exponents(field, z, TWO_LEVEL_MU, TWO_LEVEL_NU, eps_step)
    }

    pub fn with_exponents(
        field: &F,
        z: Matrix<F::Elem>,
        mu: f64,
        nu: f64,
        eps_step: f64,
    ) -> Result<Self, DynInvError> {
        let n = z.rows();
        let width = ceil_pow(n, nu);
        let base = LazyState::new(field, z.clone(), mu, nu, eps_step)?;
        Ok(TwoLevelState {
            field: field.clone(),
            z,
            base,
            width,
            buf_rows: Vec::new(),
            buf_deltas: Vec::new(),
            buf_cols: Vec::new(),
            minv_u: Vec::new(),
            vt_minv: Vec::new(),
            core: WoodburyState::identity(field, width, eps_step),
            eps_step,
            k: 0,
            flushes: 0,
            resets: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn buffer_fill(&self) -> usize {
        self.buf_rows.len()
    }

    pub fn base(&self) -> &LazyState<F> {
        &self.base
    }

    /// The tracked small matrix `C` (identity on unused slots).
    pub fn core_matrix(&self) -> &Matrix<F::Elem> {
        self.core.matrix()
    }

    pub fn ledger(&self) -> f64 {
        (self.k + 1) as f64 * self.eps_step
    }

    fn try_update(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError> {
        let f = self.field.clone();
        let n = self.z.rows();
        let w = self.width;
        let b = self.buf_rows.len();
        let mu_b: Vec<F::Elem> = self
            .base
            .query_column(i)
            .iter()
            .map(|x| f.mul(x, delta))
            .collect();
        let vm_b = self.base.query_row(j);

        // Column b of C: entries v_aᵀ M⁻¹ u_b for the earlier slots. Row b of
        // C is untouched, so this step never makes C singular.
        let mut col = vec![f.zero(); w];
        for (a, &ja) in self.buf_cols.iter().enumerate() {
            col[a] = mu_b[ja].clone();
        }
        let mut e_b = vec![f.zero(); w];
        e_b[b] = f.one();
        self.core.update_rank1(&col, &e_b)?;

        // Row b: v_bᵀ M⁻¹ u_a for a ≤ b.
        let mut row = vec![f.zero(); w];
        for (a, mu_a) in self.minv_u.iter().enumerate() {
            row[a] = mu_a[j].clone();
        }
        row[b] = mu_b[j].clone();
        self.core.update_rank1(&e_b, &row)?;

        self.buf_rows.push(i);
        self.buf_deltas.push(delta.clone());
        self.buf_cols.push(j);
        self.minv_u.push(mu_b);
        self.vt_minv.push(vm_b);
        self.z[(i, j)] = f.add(&self.z[(i, j)], delta);
        self.k += 1;

        if self.k >= n {
            self.reset()?;
        } else if self.buf_rows.len() == w {
            self.flush()?;
        }
        Ok(())
    }

    fn clear_buffer(&mut self) {
        self.buf_rows.clear();
        self.buf_deltas.clear();
        self.buf_cols.clear();
        self.minv_u.clear();
        self.vt_minv.clear();
        self.core = WoodburyState::identity(&self.field, self.width, self.eps_step);
    }

    fn flush(&mut self) -> Result<(), DynInvError> {
        let f = self.field.clone();
        let n = self.z.rows();
        let c = self.buf_rows.len();
        let mut u = zeros(&f, n, c);
        let mut v = zeros(&f, n, c);
        for b in 0..c {
            u[(self.buf_rows[b], b)] = self.buf_deltas[b].clone();
            v[(self.buf_cols[b], b)] = f.one();
        }
        self.base.update_columns(&u, &v)?;
        self.clear_buffer();
        self.flushes += 1;
        Ok(())
    }

    pub fn reset(&mut self) -> Result<(), DynInvError> {
        let (mu, nu) = self.base.exponents();
        self.base = LazyState::new(&self.field, self.z.clone(), mu, nu, self.eps_step)?;
        self.clear_buffer();
        self.k = 0;
        self.resets += 1;
        Ok(())
    }
}

impl<F: Field> InverseEngine<F> for TwoLevelState<F> {
    fn side(&self) -> usize {
        self.z.rows()
    }

    fn update_entry(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError> {
        let n = self.z.rows();
        assert!(i < n && j < n, "entry ({i},{j}) out of range");
        let backup = self.clone();
        let out = self.try_update(i, j, delta);
        if out.is_err() {
            *self = backup;
        }
        out
    }

    fn query_entry(&self, i: usize, j: usize) -> F::Elem {
        let f = &self.field;
        let mut acc = self.base.query_entry(i, j);
        let fill = self.buf_rows.len();
        if fill == 0 {
            return acc;
        }
        let cinv = self.core.inverse();
        for a in 0..fill {
            let left = &self.minv_u[a][i];
            if f.is_zero(left) {
                continue;
            }
            let mut inner = f.zero();
            for b in 0..fill {
                inner = f.mul_add(&inner, &cinv[(a, b)], &self.vt_minv[b][j]);
            }
            acc = f.sub(&acc, &f.mul(left, &inner));
        }
        acc
    }

    fn matrix(&self) -> &Matrix<F::Elem> {
        &self.z
    }

    fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            kind: EngineKind::TwoLevel,
            n: self.z.rows(),
            updates_since_reset: self.k,
            ledger: self.ledger(),
            pairs: self.base.pairs(),
            buffer_fill: self.buf_rows.len(),
            flushes: self.flushes,
            resets: self.resets,
        }
    }
}
