use crate::matrix::Matrix;
use crate::scalar::Field;

use super::{approx_inverse, DynInvError, EngineKind, EngineSnapshot, InverseEngine};

/// Explicitly stored inverse maintained by Sherman–Morrison steps.
#[derive(Debug, Clone)]
pub struct WoodburyState<F: Field> {
    field: F,
    z: Matrix<F::Elem>,
    zinv: Matrix<F::Elem>,
    eps_step: f64,
    k: usize,
    resets: usize,
}

impl<F: Field> WoodburyState<F> {
    pub fn new(field: &F, z: Matrix<F::Elem>, eps_step: f64) -> Result<Self, DynInvError> {
        let zinv = approx_inverse(field, &z)?;
        Ok(WoodburyState {
            field: field.clone(),
            z,
            zinv,
            eps_step,
            k: 0,
            resets: 0,
        })
    }

    pub fn identity(field: &F, n: usize, eps_step: f64) -> Self {
        let z = crate::matrix::identity(field, n);
        WoodburyState {
            field: field.clone(),
            zinv: z.clone(),
            z,
            eps_step,
            k: 0,
            resets: 0,
        }
    }

    pub fn inverse(&self) -> &Matrix<F::Elem> {
        &self.zinv
    }

    pub fn updates_since_reset(&self) -> usize {
        self.k
    }

    /// `(k+1)·ε'`.
    pub fn ledger(&self) -> f64 {
        (self.k + 1) as f64 * self.eps_step
    }

    fn magnitude(&self, x: &F::Elem) -> f64 {
        self.field.pivot_magnitude(x)
    }

    /// `Z ← Z + u vᵀ`.
    pub fn update_rank1(&mut self, u: &[F::Elem], v: &[F::Elem]) -> Result<(), DynInvError> {
        let n = self.z.rows();
        if u.len() != n || v.len() != n {
            return Err(DynInvError::Shape(format!(
                "rank-1 update vectors must have length {n}"
            )));
        }
        let field = self.field.clone();
        let f = &field;
        let zu = crate::matrix::matvec(f, &self.zinv, u);
        let vz = crate::matrix::vecmat(f, v, &self.zinv);
        let vzu = crate::matrix::dot(f, v, &zu);
        self.apply(zu, vz, vzu, |z| {
            for (a, ua) in u.iter().enumerate() {
                if f.is_zero(ua) {
                    continue;
                }
                for (b, vb) in v.iter().enumerate() {
                    if !f.is_zero(vb) {
                        z[(a, b)] = f.mul_add(&z[(a, b)], ua, vb);
                    }
                }
            }
        })
    }

    /// Commits `Z̃⁻¹ ← Z̃⁻¹ − zu·vzᵀ / (1 + vzu)` after the singularity test.
    fn apply(
        &mut self,
        zu: Vec<F::Elem>,
        vz: Vec<F::Elem>,
        vzu: F::Elem,
        update_z: impl FnOnce(&mut Matrix<F::Elem>),
    ) -> Result<(), DynInvError> {
        let f = self.field.clone();
        let denom = f.add(&f.one(), &vzu);
        if f.is_negligible(&denom, self.magnitude(&vzu).max(1.0)) {
            return Err(DynInvError::SingularUpdate);
        }
        let n = self.z.rows();
        let mut z = self.z.clone();
        update_z(&mut z);
        let zinv = if self.k + 1 >= n {
            approx_inverse(&f, &z)?
        } else {
            let inv_d = f.inv(&denom).map_err(|_| DynInvError::SingularUpdate)?;
            let mut zinv = self.zinv.clone();
            for (a, zua) in zu.iter().enumerate() {
                if f.is_zero(zua) {
                    continue;
                }
                let s = f.mul(zua, &inv_d);
                for (x, vzb) in zinv.row_mut(a).iter_mut().zip(&vz) {
                    *x = f.sub(x, &f.mul(&s, vzb));
                }
            }
            zinv
        };
        self.z = z;
        self.zinv = zinv;
        if self.k + 1 >= n {
            self.k = 0;
            self.resets += 1;
        } else {
            self.k += 1;
        }
        Ok(())
    }

    /// Recomputes the inverse from the tracked `Z`.
    pub fn reset(&mut self) -> Result<(), DynInvError> {
        self.zinv = approx_inverse(&self.field, &self.z)?;
        self.k = 0;
        self.resets += 1;
        Ok(())
    }
}

impl<F: Field> InverseEngine<F> for WoodburyState<F> {
    fn side(&self) -> usize {
        self.z.rows()
    }

    fn update_entry(&mut self, i: usize, j: usize, delta: &F::Elem) -> Result<(), DynInvError> {
        let f = self.field.clone();
        let n = self.z.rows();
        assert!(i < n && j < n, "entry ({i},{j}) out of range");
        let zu: Vec<F::Elem> = (0..n).map(|a| f.mul(&self.zinv[(a, i)], delta)).collect();
        let vz = self.zinv.row(j).to_vec();
        let vzu = zu[j].clone();
        self.apply(zu, vz, vzu, |z| z[(i, j)] = f.add(&z[(i, j)], delta))
    }

    fn query_entry(&self, i: usize, j: usize) -> F::Elem {
        self.zinv[(i, j)].clone()
    }

    fn matrix(&self) -> &Matrix<F::Elem> {
        &self.z
    }

    fn inverse_matrix(&self) -> Matrix<F::Elem> {
        self.zinv.clone()
    }

    fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            kind: EngineKind::Explicit,
            n: self.z.rows(),
            updates_since_reset: self.k,
            ledger: self.ledger(),
            pairs: 0,
            buffer_fill: 0,
            flushes: 0,
            resets: self.resets,
        }
    }
}
