//! A formula's value kept up to date under entry updates of its inputs,
//! read as `(N⁻¹)[I, J]` from a dynamic inverse engine over `N`.

use serde::Serialize;

use crate::construct::{build, ConstructError, Construction};
use crate::dyninv::{DynInvError, Engine, EngineKind, EngineSnapshot, InverseEngine};
use crate::formula::Formula;
use crate::matrix::Matrix;
use crate::scalar::Field;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaintainError {
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    DynInv(#[from] DynInvError),
}

#[derive(Debug, Clone)]
pub struct FormulaMaintainer<F: Field> {
    field: F,
    cons: Construction<F::Elem>,
    engine: Engine<F>,
    updates: usize,
}

impl<F: Field> FormulaMaintainer<F> {
    /// `inputs` holds one matrix per leaf.
    pub fn new(
        field: &F,
        f: &Formula,
        inputs: &[Matrix<F::Elem>],
        kind: EngineKind,
        eps_step: f64,
    ) -> Result<Self, MaintainError> {
        let cons = build(field, f, inputs)?;
        let engine = Engine::new(kind, field, cons.n.clone(), eps_step)?;
        Ok(FormulaMaintainer {
            field: field.clone(),
            cons,
            engine,
            updates: 0,
        })
    }

    pub fn construction(&self) -> &Construction<F::Elem> {
        &self.cons
    }

    pub fn engine(&self) -> &Engine<F> {
        &self.engine
    }

    pub fn output_shape(&self) -> (usize, usize) {
        self.cons.output_shape()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn leaf_value(&self, leaf: usize) -> Result<Matrix<F::Elem>, MaintainError> {
        Ok(self.cons.leaf_value(leaf)?)
    }

    /// Adds `delta` to entry `(i, j)` of leaf `leaf`.
    pub fn update(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        delta: &F::Elem,
    ) -> Result<(), MaintainError> {
        let pos = self.cons.entry_position(leaf, i, j)?;
        self.apply(&[pos], delta)
    }

    /// Adds `delta` to entry `(i, j)` of every leaf named `name`.
    pub fn update_input(
        &mut self,
        name: &str,
        i: usize,
        j: usize,
        delta: &F::Elem,
    ) -> Result<(), MaintainError> {
        let leaves = self.cons.leaves_named(name);
        if leaves.is_empty() {
            return Err(ConstructError::UnknownInput(name.to_string()).into());
        }
        let pos = leaves
            .iter()
            .map(|&l| self.cons.entry_position(l, i, j))
            .collect::<Result<Vec<_>, _>>()?;
        self.apply(&pos, delta)
    }

    /// Sets entry `(i, j)` of leaf `leaf` to `value`.
    pub fn set_entry(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        value: &F::Elem,
    ) -> Result<(), MaintainError> {
        let (r, c) = self.cons.entry_position(leaf, i, j)?;
        let delta = self.field.sub(value, &self.cons.n[(r, c)]);
        self.apply(&[(r, c)], &delta)
    }

    fn apply(&mut self, pos: &[(usize, usize)], delta: &F::Elem) -> Result<(), MaintainError> {
        if pos.len() > 1 {
            let backup = self.engine.clone();
            for &(r, c) in pos {
                if let Err(e) = self.engine.update_entry(r, c, delta) {
                    self.engine = backup;
                    return Err(e.into());
                }
            }
        } else if let Some(&(r, c)) = pos.first() {
            self.engine.update_entry(r, c, delta)?;
        }
        for &(r, c) in pos {
            self.cons.n[(r, c)] = self.field.add(&self.cons.n[(r, c)], delta);
        }
        self.updates += 1;
        Ok(())
    }

    /// Entry `(i, j)` of the formula's value.
    pub fn query(&self, i: usize, j: usize) -> F::Elem {
        let (a, b) = self.output_shape();
        assert!(i < a && j < b, "entry ({i},{j}) out of range");
        self.engine
            .query_entry(self.cons.i_set[i], self.cons.j_set[j])
    }

    pub fn value(&self) -> Matrix<F::Elem> {
        let (a, b) = self.output_shape();
        Matrix::from_fn(a, b, |i, j| self.query(i, j))
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        self.engine.snapshot()
    }
}

/// Serializable summary of a maintainer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaintainSnapshot {
    pub side: usize,
    pub output: (usize, usize),
    pub updates: usize,
    pub engine: EngineSnapshot,
}

impl<F: Field> FormulaMaintainer<F> {
    pub fn summary(&self) -> MaintainSnapshot {
        MaintainSnapshot {
            side: self.cons.side(),
            output: self.output_shape(),
            updates: self.updates,
            engine: self.engine.snapshot(),
        }
    }
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    use super::*;
    use crate::matrix::from_i64;
    use crate::oracle::eval_exact;
    use crate::scalar::RationalRing;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn inverse_of_a_leaf() {
        let r = RationalRing;
        let f = Formula::parse("A:2x2; inv(A)").unwrap();
        let a = from_i64(&r, &[&[2, 1], &[1, 1]]);
        let mut m = FormulaMaintainer::new(&r, &f, &[a], EngineKind::TwoLevel, 0.0).unwrap();
        assert_eq!(m.value(), from_i64(&r, &[&[1, -1], &[-1, 2]]));
        m.set_entry(0, 0, 0, &q(3)).unwrap();
        let want = eval_exact(&f, &[m.leaf_value(0).unwrap()]).unwrap();
        assert_eq!(m.value(), want);
    }

    #[test]
    fn named_updates_touch_every_copy() {
        let r = RationalRing;
        let f = Formula::parse("A:2x2; B:2x2; A*B + A").unwrap();
        let a = from_i64(&r, &[&[1, 0], &[0, 1]]);
        let b = from_i64(&r, &[&[1, 2], &[3, 4]]);
        let mut m =
            FormulaMaintainer::new(&r, &f, &[a.clone(), b.clone(), a], EngineKind::Lazy, 0.0)
                .unwrap();
        m.update_input("A", 0, 1, &q(5)).unwrap();
        let ins: Vec<_> = (0..3).map(|l| m.leaf_value(l).unwrap()).collect();
        assert_eq!(ins[0], ins[2]);
        assert_eq!(m.value(), eval_exact(&f, &ins).unwrap());
        assert_eq!(m.updates(), 1);
        assert!(m.update_input("Z", 0, 0, &q(1)).is_err());
    }

    #[test]
    fn singular_update_leaves_state() {
        let r = RationalRing;
        let f = Formula::parse("A:1x1; inv(A)").unwrap();
        let mut m =
            FormulaMaintainer::new(&r, &f, &[from_i64(&r, &[&[2]])], EngineKind::Explicit, 0.0)
                .unwrap();
        assert_eq!(
            m.update(0, 0, 0, &q(-2)),
            Err(MaintainError::DynInv(DynInvError::SingularUpdate))
        );
        assert_eq!(m.value(), from_i64(&r, &[&[1]]).map(|x| x / q(2)));
    }
}
