//! Compiling a formula into a square matrix `N` with index lists `I`, `J`
//! such that `(N⁻¹)[I, J]` is the formula's value.
//!
//! Gate layouts (children are placed as principal diagonal blocks):
//!
//! * input `A` (n×m): `[[I_n, A], [0, -I_m]]`, `I = 0..n`, `J = n..n+m`.
//! * `inv(w)`: `[[N_w, -E_{·,J_w}], [E_{I_w,·}, 0]]`, `I = J` = the new rows.
//! * `l ± r`: `diag(N_l, N_r)` bordered by two selector blocks; the value
//!   block sits at `(I, J)` of the bordered Schur complement.
//! * `l * r`: `[[N_l, -E_{J_l, I_r}], [0, N_r]]`, `I = I_l`, `J = J_r`.
//!
//! `E` denotes a 0/1 selector matrix.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::formula::{Expr, Formula, FormulaError};
use crate::matrix::{zeros, Matrix};
use crate::scalar::{RealField, Ring};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("expected {expected} leaf inputs, got {got}")]
    LeafCount { expected: usize, got: usize },
    #[error("leaf {leaf} expects a {expected:?} matrix, got {got:?}")]
    InputShape {
        leaf: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("no input named {0:?}")]
    UnknownInput(String),
    #[error("unknown leaf id {0}")]
    UnknownLeaf(usize),
    #[error("formula output is {0}x{1}, not square")]
    NonSquareOutput(usize, usize),
}

/// Where a leaf's input matrix sits inside `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LeafBlock {
    pub leaf: usize,
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

/// An inversion gate: its child occupies the principal window
/// `offset..offset+size` of `N`, with the child's value at `(I', J')`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InversionRecord {
    pub path: String,
    pub offset: usize,
    pub size: usize,
    pub child_i: Vec<usize>,
    pub child_j: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction<E> {
    pub n: Matrix<E>,
    pub i_set: Vec<usize>,
    pub j_set: Vec<usize>,
    pub leaf_blocks: Vec<LeafBlock>,
    pub leaf_names: Vec<String>,
    pub inversions: Vec<InversionRecord>,
    pub gate_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatConstruction<E> {
    pub n_hat: Matrix<E>,
    /// Side of the underlying `N`.
    pub base: usize,
}

struct Part<E> {
    mat: Matrix<E>,
    i: Vec<usize>,
    j: Vec<usize>,
    leaves: Vec<LeafBlock>,
    invs: Vec<InversionRecord>,
}

impl<E: Clone> Part<E> {
    fn shifted_into(
        self,
        target: &mut Matrix<E>,
        off: usize,
        leaves: &mut Vec<LeafBlock>,
        invs: &mut Vec<InversionRecord>,
    ) {
        target.set_block(off, off, &self.mat);
        leaves.extend(self.leaves.into_iter().map(|b| LeafBlock {
            row: b.row + off,
            col: b.col + off,
            ..b
        }));
        invs.extend(self.invs.into_iter().map(|r| InversionRecord {
            offset: r.offset + off,
            child_i: r.child_i.iter().map(|x| x + off).collect(),
            child_j: r.child_j.iter().map(|x| x + off).collect(),
            ..r
        }));
    }
}

struct Builder<'a, R: Ring> {
    ring: &'a R,
    inputs: &'a [Matrix<R::Elem>],
    next_leaf: usize,
}

impl<R: Ring> Builder<'_, R> {
    fn build(&mut self, e: &Expr, path: &str) -> Part<R::Elem> {
        let ring = self.ring;
        match e {
            Expr::Input(_) => {
                let leaf = self.next_leaf;
                self.next_leaf += 1;
                let a = &self.inputs[leaf];
                let (n, m) = a.shape();
                let mut mat = zeros(ring, n + m, n + m);
                for k in 0..n {
                    mat[(k, k)] = ring.one();
                }
                for k in 0..m {
                    mat[(n + k, n + k)] = ring.from_i64(-1);
                }
                mat.set_block(0, n, a);
                Part {
                    mat,
                    i: (0..n).collect(),
                    j: (n..n + m).collect(),
                    leaves: vec![LeafBlock {
                        leaf,
                        row: 0,
                        col: n,
                        rows: n,
                        cols: m,
                    }],
                    invs: Vec::new(),
                }
            }
            Expr::Inv(c) => {
                let child = self.build(c, &format!("{path}.child"));
                let nc = child.mat.rows();
                let nw = child.i.len();
                let mut mat = zeros(ring, nc + nw, nc + nw);
                let mut leaves = Vec::new();
                let mut invs = vec![InversionRecord {
                    path: path.to_string(),
                    offset: 0,
                    size: nc,
                    child_i: child.i.clone(),
                    child_j: child.j.clone(),
                }];
                for k in 0..nw {
                    mat[(child.j[k], nc + k)] = ring.from_i64(-1);
                    mat[(nc + k, child.i[k])] = ring.one();
                }
                child.shifted_into(&mut mat, 0, &mut leaves, &mut invs);
                Part {
                    mat,
                    i: (nc..nc + nw).collect(),
                    j: (nc..nc + nw).collect(),
                    leaves,
                    invs,
                }
            }
            Expr::Add(l, r) | Expr::Sub(l, r) => {
                let lp = self.build(l, &format!("{path}.left"));
                let rp = self.build(r, &format!("{path}.right"));
                let (nl, nr) = (lp.mat.rows(), rp.mat.rows());
                let (nw, mw) = (lp.i.len(), lp.j.len());
                let size = nl + nr + mw + nw;
                let c2 = nl + nr;
                let c3 = c2 + mw;
                let r2 = nl + nr;
                let r3 = r2 + nw;
                let sign = if matches!(e, Expr::Sub(..)) { -1 } else { 1 };
                let mut mat = zeros(ring, size, size);
                for k in 0..mw {
                    mat[(lp.j[k], c2 + k)] = ring.one();
                    mat[(nl + rp.j[k], c2 + k)] = ring.from_i64(sign);
                    mat[(r3 + k, c2 + k)] = ring.one();
                }
                for k in 0..nw {
                    mat[(r2 + k, lp.i[k])] = ring.one();
                    mat[(r2 + k, nl + rp.i[k])] = ring.one();
                    mat[(r2 + k, c3 + k)] = ring.one();
                }
                let mut leaves = Vec::new();
                let mut invs = Vec::new();
                lp.shifted_into(&mut mat, 0, &mut leaves, &mut invs);
                rp.shifted_into(&mut mat, nl, &mut leaves, &mut invs);
                Part {
                    mat,
                    i: (c3..c3 + nw).collect(),
                    j: (r3..r3 + mw).collect(),
                    leaves,
                    invs,
                }
            }
            Expr::Mul(l, r) => {
                let lp = self.build(l, &format!("{path}.left"));
                let rp = self.build(r, &format!("{path}.right"));
                let nl = lp.mat.rows();
                let size = nl + rp.mat.rows();
                let mut mat = zeros(ring, size, size);
                for k in 0..lp.j.len() {
                    mat[(lp.j[k], nl + rp.i[k])] = ring.from_i64(-1);
                }
                let i = lp.i.clone();
                let j = rp.j.iter().map(|x| x + nl).collect();
                let mut leaves = Vec::new();
                let mut invs = Vec::new();
                lp.shifted_into(&mut mat, 0, &mut leaves, &mut invs);
                rp.shifted_into(&mut mat, nl, &mut leaves, &mut invs);
                Part {
                    mat,
                    i,
                    j,
                    leaves,
                    invs,
                }
            }
        }
    }
}

/// Builds `N`, `I`, `J` for `f` with one input matrix per leaf (leaf order).
pub fn build<R: Ring>(
    ring: &R,
    f: &Formula,
    inputs: &[Matrix<R::Elem>],
) -> Result<Construction<R::Elem>, ConstructError> {
    f.check_dims()?;
    let leaves = f.leaves();
    if leaves.len() != inputs.len() {
        return Err(ConstructError::LeafCount {
            expected: leaves.len(),
            got: inputs.len(),
        });
    }
    for (leaf, m) in leaves.iter().zip(inputs) {
        if leaf.shape != m.shape() {
            return Err(ConstructError::InputShape {
                leaf: leaf.id,
                expected: leaf.shape,
                got: m.shape(),
            });
        }
    }
    let mut b = Builder {
        ring,
        inputs,
        next_leaf: 0,
    };
    let part = b.build(&f.root, "root");
    let mut leaf_blocks = part.leaves;
    leaf_blocks.sort_by_key(|l| l.leaf);
    Ok(Construction {
        n: part.mat,
        i_set: part.i,
        j_set: part.j,
        leaf_blocks,
        leaf_names: leaves.into_iter().map(|l| l.name).collect(),
        inversions: part.invs,
        gate_count: f.gate_count(),
    })
}

/// Expands a name → matrix table into per-leaf inputs.
pub fn leaf_inputs<E: Clone>(
    f: &Formula,
    named: &std::collections::BTreeMap<String, Matrix<E>>,
) -> Result<Vec<Matrix<E>>, ConstructError> {
    f.leaves()
        .iter()
        .map(|l| {
            named
                .get(&l.name)
                .cloned()
                .ok_or_else(|| ConstructError::UnknownInput(l.name.clone()))
        })
        .collect()
}

impl<E: Clone> Construction<E> {
    pub fn side(&self) -> usize {
        self.n.rows()
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.i_set.len(), self.j_set.len())
    }

    pub fn locate_input(&self, leaf: usize) -> Result<LeafBlock, ConstructError> {
        self.leaf_blocks
            .get(leaf)
            .copied()
            .ok_or(ConstructError::UnknownLeaf(leaf))
    }

    /// Position in `N` of entry `(i, j)` of leaf `leaf`.
    pub fn entry_position(
        &self,
        leaf: usize,
        i: usize,
        j: usize,
    ) -> Result<(usize, usize), ConstructError> {
        let b = self.locate_input(leaf)?;
        if i >= b.rows || j >= b.cols {
            return Err(ConstructError::UnknownLeaf(leaf));
        }
        Ok((b.row + i, b.col + j))
    }

    /// Leaf ids carrying the input `name`.
    pub fn leaves_named(&self, name: &str) -> Vec<usize> {
        self.leaf_names
            .iter()
            .enumerate()
            .filter(|(_, n)| *n == name)
            .map(|(i, _)| i)
            .collect()
    }

    /// Current input matrix of a leaf, read back from `N`.
    pub fn leaf_value(&self, leaf: usize) -> Result<Matrix<E>, ConstructError> {
        let b = self.locate_input(leaf)?;
        Ok(self.n.block(b.row, b.col, b.rows, b.cols))
    }

    /// Sets entry `(i, j)` of a leaf's block.
    pub fn set_leaf_entry(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        value: E,
    ) -> Result<(), ConstructError> {
        let (r, c) = self.entry_position(leaf, i, j)?;
        self.n[(r, c)] = value;
        Ok(())
    }

    /// Extracts `(M)[I, J]` from an inverse of `N`.
    pub fn extract_value(&self, ninv: &Matrix<E>) -> Matrix<E> {
        ninv.submatrix(&self.i_set, &self.j_set)
    }

    pub fn to_json(&self) -> serde_json::Value
    where
        E: std::fmt::Display,
    {
        let rows: Vec<Vec<String>> = (0..self.side())
            .map(|i| self.n.row(i).iter().map(|x| x.to_string()).collect())
            .collect();
        serde_json::json!({
            "size": self.side(),
            "N": rows,
            "I": self.i_set,
            "J": self.j_set,
            "gate_count": self.gate_count,
            "leaf_names": self.leaf_names,
            "leaf_blocks": self.leaf_blocks,
            "inversions": self.inversions,
        })
    }
}

/// `N̂ = [[N, -E_{·,J}], [E_{I,·}, 0]]`.
pub fn build_hat<R: Ring>(
    ring: &R,
    c: &Construction<R::Elem>,
) -> Result<HatConstruction<R::Elem>, ConstructError> {
    let (a, b) = c.output_shape();
    if a != b {
        return Err(ConstructError::NonSquareOutput(a, b));
    }
    let n = c.side();
    let mut mat = zeros(ring, n + a, n + a);
    mat.set_block(0, 0, &c.n);
    for k in 0..a {
        mat[(c.j_set[k], n + k)] = ring.from_i64(-1);
        mat[(n + k, c.i_set[k])] = ring.one();
    }
    Ok(HatConstruction {
        n_hat: mat,
        base: n,
    })
}

/// Frobenius-norm budgets as exact rationals. Squared variants are what the
/// checks compare against squared norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBudget {
    #[serde(serialize_with = "ser_rational")]
    pub kappa: BigRational,
    pub gates: usize,
    /// `κ^s`.
    #[serde(serialize_with = "ser_rational")]
    pub kappa_pow_s: BigRational,
    /// `2sκ`.
    #[serde(serialize_with = "ser_rational")]
    pub two_s_kappa: BigRational,
    /// `max(κ^s, 2sκ)`, the bound applied to `‖N‖_F`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_n: BigRational,
    /// `(10κ)^(2s+1)`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_ninv: BigRational,
    /// `(5κ)^s`, for `(N⁻¹)[I, ·]` and `(N⁻¹)[·, J]`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_rowblock: BigRational,
    /// `κ^s`, for `(N⁻¹)[I, J]`.
    #[serde(serialize_with = "ser_rational")]
    pub bound_ij: BigRational,
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn pow(q: &BigRational, e: usize) -> BigRational {
    num_traits::pow(q.clone(), e)
}

pub fn norm_budget(gates: usize, kappa: &BigRational) -> NormBudget {
    assert!(gates >= 1, "gate count must be positive");
    assert!(
        *kappa >= BigRational::from_integer(BigInt::from(2)),
        "kappa must be at least 2"
    );
    let s = BigRational::from_integer(BigInt::from(gates));
    let kappa_pow_s = pow(kappa, gates);
    let two_s_kappa = BigRational::from_integer(BigInt::from(2)) * &s * kappa;
    let bound_n = kappa_pow_s.clone().max(two_s_kappa.clone());
    let ten = BigRational::from_integer(BigInt::from(10));
    let five = BigRational::from_integer(BigInt::from(5));
    NormBudget {
        kappa: kappa.clone(),
        gates,
        bound_ninv: pow(&(ten * kappa), 2 * gates + 1),
        bound_rowblock: pow(&(five * kappa), gates),
        bound_ij: kappa_pow_s.clone(),
        kappa_pow_s,
        two_s_kappa,
        bound_n,
    }
}

/// Whether `‖m‖_F ≤ bound`, decided exactly.
pub fn frobenius_within<R: RealField>(ring: &R, m: &Matrix<R::Elem>, bound: &BigRational) -> bool {
    crate::matrix::frobenius_sq(ring, m) <= bound * bound
}

/// Smallest integer `k` with `k ≥ √q` (for `q ≥ 0`).
pub fn ceil_sqrt(q: &BigRational) -> BigInt {
    let c = {
        let (n, d) = (q.numer(), q.denom());
        let fl = n / d;
        if (&fl * d) == *n {
            fl
        } else {
            fl + BigInt::one()
        }
    };
    if c.is_zero() {
        return c;
    }
    let r = c.sqrt();
    if &r * &r == c {
        r
    } else {
        r + 1
    }
}
