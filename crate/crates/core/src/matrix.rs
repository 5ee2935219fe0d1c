//! Dense row-major matrices over a [`Ring`] context.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_rational::BigRational;
use num_traits::Zero;

use crate::scalar::{Field, RealField, Ring};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: fmt::Debug> fmt::Debug for Matrix<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<E: fmt::Display> fmt::Display for Matrix<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.data[i * self.cols + j].to_string())
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range for {}x{}",
            self.rows,
            self.cols
        );
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range for {}x{}",
            self.rows,
            self.cols
        );
        &mut self.data[i * self.cols + j]
    }
}

impl<E: Clone> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<E>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Matrix::from_fn(rows.len(), cols.len(), |a, b| {
            self[(rows[a], cols[b])].clone()
        })
    }

    pub fn column(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix<E>) {
        assert!(
            r0 + block.rows <= self.rows && c0 + block.cols <= self.cols,
            "block out of range"
        );
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn map<F: Clone>(&self, f: impl FnMut(&E) -> F) -> Matrix<F> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<F: Clone, X>(&self, f: impl FnMut(&E) -> Result<F, X>) -> Result<Matrix<F>, X> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }
}

impl<E> Matrix<E> {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn as_slice(&self) -> &[E] {
        &self.data
    }
    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

pub fn zeros<R: Ring>(ring: &R, rows: usize, cols: usize) -> Matrix<R::Elem> {
    Matrix::filled(rows, cols, ring.zero())
}

pub fn identity<R: Ring>(ring: &R, n: usize) -> Matrix<R::Elem> {
    Matrix::from_fn(n, n, |i, j| if i == j { ring.one() } else { ring.zero() })
}

pub fn from_i64<R: Ring>(ring: &R, rows: &[&[i64]]) -> Matrix<R::Elem> {
    Matrix::from_rows(
        rows.iter()
            .map(|r| r.iter().map(|&v| ring.from_i64(v)).collect())
            .collect(),
    )
}

pub fn add<R: Ring>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    assert_eq!(a.shape(), b.shape(), "add: shape mismatch");
    Matrix::from_fn(a.rows, a.cols, |i, j| ring.add(&a[(i, j)], &b[(i, j)]))
}

pub fn sub<R: Ring>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    assert_eq!(a.shape(), b.shape(), "sub: shape mismatch");
    Matrix::from_fn(a.rows, a.cols, |i, j| ring.sub(&a[(i, j)], &b[(i, j)]))
}

pub fn scale<R: Ring>(ring: &R, s: &R::Elem, a: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    a.map(|x| ring.mul(s, x))
}

/// Cubic product; zero entries of `a` are skipped.
pub fn matmul<R: Ring>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    assert_eq!(a.cols, b.rows, "matmul: inner dimensions differ");
    let mut out = zeros(ring, a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = &a[(i, k)];
            if ring.is_zero(aik) {
                continue;
            }
            let brow = b.row(k);
            let orow = out.row_mut(i);
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o = ring.mul_add(o, aik, bkj);
            }
        }
    }
    out
}

pub fn matvec<R: Ring>(ring: &R, a: &Matrix<R::Elem>, x: &[R::Elem]) -> Vec<R::Elem> {
    assert_eq!(a.cols, x.len(), "matvec: dimension mismatch");
    (0..a.rows)
        .map(|i| {
            a.row(i)
                .iter()
                .zip(x)
                .fold(ring.zero(), |acc, (aij, xj)| ring.mul_add(&acc, aij, xj))
        })
        .collect()
}

/// `xᵀ A`.
pub fn vecmat<R: Ring>(ring: &R, x: &[R::Elem], a: &Matrix<R::Elem>) -> Vec<R::Elem> {
    assert_eq!(a.rows, x.len(), "vecmat: dimension mismatch");
    let mut out = vec![ring.zero(); a.cols];
    for (i, xi) in x.iter().enumerate() {
        if ring.is_zero(xi) {
            continue;
        }
        for (o, aij) in out.iter_mut().zip(a.row(i)) {
            *o = ring.mul_add(o, xi, aij);
        }
    }
    out
}

pub fn dot<R: Ring>(ring: &R, x: &[R::Elem], y: &[R::Elem]) -> R::Elem {
    x.iter()
        .zip(y)
        .fold(ring.zero(), |acc, (a, b)| ring.mul_add(&acc, a, b))
}

fn row_scale<F: Field>(field: &F, m: &Matrix<F::Elem>, i: usize) -> f64 {
    m.row(i)
        .iter()
        .map(|x| field.pivot_magnitude(x))
        .fold(0.0, f64::max)
}

/// Gauss–Jordan inverse with partial pivoting. A pivot is rejected when the
/// field reports it negligible relative to the largest entry of its row.
pub fn inverse<F: Field>(field: &F, a: &Matrix<F::Elem>) -> Result<Matrix<F::Elem>, LinalgError> {
    let scales: Vec<f64> = (0..a.rows).map(|i| row_scale(field, a, i)).collect();
    inverse_scaled(field, a, scales)
}

/// As [`inverse`], but pivots are judged against the caller's magnitude
/// `scale` (e.g. the size of the terms a small Woodbury core was summed from).
pub fn inverse_with_scale<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    scale: f64,
) -> Result<Matrix<F::Elem>, LinalgError> {
    inverse_scaled(field, a, vec![scale; a.rows])
}

fn inverse_scaled<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    scales: Vec<f64>,
) -> Result<Matrix<F::Elem>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Shape(format!(
            "inverse of {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = identity(field, n);
    let mut row_scales = scales;
    for col in 0..n {
        let (best, mag) = (col..n)
            .map(|r| (r, field.pivot_magnitude(&m[(r, col)])))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= 0.0 || field.is_negligible(&m[(best, col)], row_scales[best]) {
            return Err(LinalgError::SingularMatrix);
        }
        m.swap_rows(col, best);
        inv.swap_rows(col, best);
        row_scales.swap(col, best);
        let piv_inv = field
            .inv(&m[(col, col)])
            .map_err(|_| LinalgError::SingularMatrix)?;
        for j in 0..n {
            m[(col, j)] = field.mul(&m[(col, j)], &piv_inv);
            inv[(col, j)] = field.mul(&inv[(col, j)], &piv_inv);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[(r, col)].clone();
            if field.is_zero(&factor) {
                continue;
            }
            for j in 0..n {
                let t = field.mul(&factor, &m[(col, j)]);
                m[(r, j)] = field.sub(&m[(r, j)], &t);
                let t = field.mul(&factor, &inv[(col, j)]);
                inv[(r, j)] = field.sub(&inv[(r, j)], &t);
            }
        }
    }
    Ok(inv)
}

/// Determinant by Gaussian elimination; exact in exact fields.
pub fn det<F: Field>(field: &F, a: &Matrix<F::Elem>) -> F::Elem {
    assert!(a.is_square(), "det of a non-square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut d = field.one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !field.is_zero(&m[(r, col)])) else {
            return field.zero();
        };
        if p != col {
            m.swap_rows(p, col);
            d = field.neg(&d);
        }
        let piv = m[(col, col)].clone();
        d = field.mul(&d, &piv);
        let piv_inv = field.inv(&piv).expect("nonzero pivot");
        for r in col + 1..n {
            if field.is_zero(&m[(r, col)]) {
                continue;
            }
            let factor = field.mul(&m[(r, col)], &piv_inv);
            for j in col..n {
                let t = field.mul(&factor, &m[(col, j)]);
                m[(r, j)] = field.sub(&m[(r, j)], &t);
            }
        }
    }
    d
}

/// Exact squared Frobenius norm.
pub fn frobenius_sq<R: RealField>(ring: &R, a: &Matrix<R::Elem>) -> BigRational {
    a.as_slice().iter().fold(BigRational::zero(), |acc, x| {
        let q = ring.to_rational(x);
        acc + &q * &q
    })
}

pub fn frobenius_f64<R: RealField>(ring: &R, a: &Matrix<R::Elem>) -> f64 {
    a.as_slice()
        .iter()
        .map(|x| {
            let v = ring.to_f64(x);
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// Converts between rings through exact rationals.
pub fn convert<A: RealField, B: Field>(
    from: &A,
    to: &B,
    m: &Matrix<A::Elem>,
) -> Result<Matrix<B::Elem>, crate::scalar::ScalarError> {
    m.try_map(|x| to.from_rational(&from.to_rational(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{FloatRing, PrimeField, RationalRing};

    #[test]
    fn inverse_of_diagonal() {
        let r = RationalRing;
        let a = from_i64(&r, &[&[2, 0], &[0, 4]]);
        let inv = inverse(&r, &a).unwrap();
        assert_eq!(inv[(0, 0)], BigRational::new(1.into(), 2.into()));
        assert_eq!(inv[(1, 1)], BigRational::new(1.into(), 4.into()));
        assert!(inv[(0, 1)].is_zero());
    }

    #[test]
    fn singular_inverse_fails() {
        let f = FloatRing::<f64>::new();
        let a = from_i64(&f, &[&[1, 1], &[1, 1]]);
        assert_eq!(inverse(&f, &a), Err(LinalgError::SingularMatrix));
        assert_eq!(
            inverse(&RationalRing, &from_i64(&RationalRing, &[&[1, 1], &[1, 1]])),
            Err(LinalgError::SingularMatrix)
        );
    }

    #[test]
    fn det_mod_p_with_pivoting() {
        let f = PrimeField::new(7).unwrap();
        let a = from_i64(&f, &[&[0, 1], &[1, 0]]);
        assert_eq!(det(&f, &a).residue, 6);
    }

    #[test]
    fn matmul_identity() {
        let r = RationalRing;
        let a = from_i64(&r, &[&[1, 2, 3], &[4, 5, 6]]);
        assert_eq!(matmul(&r, &a, &identity(&r, 3)), a);
        assert_eq!(matmul(&r, &identity(&r, 2), &a), a);
        assert_eq!(
            matvec(&r, &a, &[r.one(), r.one(), r.one()])[1],
            r.from_i64(15)
        );
        assert_eq!(vecmat(&r, &[r.one(), r.one()], &a)[2], r.from_i64(9));
    }
}
