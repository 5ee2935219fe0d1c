//! Naive exact reference implementations.
//!
//! Nothing here shares code with the maintained data structures: elimination,
//! determinants and field arithmetic are re-implemented from scratch on plain
//! `BigRational` / `BigInt` / `u64` values.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::formula::{Expr, Formula};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("inversion of a singular matrix at {0}")]
    SingularInversion(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("graph has {0} vertices; brute force is limited to 12")]
    TooLarge(usize),
    #[error("power iteration did not converge")]
    NotConverged,
    #[error("leaf inputs do not match the formula")]
    BadInputs,
}

pub type RatMatrix = Matrix<BigRational>;

fn rzero() -> BigRational {
    BigRational::zero()
}

fn rmul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let mut out = Matrix::filled(a.rows(), b.cols(), rzero());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = rzero();
            for k in 0..a.cols() {
                acc += &a[(i, k)] * &b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Exact inverse by Gauss–Jordan elimination on rationals.
pub fn inv_exact(a: &RatMatrix) -> Result<RatMatrix, OracleError> {
    assert!(a.is_square(), "inv_exact needs a square matrix");
    let n = a.rows();
    let mut aug: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { rzero() }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !aug[r][col].is_zero())
            .ok_or(OracleError::SingularMatrix)?;
        aug.swap(p, col);
        let piv = aug[col][col].clone();
        for x in aug[col].iter_mut() {
            *x /= &piv;
        }
        let pivot_row = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
    }
    Ok(Matrix::from_rows(
        aug.into_iter().map(|row| row[n..].to_vec()).collect(),
    ))
}

/// Fraction-free (Bareiss) determinant of an integer matrix.
pub fn det_bareiss_int(a: &[Vec<BigInt>]) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Exact determinant: rows are scaled to integers, then Bareiss.
pub fn det_bareiss(a: &RatMatrix) -> BigRational {
    assert!(a.is_square(), "det_bareiss needs a square matrix");
    let n = a.rows();
    let mut scale = BigInt::one();
    let rows: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let l = a
                .row(i)
                .iter()
                .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            scale *= &l;
            a.row(i)
                .iter()
                .map(|q| q.numer() * (&l / q.denom()))
                .collect()
        })
        .collect();
    BigRational::new(det_bareiss_int(&rows), scale)
}

/// Laplace expansion along the first row; only for small matrices.
pub fn det_cofactor(a: &RatMatrix) -> BigRational {
    let n = a.rows();
    if n == 0 {
        return BigRational::one();
    }
    if n == 1 {
        return a[(0, 0)].clone();
    }
    let mut acc = rzero();
    for j in 0..n {
        if a[(0, j)].is_zero() {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let rows: Vec<usize> = (1..n).collect();
        let minor = a.submatrix(&rows, &cols);
        let term = &a[(0, j)] * det_cofactor(&minor);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Direct recursive evaluation of a formula with one rational input per leaf.
pub fn eval_exact(f: &Formula, inputs: &[RatMatrix]) -> Result<RatMatrix, OracleError> {
    let mut next = 0;
    let v = eval_rec(&f.root, inputs, &mut next, "root")?;
    if next != inputs.len() {
        return Err(OracleError::BadInputs);
    }
    Ok(v)
}

fn eval_rec(
    e: &Expr,
    inputs: &[RatMatrix],
    next: &mut usize,
    path: &str,
) -> Result<RatMatrix, OracleError> {
    match e {
        Expr::Input(_) => {
            let m = inputs.get(*next).ok_or(OracleError::BadInputs)?.clone();
            *next += 1;
            Ok(m)
        }
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            let a = eval_rec(l, inputs, next, &format!("{path}.left"))?;
            let b = eval_rec(r, inputs, next, &format!("{path}.right"))?;
            if a.shape() != b.shape() {
                return Err(OracleError::BadInputs);
            }
            let sub = matches!(e, Expr::Sub(..));
            Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| {
                if sub {
                    &a[(i, j)] - &b[(i, j)]
                } else {
                    &a[(i, j)] + &b[(i, j)]
                }
            }))
        }
        Expr::Mul(l, r) => {
            let a = eval_rec(l, inputs, next, &format!("{path}.left"))?;
            let b = eval_rec(r, inputs, next, &format!("{path}.right"))?;
            if a.cols() != b.rows() {
                return Err(OracleError::BadInputs);
            }
            Ok(rmul(&a, &b))
        }
        Expr::Inv(c) => {
            let a = eval_rec(c, inputs, next, &format!("{path}.child"))?;
            if !a.is_square() {
                return Err(OracleError::BadInputs);
            }
            inv_exact(&a).map_err(|_| OracleError::SingularInversion(path.to_string()))
        }
    }
}

/// Value of every inversion gate's input, in post-order (children first).
pub fn inversion_inputs(f: &Formula, inputs: &[RatMatrix]) -> Result<Vec<RatMatrix>, OracleError> {
    fn walk(
        e: &Expr,
        inputs: &[RatMatrix],
        next: &mut usize,
        out: &mut Vec<RatMatrix>,
    ) -> Result<RatMatrix, OracleError> {
        match e {
            Expr::Input(_) => {
                let m = inputs.get(*next).ok_or(OracleError::BadInputs)?.clone();
                *next += 1;
                Ok(m)
            }
            Expr::Add(l, r) | Expr::Sub(l, r) => {
                let a = walk(l, inputs, next, out)?;
                let b = walk(r, inputs, next, out)?;
                let sub = matches!(e, Expr::Sub(..));
                Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| {
                    if sub {
                        &a[(i, j)] - &b[(i, j)]
                    } else {
                        &a[(i, j)] + &b[(i, j)]
                    }
                }))
            }
            Expr::Mul(l, r) => {
                let a = walk(l, inputs, next, out)?;
                let b = walk(r, inputs, next, out)?;
                Ok(rmul(&a, &b))
            }
            Expr::Inv(c) => {
                let a = walk(c, inputs, next, out)?;
                let inv = inv_exact(&a)
                    .map_err(|_| OracleError::SingularInversion("inversion".into()))?;
                out.push(a);
                Ok(inv)
            }
        }
    }
    let mut out = Vec::new();
    walk(&f.root, inputs, &mut 0, &mut out)?;
    Ok(out)
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

/// Row-echelon rank over `Z_p`; entries must already be reduced.
pub fn rank_mod_p(a: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = a.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][col] % p != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = powmod(m[rank][col], p - 2, p);
        for r in 0..rows {
            if r == rank || m[r][col] == 0 {
                continue;
            }
            let factor = mulmod(m[r][col], inv, p);
            for c in col..cols {
                let t = mulmod(factor, m[rank][c], p);
                m[r][c] = (m[r][c] + p - t) % p;
            }
        }
        rank += 1;
    }
    rank
}

/// Reduces a rational to `Z_p`; `None` when the denominator vanishes.
pub fn rational_mod_p(q: &BigRational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let num = q.numer().mod_floor(&pb);
    let den = q.denom().mod_floor(&pb);
    if den.is_zero() {
        return None;
    }
    let n: u64 = num.try_into().ok()?;
    let d: u64 = den.try_into().ok()?;
    Some(mulmod(n, powmod(d, p - 2, p), p))
}

/// An undirected graph with on/off vertices and vertex merges. Edges are
/// kept on original vertex ids; the matching is taken on the quotient graph
/// of active representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub n: usize,
    pub active: Vec<bool>,
    pub rep: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            active: vec![true; n],
            rep: (0..n).collect(),
            edges: BTreeSet::new(),
        }
    }

    fn key(u: usize, v: usize) -> (usize, usize) {
        (u.min(v), u.max(v))
    }

    pub fn insert(&mut self, u: usize, v: usize) {
        self.edges.insert(Self::key(u, v));
    }

    pub fn remove(&mut self, u: usize, v: usize) {
        self.edges.remove(&Self::key(u, v));
    }

    pub fn set_active(&mut self, v: usize, on: bool) {
        self.active[v] = on;
    }

    /// Folds `v`'s class into `u`'s.
    pub fn merge(&mut self, u: usize, v: usize) {
        let (ru, rv) = (self.rep[u], self.rep[v]);
        for r in self.rep.iter_mut() {
            if *r == rv {
                *r = ru;
            }
        }
        self.active[rv] = false;
    }

    pub fn is_representative(&self, v: usize) -> bool {
        self.rep[v] == v
    }

    /// Active representatives and the adjacency between them.
    pub fn quotient(&self) -> (Vec<usize>, BTreeSet<(usize, usize)>) {
        let verts: Vec<usize> = (0..self.n)
            .filter(|&v| self.rep[v] == v && self.active[v])
            .collect();
        let mut adj = BTreeSet::new();
        for &(a, b) in &self.edges {
            let (ra, rb) = (self.rep[a], self.rep[b]);
            if ra != rb && self.active[ra] && self.active[rb] {
                adj.insert(Self::key(ra, rb));
            }
        }
        (verts, adj)
    }
}

/// Maximum matching size of the quotient graph by subset DP.
pub fn max_matching_bruteforce(g: &Graph) -> Result<usize, OracleError> {
    if g.n > 12 {
        return Err(OracleError::TooLarge(g.n));
    }
    let (verts, adj) = g.quotient();
    let k = verts.len();
    let mut nbr = vec![0u32; k];
    for (a, &u) in verts.iter().enumerate() {
        for (b, &v) in verts.iter().enumerate() {
            if adj.contains(&Graph::key(u, v)) {
                nbr[a] |= 1 << b;
            }
        }
    }
    let full = (1u32 << k) - 1;
    let mut best = vec![0u8; 1 << k];
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = best[rest as usize];
        let mut cand = nbr[i] & rest;
        while cand != 0 {
            let j = cand.trailing_zeros();
            cand &= cand - 1;
            b = b.max(1 + best[(rest & !(1 << j)) as usize]);
        }
        best[mask as usize] = b;
    }
    Ok(best[full as usize] as usize)
}

fn f64_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OracleError> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .expect("nonempty");
        if m[p][col].abs() < 1e-13 {
            return Err(OracleError::SingularMatrix);
        }
        m.swap(p, col);
        let piv = m[col][col];
        for x in m[col].iter_mut() {
            *x /= piv;
        }
        let prow = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col];
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn f64_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

/// Largest singular value by power iteration on `BᵀB`, stopped when the
/// Rayleigh quotient changes by less than `1e-9` relatively.
pub fn sigma_max(b: &[Vec<f64>]) -> Result<f64, OracleError> {
    let n = b.len();
    let m = b[0].len();
    let bt: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| b[i][j]).collect()).collect();
    let btb = f64_mul(&bt, b);
    if btb.iter().flatten().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut prev = 0.0f64;
    let cap = 10 * m * m;
    for _ in 0..cap.max(50) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        let w: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| btb[i][j] * v[j]).sum())
            .collect();
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        if prev > 0.0 && ((rq - prev) / rq).abs() < 1e-9 {
            return Ok(rq.max(0.0).sqrt());
        }
        prev = rq;
        v = w;
    }
    Err(OracleError::NotConverged)
}

/// First-order determinant bounds for a small perturbation:
/// `ε̂ = ε / (n² σ_max(A⁻¹X))` and
/// `|det A| · (1 + ε̂ tr(A⁻¹X) ∓ ε²/n)`. Returns `(lower, upper, ε̂)`.
pub fn det_perturbation_bounds(
    a: &[Vec<f64>],
    x: &[Vec<f64>],
    eps: f64,
) -> Result<(f64, f64, f64), OracleError> {
    let n = a.len();
    let ainv = f64_inverse(a)?;
    let b = f64_mul(&ainv, x);
    let sigma = sigma_max(&b)?;
    let eps_hat = if sigma == 0.0 {
        0.0
    } else {
        eps / ((n * n) as f64 * sigma)
    };
    let tr: f64 = (0..n).map(|i| b[i][i]).sum();
    let det = det_bareiss(&Matrix::from_rows(
        a.iter()
            .map(|r| {
                r.iter()
                    .map(|&v| BigRational::from_float(v).expect("finite"))
                    .collect()
            })
            .collect(),
    ));
    let abs_det = det.abs();
    let abs_det = num_traits::ToPrimitive::to_f64(&abs_det).unwrap_or(f64::INFINITY);
    let slack = eps * eps / n as f64;
    let centre = 1.0 + eps_hat * tr;
    Ok((
        abs_det * (centre - slack),
        abs_det * (centre + slack),
        eps_hat,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn rm(rows: &[&[i64]]) -> RatMatrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| q(v)).collect())
                .collect(),
        )
    }

    #[test]
    fn eval_examples() {
        let f = Formula::parse("A:1x1; B:1x1; C:1x1; (A+B)*C").unwrap();
        let v = eval_exact(&f, &[rm(&[&[1]]), rm(&[&[2]]), rm(&[&[3]])]).unwrap();
        assert_eq!(v, rm(&[&[9]]));
        let g = Formula::parse("A:1x1; inv(A)").unwrap();
        assert_eq!(
            eval_exact(&g, &[rm(&[&[2]])]).unwrap()[(0, 0)],
            BigRational::new(1.into(), 2.into())
        );
        assert_eq!(
            eval_exact(&g, &[rm(&[&[0]])]),
            Err(OracleError::SingularInversion("root".into()))
        );
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(det_bareiss(&rm(&[&[1, 2], &[3, 4]])), q(-2));
        assert_eq!(det_cofactor(&rm(&[&[1, 2], &[3, 4]])), q(-2));
        assert_eq!(
            det_bareiss(&rm(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 4]])),
            q(24)
        );
        assert_eq!(det_bareiss(&rm(&[&[1, 1], &[1, 1]])), q(0));
        assert_eq!(det_bareiss(&rm(&[&[0, 1], &[1, 0]])), q(-1));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            inv_exact(&rm(&[&[1, 2], &[0, -1]])).unwrap(),
            rm(&[&[1, 2], &[0, -1]])
        );
        assert_eq!(
            inv_exact(&rm(&[&[1, 1], &[1, 1]])),
            Err(OracleError::SingularMatrix)
        );
    }

    #[test]
    fn rank_examples() {
        assert_eq!(
            rank_mod_p(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]], 7),
            3
        );
        assert_eq!(rank_mod_p(&[vec![0, 0], vec![0, 0]], 7), 0);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 4]], 7), 1);
    }

    #[test]
    fn matching_examples() {
        let mut g = Graph::new(4);
        assert_eq!(max_matching_bruteforce(&g), Ok(0));
        g.insert(0, 1);
        g.insert(1, 2);
        g.insert(0, 2);
        assert_eq!(max_matching_bruteforce(&g), Ok(1));
        g.insert(2, 3);
        assert_eq!(max_matching_bruteforce(&g), Ok(2));
        let mut c4 = Graph::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            c4.insert(a, b);
        }
        assert_eq!(max_matching_bruteforce(&c4), Ok(2));
        c4.set_active(1, false);
        assert_eq!(max_matching_bruteforce(&c4), Ok(1));
        assert_eq!(
            max_matching_bruteforce(&Graph::new(13)),
            Err(OracleError::TooLarge(13))
        );
    }

    #[test]
    fn merged_quotient() {
        let mut g = Graph::new(4);
        g.insert(0, 2);
        g.insert(1, 3);
        g.merge(0, 1);
        // Class {0,1} is adjacent to both 2 and 3, but can only match once.
        assert_eq!(max_matching_bruteforce(&g), Ok(1));
    }

    #[test]
    fn perturbation_examples() {
        let i2 = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (lo, hi, eh) = det_perturbation_bounds(&i2, &i2, 0.1).unwrap();
        assert!((eh - 0.025).abs() < 1e-9);
        assert!((lo - 1.045).abs() < 1e-9 && (hi - 1.055).abs() < 1e-9);
        assert!(lo <= 1.050625 && 1.050625 <= hi);
        let zero = vec![vec![0.0; 2]; 2];
        let (lo, hi, eh) = det_perturbation_bounds(&i2, &zero, 0.1).unwrap();
        assert_eq!(eh, 0.0);
        assert!((lo - 0.995).abs() < 1e-12 && (hi - 1.005).abs() < 1e-12);
        let (lo, hi, _) = det_perturbation_bounds(&i2, &i2, 0.0).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    fn small_int_matrix(n: usize) -> impl Strategy<Value = RatMatrix> {
        proptest::collection::vec(-5i64..=5, n * n)
            .prop_map(move |v| Matrix::from_vec(n, n, v.into_iter().map(q).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn bareiss_matches_cofactor(m in (1usize..=4).prop_flat_map(small_int_matrix)) {
            prop_assert_eq!(det_bareiss(&m), det_cofactor(&m));
        }

        #[test]
        fn matching_monotone_under_insertion(
            n in 2usize..=8,
            edges in proptest::collection::vec((0usize..8, 0usize..8), 0..20),
        ) {
            let mut g = Graph::new(n);
            let mut prev = 0;
            for (a, b) in edges {
                let (a, b) = (a % n, b % n);
                if a == b { continue; }
                g.insert(a, b);
                let m = max_matching_bruteforce(&g).unwrap();
                prop_assert!(m >= prev && m <= prev + 1);
                prev = m;
            }
        }
    }
}
