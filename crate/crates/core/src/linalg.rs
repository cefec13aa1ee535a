//! Dense vectors, row-major matrices and the small symmetric solves used by
//! the simplex solver and the feasibility restorer.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("singular Gram matrix: numerical rank {rank} of {dim}")]
    SingularGram {
        rank: usize,
        dim: usize,
        /// Column indices (into the original M) whose pivots fell below tolerance.
        dependent: Vec<usize>,
    },
}

fn check_len(expected: usize, got: usize) -> Result<(), LinalgError> {
    if expected != got {
        return Err(LinalgError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// A finite real vector of fixed length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Wraps entries already known to be finite.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Self(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, LinalgError> {
        check_len(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = LinalgError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for DenseMatrix {
    type Error = LinalgError;

    fn try_from(r: MatrixRepr) -> Result<Self, Self::Error> {
        Self::from_row_major(r.rows, r.cols, r.data)
    }
}

impl From<DenseMatrix> for MatrixRepr {
    fn from(m: DenseMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        check_len(rows * cols, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero width
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_raw(self.cols, self.rows, data)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    /// Writes `A x` into `out` without dimension checks beyond debug asserts.
    pub(crate) fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.row_iter()) {
            *o = dot(row, x);
        }
    }
}

pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vector, LinalgError> {
    check_len(a.cols, x.len())?;
    let mut out = vec![0.0; a.rows];
    a.matvec_into(x, &mut out);
    Ok(Vector::from_raw(out))
}

/// `Aᵀ y`.
pub fn matvec_t(a: &DenseMatrix, y: &[f64]) -> Result<Vector, LinalgError> {
    check_len(a.rows, y.len())?;
    let mut out = vec![0.0; a.cols];
    for (row, &w) in a.row_iter().zip(y) {
        if w != 0.0 {
            axpy(w, row, &mut out);
        }
    }
    Ok(Vector::from_raw(out))
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    // four accumulators let the compiler vectorise without reassociation flags
    let mut acc = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (a, b) in xr.iter().zip(yr) {
        s += a * b;
    }
    s
}

pub fn checked_dot(x: &[f64], y: &[f64]) -> Result<f64, LinalgError> {
    check_len(x.len(), y.len())?;
    Ok(dot(x, y))
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Pivoted Cholesky factorisation of a Gram matrix `MᵀM`.
///
/// Pivots are taken on the largest remaining diagonal entry; elimination stops
/// when that entry drops below `1e-10 * max(diag(MᵀM))`.
#[derive(Debug, Clone)]
pub struct GramFactor {
    dim: usize,
    /// Lower-triangular factor of the permuted matrix, row-major `dim x dim`.
    l: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
    gram: Vec<f64>,
}

pub const GRAM_PIVOT_REL_TOL: f64 = 1e-10;
pub const GRAM_RESIDUAL_TOL: f64 = 1e-8;

impl GramFactor {
    /// Factors `G = MᵀM` where `M` has the vectors of `columns` as its columns.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Self {
        let k = columns.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let g = dot(columns[i].as_ref(), columns[j].as_ref());
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        Self::factor(k, gram)
    }

    fn factor(dim: usize, gram: Vec<f64>) -> Self {
        let max_diag = (0..dim).map(|i| gram[i * dim + i]).fold(0.0, f64::max);
        let tol = GRAM_PIVOT_REL_TOL * max_diag;
        let mut a = gram.clone();
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut rank = 0;
        for k in 0..dim {
            let (p, &best) = (k..dim)
                .map(|i| (i, &a[i * dim + i]))
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("non-empty range");
            if !(best > tol) || best <= 0.0 {
                break;
            }
            if p != k {
                swap_sym(&mut a, dim, k, p);
                perm.swap(k, p);
            }
            let d = a[k * dim + k].sqrt();
            a[k * dim + k] = d;
            for i in k + 1..dim {
                a[i * dim + k] /= d;
                a[k * dim + i] = a[i * dim + k];
            }
            // keep the trailing block fully symmetric so later pivot swaps
            // never read a stale triangle
            for j in k + 1..dim {
                let ljk = a[j * dim + k];
                for i in j..dim {
                    let v = a[i * dim + j] - a[i * dim + k] * ljk;
                    a[i * dim + j] = v;
                    a[j * dim + i] = v;
                }
            }
            rank += 1;
        }
        Self { dim, l: a, perm, rank, gram }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `MᵀM u = b`, or reports which columns are numerically dependent.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, b.len())?;
        if self.rank < self.dim {
            let mut dependent = self.perm[self.rank..].to_vec();
            dependent.sort_unstable();
            return Err(LinalgError::SingularGram {
                rank: self.rank,
                dim: self.dim,
                dependent,
            });
        }
        let mut u = self.solve_factored(b);
        // one step of iterative refinement
        let r = self.residual(&u, b);
        if norm2(&r) > 1e-14 * (1.0 + norm2(b)) {
            let du = self.solve_factored(&r);
            axpy(1.0, &du, &mut u);
        }
        // ill-conditioned systems that pass the pivot test but not the
        // residual bound are reported as singular at the weakest pivot
        if !(norm2(&self.residual(&u, b)) <= GRAM_RESIDUAL_TOL * (1.0 + norm2(b))) {
            return Err(LinalgError::SingularGram {
                rank: self.dim - 1,
                dim: self.dim,
                dependent: vec![self.perm[self.dim - 1]],
            });
        }
        Ok(u)
    }

    fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let l = &self.l;
        let mut z: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[i * n + k] * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= l[k * n + i] * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        let mut u = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            u[p] = z[i];
        }
        u
    }

    /// `b - MᵀM u` computed with the unfactored Gram matrix.
    pub fn residual(&self, u: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| b[i] - dot(&self.gram[i * n..(i + 1) * n], u))
            .collect()
    }
}

fn swap_sym(a: &mut [f64], n: usize, p: usize, q: usize) {
    for j in 0..n {
        a.swap(p * n + j, q * n + j);
    }
    for i in 0..n {
        a.swap(i * n + p, i * n + q);
    }
}

/// Solves `MᵀM u = b` for the matrix `M` whose columns are the columns of `m`.
pub fn gram_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vector, LinalgError> {
    check_len(m.cols(), b.len())?;
    let t = m.transpose();
    let columns: Vec<&[f64]> = t.row_iter().collect();
    let u = GramFactor::from_columns(&columns).solve(b)?;
    Vector::new(u)
}

/// Dense square LU with partial pivoting, used for simplex basis factorisation.
#[derive(Debug, Clone)]
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot magnitude falls below `tol`.
    pub(crate) fn factor(n: usize, mut a: Vec<f64>, tol: f64) -> Option<Self> {
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))?;
            if !(pmax > tol) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        Some(Self { n, lu: a, piv })
    }

    /// Explicit inverse, row-major.
    pub(crate) fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = if self.piv[i] == j { 1.0 } else { 0.0 };
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }

    /// Solves in place; `x` must already hold the row-permuted right-hand side.
    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let lu = &self.lu;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s / lu[i * n + i];
        }
    }
}
