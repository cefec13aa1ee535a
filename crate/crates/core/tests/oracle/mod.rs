//! Exhaustive vertex/ray enumeration for tiny instances, independent of the
//! simplex code path.

use randlp::linalg::{dot, norm2, Vector};
use randlp::solver::{LpInstance, OptimalSolution, SolveOutcome, SolverError};

pub const ORACLE_MAX_ROWS: usize = 12;
pub const ORACLE_MAX_COLS: usize = 4;

#[derive(Debug, PartialEq)]
pub enum OracleError {
    TooLarge { m: usize, n: usize },
    NoVertex,
    Solver(SolverError),
}

impl From<SolverError> for OracleError {
    fn from(e: SolverError) -> Self {
        Self::Solver(e)
    }
}

impl From<randlp::linalg::LinalgError> for OracleError {
    fn from(e: randlp::linalg::LinalgError) -> Self {
        Self::Solver(e.into())
    }
}

const RAY_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

/// (value, x̂, subset, y_B, dual feasible)
type Candidate = (f64, Vec<f64>, Vec<usize>, Vec<f64>, bool);

/// Solves by enumeration.
///
/// The instance is first restricted to the row space of `A` (a component of
/// `c` outside it is a free ascent direction). In the reduced coordinates the
/// recession cone `{d : Ad ≤ 0}` is pointed, so the LP is unbounded iff an
/// extreme ray, spanned by the null space of some `(r-1)`-row subset, ascends;
/// otherwise the optimum sits at a vertex `A_B⁻¹ 1` of some invertible
/// `r`-row subset `B`.
pub fn brute_force_oracle(inst: &LpInstance) -> Result<SolveOutcome, OracleError> {
    let (m, n) = (inst.m(), inst.n());
    if m > ORACLE_MAX_ROWS || n > ORACLE_MAX_COLS {
        return Err(OracleError::TooLarge { m, n });
    }
    let basis = row_space_basis(inst);
    let r = basis.len();

    let coords: Vec<f64> = basis.iter().map(|q| dot(q, &inst.c)).collect();
    let lifted = lift(&basis, &coords, n);
    let outside: Vec<f64> = inst.c.iter().zip(&lifted).map(|(c, p)| c - p).collect();
    let outside_sq = dot(&outside, &outside);
    if outside_sq.sqrt() > RAY_TOL {
        let ray = outside.iter().map(|v| v / outside_sq).collect();
        return Ok(SolveOutcome::Unbounded {
            ray: Vector::new(ray)?,
            pivots: 0,
        });
    }

    // reduced rows â_i = Qᵀ a_i
    let reduced: Vec<Vec<f64>> = inst
        .a
        .row_iter()
        .map(|row| basis.iter().map(|q| dot(q, row)).collect())
        .collect();

    for subset in combinations(m, r - 1) {
        let Some(d) = null_direction(&reduced, &subset, r) else {
            continue;
        };
        for sign in [1.0, -1.0] {
            let d: Vec<f64> = d.iter().map(|v| sign * v).collect();
            let ascent = dot(&coords, &d);
            if ascent > RAY_TOL && reduced.iter().all(|row| dot(row, &d) <= RAY_TOL) {
                let ray: Vec<f64> = lift(&basis, &d, n).iter().map(|v| v / ascent).collect();
                return Ok(SolveOutcome::Unbounded {
                    ray: Vector::new(ray)?,
                    pivots: 0,
                });
            }
        }
    }

    let mut best: Option<Candidate> = None;
    for subset in combinations(m, r) {
        let mut rows = vec![0.0; r * r];
        for (i, &s) in subset.iter().enumerate() {
            rows[i * r..(i + 1) * r].copy_from_slice(&reduced[s]);
        }
        let Some(inv) = inverse(r, rows) else {
            continue;
        };
        let x: Vec<f64> = (0..r).map(|i| inv[i * r..(i + 1) * r].iter().sum()).collect();
        if reduced.iter().any(|row| dot(row, &x) > 1.0 + FEAS_TOL) {
            continue;
        }
        let value = dot(&coords, &x);
        // y_B solves A_Bᵀ y = ĉ, i.e. y = A_B⁻ᵀ ĉ
        let y: Vec<f64> = (0..r).map(|j| (0..r).map(|i| inv[i * r + j] * coords[i]).sum()).collect();
        let dual_ok = y.iter().all(|&v| v >= -1e-12);
        let replace = match &best {
            None => true,
            Some((bv, _, _, _, bok)) => {
                if (value - bv).abs() <= 1e-12 * (1.0 + bv.abs()) {
                    dual_ok && !bok
                } else {
                    value > *bv
                }
            }
        };
        if replace {
            best = Some((value, x, subset, y, dual_ok));
        }
    }

    let (z_star, x, subset, yb, _) = best.ok_or(OracleError::NoVertex)?;
    let mut y = vec![0.0; m];
    for (&s, &v) in subset.iter().zip(&yb) {
        y[s] = v;
    }
    Ok(SolveOutcome::Optimal {
        solution: OptimalSolution {
            z_star,
            x_star: Vector::new(lift(&basis, &x, n))?,
            y_star: Vector::new(y)?,
        },
        pivots: 0,
    })
}

/// Orthonormal basis of the row space by modified Gram–Schmidt with one
/// reorthogonalisation pass.
fn row_space_basis(inst: &LpInstance) -> Vec<Vec<f64>> {
    let scale = inst.a.row_iter().map(norm2).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in inst.a.row_iter() {
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let p = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= p * qi;
                }
            }
        }
        let norm = norm2(&v);
        if norm > 1e-9 * scale.max(1.0) {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
        if basis.len() == inst.n() {
            break;
        }
    }
    basis
}

fn lift(basis: &[Vec<f64>], coords: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (q, &w) in basis.iter().zip(coords) {
        for (o, qi) in out.iter_mut().zip(q) {
            *o += w * qi;
        }
    }
    out
}

/// Spans the null space of the `(r-1) x r` submatrix via signed cofactors;
/// `None` when the subset is rank deficient.
fn null_direction(reduced: &[Vec<f64>], subset: &[usize], r: usize) -> Option<Vec<f64>> {
    if r == 1 {
        return Some(vec![1.0]);
    }
    let d: Vec<f64> = (0..r)
        .map(|skip| {
            let mut minor = Vec::with_capacity((r - 1) * (r - 1));
            for &s in subset {
                minor.extend(reduced[s].iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| *v));
            }
            let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(r - 1, minor)
        })
        .collect();
    let norm = norm2(&d);
    (norm > RANK_TOL).then(|| d.into_iter().map(|v| v / norm).collect())
}

/// Gauss-Jordan inverse with partial pivoting; `None` when a pivot falls
/// below `RANK_TOL`.
fn inverse(n: usize, mut a: Vec<f64>) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if a[p * n + k].abs() <= RANK_TOL {
            return None;
        }
        for j in 0..n {
            a.swap(k * n + j, p * n + j);
            inv.swap(k * n + j, p * n + j);
        }
        let d = a[k * n + k];
        for j in 0..n {
            a[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for i in (0..n).filter(|&i| i != k) {
            let f = a[i * n + k];
            if f != 0.0 {
                for j in 0..n {
                    a[i * n + j] -= f * a[k * n + j];
                    inv[i * n + j] -= f * inv[k * n + j];
                }
            }
        }
    }
    Some(inv)
}

fn det(n: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if a[p * n + k] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k];
        det *= d;
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    det
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use randlp::linalg::DenseMatrix;
    use randlp::solver::{ray_is_valid, SolveStatus};

    fn inst(rows: &[&[f64]], c: &[f64]) -> LpInstance {
        LpInstance::new(DenseMatrix::from_rows(rows).unwrap(), Vector::new(c.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let p = inst(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, -1.0]], &[1.0, 0.0]);
        assert!((brute_force_oracle(&p).unwrap().z_star().unwrap() - 1.0).abs() < 1e-12);

        let p = inst(&[&[1.0, 0.0]], &[0.0, 1.0]);
        assert_eq!(brute_force_oracle(&p).unwrap().status(), SolveStatus::Unbounded);

        let p = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 0.0]);
        let out = brute_force_oracle(&p).unwrap();
        assert!((out.z_star().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointed_cone_ray() {
        // rows (-1,0), (0,-1): P is the positive orthant shifted, unbounded along c
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = inst(&[&[-1.0, 0.0], &[0.0, -1.0], &[1.0, -1.0]], &[h, h]);
        let SolveOutcome::Unbounded { ray, .. } = brute_force_oracle(&p).unwrap() else {
            panic!("expected unbounded");
        };
        assert!(ray_is_valid(&p, &ray, 1e-9));
    }

    #[test]
    fn size_limit() {
        let a = DenseMatrix::from_row_major(13, 2, vec![1.0; 26]).unwrap();
        let c = Vector::new(vec![1.0, 0.0]).unwrap();
        let p = LpInstance::new(a, c).unwrap();
        assert_eq!(brute_force_oracle(&p), Err(OracleError::TooLarge { m: 13, n: 2 }));
    }

    #[test]
    fn inverse_examples() {
        let inv = inverse(2, vec![0.0, 2.0, 1.0, 1.0]).unwrap();
        assert_eq!(inv, vec![-0.5, 1.0, 0.5, 0.0]);
        assert!(inverse(2, vec![1.0, 2.0, 2.0, 4.0]).is_none());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
