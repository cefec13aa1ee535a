//! Exact solution of `max ⟨c,x⟩ s.t. Ax ≤ 1` with free `x`.
//!
//! The working problem is the dual standard form `min ⟨1,y⟩ s.t. Aᵀy = c,
//! y ≥ 0`, whose basis is only `n x n`. The simplex multipliers of its
//! equality rows are the primal optimum `x*`; phase-1 infeasibility of the
//! dual certifies that the primal is unbounded.

mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, matvec_t, norm2, DenseMatrix, LinalgError, Vector};

pub use simplex::solve;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cost vector must have unit norm (got {0})")]
    NotUnitCost(f64),
    #[error("instance must have at least one row and one column")]
    Empty,
    #[error("numerical failure after {pivots} pivots: {reason}")]
    NumericalFailure { pivots: usize, reason: String },
    #[error("dual multiplier {index} is negative ({value})")]
    NegativeDual { index: usize, value: f64 },
}

/// The random LP `max ⟨c,x⟩ s.t. Ax ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub a: DenseMatrix,
    pub c: Vector,
}

impl LpInstance {
    pub fn new(a: DenseMatrix, c: Vector) -> Result<Self, SolverError> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(SolverError::Empty);
        }
        if c.len() != a.cols() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.cols(),
                got: c.len(),
            }
            .into());
        }
        let norm = c.norm2();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SolverError::NotUnitCost(norm));
        }
        Ok(Self { a, c })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub opt_tol: f64,
    /// Defaults to `50 (m + n)` when `None`.
    pub max_pivots: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            pivot_tol: 1e-9,
            opt_tol: 1e-9,
            max_pivots: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSolution {
    pub z_star: f64,
    pub x_star: Vector,
    /// Dual certificate, `y ≥ 0`, `Aᵀy = c`.
    pub y_star: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveOutcome {
    Optimal {
        #[serde(flatten)]
        solution: OptimalSolution,
        pivots: usize,
    },
    /// `ray` satisfies `A·ray ≤ feas_tol` and `⟨c, ray⟩ = 1`.
    Unbounded { ray: Vector, pivots: usize },
}

impl SolveOutcome {
    pub fn status(&self) -> SolveStatus {
        match self {
            Self::Optimal { .. } => SolveStatus::Optimal,
            Self::Unbounded { .. } => SolveStatus::Unbounded,
        }
    }

    pub fn z_star(&self) -> Option<f64> {
        match self {
            Self::Optimal { solution, .. } => Some(solution.z_star),
            Self::Unbounded { .. } => None,
        }
    }

    pub fn optimal(&self) -> Option<&OptimalSolution> {
        match self {
            Self::Optimal { solution, .. } => Some(solution),
            Self::Unbounded { .. } => None,
        }
    }

    pub fn pivots(&self) -> usize {
        match self {
            Self::Optimal { pivots, .. } | Self::Unbounded { pivots, .. } => *pivots,
        }
    }
}

/// `max_i (⟨row_i(A), x⟩ - 1)`.
pub fn check_feasible(a: &DenseMatrix, x: &[f64]) -> Result<f64, SolverError> {
    if x.len() != a.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.cols(),
            got: x.len(),
        }
        .into());
    }
    Ok(a.row_iter().map(|row| dot(row, x) - 1.0).fold(f64::NEG_INFINITY, f64::max))
}

/// `⟨1, y⟩ - ⟨c, x⟩`.
pub fn duality_gap(inst: &LpInstance, x: &[f64], y: &[f64]) -> Result<f64, SolverError> {
    if x.len() != inst.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: inst.n(),
            got: x.len(),
        }
        .into());
    }
    if y.len() != inst.m() {
        return Err(LinalgError::DimensionMismatch {
            expected: inst.m(),
            got: y.len(),
        }
        .into());
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, &v)| v < -1e-12) {
        return Err(SolverError::NegativeDual { index, value });
    }
    Ok(y.iter().sum::<f64>() - dot(&inst.c, x))
}

/// `‖Aᵀy - c‖∞`.
pub fn dual_residual(inst: &LpInstance, y: &[f64]) -> Result<f64, SolverError> {
    let aty = matvec_t(&inst.a, y)?;
    Ok(aty.iter().zip(inst.c.iter()).fold(0.0, |m, (p, q)| m.max((p - q).abs())))
}

/// Worst violations of an optimal certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub primal_violation: f64,
    pub dual_residual: f64,
    pub min_dual: f64,
    pub gap: f64,
}

impl CertificateReport {
    pub fn holds(&self, feas_tol: f64, dual_tol: f64, gap_tol: f64) -> bool {
        self.primal_violation <= feas_tol
            && self.dual_residual <= dual_tol
            && self.min_dual >= -1e-12
            && self.gap.abs() <= gap_tol
    }
}

pub fn audit(inst: &LpInstance, sol: &OptimalSolution) -> Result<CertificateReport, SolverError> {
    let min_dual = sol.y_star.iter().copied().fold(f64::INFINITY, f64::min);
    let y_clamped: Vec<f64> = sol.y_star.iter().map(|v| v.max(0.0)).collect();
    Ok(CertificateReport {
        primal_violation: check_feasible(&inst.a, &sol.x_star)?,
        dual_residual: dual_residual(inst, &sol.y_star)?,
        min_dual,
        gap: duality_gap(inst, &sol.x_star, &y_clamped)?,
    })
}

/// Checks an unbounded ray: `A·ray ≤ feas_tol` and `⟨c, ray⟩ ≥ 1 - 1e-9`.
pub fn ray_is_valid(inst: &LpInstance, ray: &[f64], feas_tol: f64) -> bool {
    let dir_ok = inst.a.row_iter().all(|row| dot(row, ray) <= feas_tol);
    dir_ok && dot(&inst.c, ray) >= 1.0 - 1e-9 && norm2(ray).is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rows: &[&[f64]], c: &[f64]) -> LpInstance {
        LpInstance::new(DenseMatrix::from_rows(rows).unwrap(), Vector::new(c.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn check_feasible_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(check_feasible(&id, &[0.0, 0.0]).unwrap(), -1.0);
        let a = DenseMatrix::from_rows(&[[2.0, 1.0]]).unwrap();
        assert!((check_feasible(&a, &[0.6, 0.0]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(check_feasible(&id, &[1.0, 1.0]).unwrap(), 0.0);
        assert!(check_feasible(&id, &[1.0]).is_err());
    }

    #[test]
    fn duality_gap_examples() {
        let p = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 0.0]);
        assert_eq!(duality_gap(&p, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        // weak duality at x = 0
        assert_eq!(duality_gap(&p, &[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            duality_gap(&p, &[0.0, 0.0], &[1.0, -0.1]),
            Err(SolverError::NegativeDual { index: 1, .. })
        ));
    }

    #[test]
    fn instance_validation() {
        let a = DenseMatrix::identity(2);
        assert!(matches!(
            LpInstance::new(a.clone(), Vector::new(vec![1.0, 1.0]).unwrap()),
            Err(SolverError::NotUnitCost(_))
        ));
        assert!(LpInstance::new(a, Vector::new(vec![1.0]).unwrap()).is_err());
    }
}
