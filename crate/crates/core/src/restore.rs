//! Block-iterative Kaczmarz restoration of feasibility for the scaled cost
//! vector `x₀ = (2 log(m/n))^{-1/2} c`.
//!
//! Each iteration collects the rows with `⟨a_i, x⟩ > 1 - ε`, projects them
//! onto `c⊥`, and moves `x` by the combination of the projected rows that
//! places every collected constraint exactly at `1 - ε`. Updates lie in
//! `c⊥`, so the objective `⟨c, x⟩` never changes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, dot, norm2, DenseMatrix, GramFactor, LinalgError, Vector};
use crate::stats::asymptotic_bound;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestoreOptions {
    pub eps0: f64,
    pub shrink: f64,
    pub max_iters: usize,
    pub feas_tol: f64,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            shrink: 0.1,
            max_iters: 50,
            feas_tol: 1e-12,
        }
    }
}

/// Projected rows shorter than this are dropped from a degenerate block.
const MIN_PROJECTED_NORM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreIteration {
    /// `|I_{j-1}|`, rows with `⟨a_i, x⟩ > 1 - ε` at the start of the iteration.
    pub violated_set_size: usize,
    pub epsilon: f64,
    /// `‖x_j‖₂`.
    pub update_norm: f64,
    /// Rows dropped from the block as numerically dependent.
    pub dropped: usize,
    /// Indices of `I_{j-1}`.
    pub block: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreTrace {
    pub initial_x: Vector,
    pub iterates: Vec<RestoreIteration>,
    pub final_x: Vector,
    pub converged: bool,
    pub max_violation: f64,
}

impl RestoreTrace {
    /// Number of block updates performed (`r`).
    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }

    /// `|I_j|` for the `j`-th iteration, zero if it never ran.
    pub fn block_size(&self, j: usize) -> usize {
        self.iterates.get(j).map_or(0, |it| it.violated_set_size)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RestoreError {
    #[error("m = {m} must exceed n = {n} >= 1")]
    BadShape { m: usize, n: usize },
    #[error("cost vector must have unit norm (got {0})")]
    NotUnitCost(f64),
    #[error("invalid options: {0}")]
    BadOptions(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no feasible point after {} iterations", .0.iterations())]
    NonConvergence(Box<RestoreTrace>),
    #[error("singular block after pruning at iteration {}", .0.iterations() + 1)]
    DegenerateBlock(Box<RestoreTrace>),
    #[error("objective requested from a non-converged trace")]
    NotConverged,
}

impl RestoreError {
    /// The partial trace carried by run-time failures.
    pub fn trace(&self) -> Option<&RestoreTrace> {
        match self {
            Self::NonConvergence(t) | Self::DegenerateBlock(t) => Some(t),
            _ => None,
        }
    }
}

impl RestoreOptions {
    fn validate(&self) -> Result<(), RestoreError> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(RestoreError::BadOptions("shrink must lie in (0, 1)"));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(RestoreError::BadOptions("eps0 must lie in (0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(RestoreError::BadOptions("max_iters must be positive"));
        }
        if !(self.feas_tol >= 0.0) {
            return Err(RestoreError::BadOptions("feas_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Runs the restoration from `x₀ = (2 log(m/n))^{-1/2} c`.
pub fn restore(a: &DenseMatrix, c: &[f64], opts: &RestoreOptions) -> Result<RestoreTrace, RestoreError> {
    let (m, n) = (a.rows(), a.cols());
    if n == 0 || m <= n {
        return Err(RestoreError::BadShape { m, n });
    }
    let scale = asymptotic_bound(m, n).map_err(|_| RestoreError::BadShape { m, n })?;
    let x0: Vec<f64> = c.iter().map(|v| scale * v).collect();
    restore_from(a, c, x0, opts)
}

/// Runs the restoration from an arbitrary starting point.
pub fn restore_from(
    a: &DenseMatrix,
    c: &[f64],
    x0: Vec<f64>,
    opts: &RestoreOptions,
) -> Result<RestoreTrace, RestoreError> {
    opts.validate()?;
    let n = a.cols();
    for len in [c.len(), x0.len()] {
        if len != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: len }.into());
        }
    }
    let cn = norm2(c);
    if (cn - 1.0).abs() > 1e-9 {
        return Err(RestoreError::NotUnitCost(cn));
    }
    let initial_x = Vector::new(x0.clone())?;
    let mut x = x0;
    let mut ax = vec![0.0; a.rows()];
    let mut eps = opts.eps0;
    let mut iterates = Vec::new();

    loop {
        a.matvec_into(&x, &mut ax);
        let max_violation = ax.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v - 1.0));
        let trace = |iterates: Vec<RestoreIteration>, x: &[f64], converged| RestoreTrace {
            initial_x: initial_x.clone(),
            iterates,
            final_x: Vector::from_raw(x.to_vec()),
            converged,
            max_violation,
        };
        if max_violation <= opts.feas_tol {
            return Ok(trace(iterates, &x, true));
        }
        if iterates.len() >= opts.max_iters {
            return Err(RestoreError::NonConvergence(Box::new(trace(iterates, &x, false))));
        }

        let block: Vec<usize> = (0..a.rows()).filter(|&i| ax[i] > 1.0 - eps).collect();
        let targets: Vec<f64> = block.iter().map(|&i| 1.0 - eps - ax[i]).collect();
        let projected: Vec<Vec<f64>> = block
            .iter()
            .map(|&i| {
                let row = a.row(i);
                let mut v = row.to_vec();
                axpy(-dot(row, c), c, &mut v);
                v
            })
            .collect();

        let Some((update, dropped)) = block_update(&projected, &targets)? else {
            return Err(RestoreError::DegenerateBlock(Box::new(trace(iterates, &x, false))));
        };
        iterates.push(RestoreIteration {
            violated_set_size: block.len(),
            epsilon: eps,
            update_norm: norm2(&update),
            dropped,
            block,
        });
        eps *= opts.shrink;
        axpy(1.0, &update, &mut x);
    }
}

/// Solves `MᵀM u = b` and returns `M u`; on a singular Gram matrix retries
/// once without the short and the dependent columns.
fn block_update(columns: &[Vec<f64>], b: &[f64]) -> Result<Option<(Vec<f64>, usize)>, RestoreError> {
    let n = columns.first().map_or(0, Vec::len);
    let combine = |cols: &[&Vec<f64>], u: &[f64]| {
        let mut out = vec![0.0; n];
        for (col, &w) in cols.iter().zip(u) {
            axpy(w, col, &mut out);
        }
        out
    };
    let all: Vec<&Vec<f64>> = columns.iter().collect();
    let dependent = match GramFactor::from_columns(&all).solve(b) {
        Ok(u) => return Ok(Some((combine(&all, &u), 0))),
        Err(LinalgError::SingularGram { dependent, .. }) => dependent,
        Err(e) => return Err(e.into()),
    };
    let keep: Vec<usize> = (0..columns.len())
        .filter(|i| norm2(&columns[*i]) >= MIN_PROJECTED_NORM && !dependent.contains(i))
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let cols: Vec<&Vec<f64>> = keep.iter().map(|&i| &columns[i]).collect();
    let sub_b: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
    match GramFactor::from_columns(&cols).solve(&sub_b) {
        Ok(u) => Ok(Some((combine(&cols, &u), columns.len() - keep.len()))),
        Err(LinalgError::SingularGram { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// `⟨c, final_x⟩` of a converged trace.
pub fn objective_of(trace: &RestoreTrace, c: &[f64]) -> Result<f64, RestoreError> {
    if !trace.converged {
        return Err(RestoreError::NotConverged);
    }
    Ok(dot(c, &trace.final_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_cost_vector, sample_matrix, CostVectorKind, EntryDistribution, SeedSpec};
    use crate::solver::check_feasible;

    #[test]
    fn single_block_hand_check() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]).unwrap();
        let c = [1.0, 0.0];
        let t = restore_from(&a, &c, vec![0.6, 0.0], &RestoreOptions::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations(), 1);
        assert_eq!(t.iterates[0].block, vec![0]);
        assert!((t.iterates[0].update_norm - 0.3).abs() < 1e-15);
        assert!((t.final_x[0] - 0.6).abs() < 1e-15);
        assert!((t.final_x[1] + 0.3).abs() < 1e-15);
        assert!((dot(a.row(0), &t.final_x) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn already_feasible() {
        // m/n = 3, x0 = (2 ln 3)^{-1/2} (1, 0) ≈ (0.675, 0)
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0], [1.0, -1.0]])
            .unwrap();
        let c = [1.0, 0.0];
        let t = restore(&a, &c, &RestoreOptions::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations(), 0);
        assert_eq!(t.final_x, t.initial_x);
        assert!((t.initial_x[0] - (2.0 * 3f64.ln()).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn row_parallel_to_cost_is_degenerate() {
        // x0 = (2 ln 2)^{-1/2} e1 ≈ 0.849 e1; row 2e1 is violated and has v = 0
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]).unwrap();
        let err = restore(&a, &[1.0, 0.0], &RestoreOptions::default()).unwrap_err();
        assert!(matches!(err, RestoreError::DegenerateBlock(_)));
        assert_eq!(err.trace().unwrap().iterations(), 0);
    }

    #[test]
    fn non_convergence_keeps_trace() {
        // the first block update pushes row 1 from 0.6 to 1.2
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, -2.0], [-1.0, 0.0], [0.0, 1.0]]).unwrap();
        let opts = RestoreOptions {
            max_iters: 1,
            ..Default::default()
        };
        let err = restore_from(&a, &[1.0, 0.0], vec![0.6, 0.0], &opts).unwrap_err();
        assert!(matches!(err, RestoreError::NonConvergence(_)));
        let trace = err.trace().unwrap();
        assert_eq!(trace.iterations(), 1);
        assert_eq!(trace.iterates[0].block, vec![0]);
        assert!(!trace.converged);
        assert!((trace.max_violation - 0.2).abs() < 1e-12);
        assert_eq!(objective_of(trace, &[1.0, 0.0]), Err(RestoreError::NotConverged));
    }

    #[test]
    fn option_and_shape_validation() {
        let a = DenseMatrix::identity(2);
        assert!(matches!(
            restore(&a, &[1.0, 0.0], &RestoreOptions::default()),
            Err(RestoreError::BadShape { m: 2, n: 2 })
        ));
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let bad = RestoreOptions {
            shrink: 1.0,
            ..Default::default()
        };
        assert!(matches!(restore(&a, &[1.0, 0.0], &bad), Err(RestoreError::BadOptions(_))));
        assert!(matches!(
            restore(&a, &[1.0, 1.0], &RestoreOptions::default()),
            Err(RestoreError::NotUnitCost(_))
        ));
    }

    #[test]
    fn gaussian_invariants() {
        let (m, n) = (1000, 50);
        let mut small = 0;
        let runs = 100;
        for s in 0..runs {
            let a = sample_matrix(EntryDistribution::Gaussian, m, n, SeedSpec::new(2024, 2 * s)).unwrap();
            let c = sample_cost_vector(CostVectorKind::UniformSphere, n, SeedSpec::new(2024, 2 * s + 1)).unwrap();
            let t = match restore(&a, &c, &RestoreOptions::default()) {
                Ok(t) => t,
                Err(e) => panic!("run {s}: {e}"),
            };
            assert!(check_feasible(&a, &t.final_x).unwrap() <= 1e-12);
            let ab = asymptotic_bound(m, n).unwrap();
            assert!((objective_of(&t, &c).unwrap() - ab).abs() <= 1e-10);
            for (j, it) in t.iterates.iter().enumerate() {
                assert!((it.epsilon - 0.1 * 0.1f64.powi(j as i32)).abs() <= 1e-18);
            }
            if t.iterations() <= 3 && (1..=60).contains(&t.block_size(0)) {
                small += 1;
            }
        }
        assert!(small >= 95, "only {small} of {runs} runs had r <= 3 and |I0| in [1, 60]");
    }

    #[test]
    fn block_repair_is_exact() {
        let (m, n) = (2000, 40);
        let a = sample_matrix(EntryDistribution::Gaussian, m, n, SeedSpec::new(5, 0)).unwrap();
        let c = sample_cost_vector(CostVectorKind::UniformSphere, n, SeedSpec::new(5, 1)).unwrap();
        let opts = RestoreOptions::default();
        let scale = asymptotic_bound(m, n).unwrap();
        let mut x: Vec<f64> = c.iter().map(|v| scale * v).collect();
        // replay one iteration at a time
        for j in 0..4 {
            let single = RestoreOptions {
                max_iters: 1,
                eps0: opts.eps0 * opts.shrink.powi(j),
                ..opts
            };
            let t = match restore_from(&a, &c, x.clone(), &single) {
                Ok(t) if t.iterations() == 0 => break,
                Ok(t) => t,
                Err(RestoreError::NonConvergence(t)) => *t,
                Err(e) => panic!("{e}"),
            };
            let it = &t.iterates[0];
            for &i in &it.block {
                let row = a.row(i);
                let v = dot(row, &t.final_x);
                assert!((v - (1.0 - it.epsilon)).abs() <= 1e-7 * (1.0 + norm2(row)));
            }
            x = t.final_x.into_inner();
        }
    }
}
