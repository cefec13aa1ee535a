//! Spherical mean width of `P = {x : Ax ≤ 1}` by Monte Carlo over cost
//! directions, and the feasible-point lower bound `1/‖Ac‖∞`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{matvec, DenseMatrix, LinalgError, Vector};
use crate::par::par_map;
use crate::sampling::{sample_cost_vector, CostVectorKind, SamplingError, SeedSpec};
use crate::solver::{solve, LpInstance, SolveOptions, SolveOutcome, SolverError};
use crate::stats::{asymptotic_bound, summarize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("direction {direction} is unbounded")]
    UnboundedDirection { direction: usize },
    #[error("need at least {MIN_TRIALS} trials (got {0})")]
    TooFewTrials(usize),
    #[error("cost vector must have unit norm (got {0})")]
    NotUnitCost(f64),
    #[error("Ac = 0")]
    ZeroImage,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub const MIN_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWidthEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub trials: usize,
    /// `√(2 log(m/n)) · estimate`; absent when `m ≤ n`.
    pub normalized: Option<f64>,
}

/// `W(P) ≈ (2/T) Σ_t z*(c_t)` over `T` uniform directions. Direction `t` is
/// drawn from `seed.substream(t)`, so the result does not depend on `workers`.
pub fn mean_width_mc(
    a: &DenseMatrix,
    trials: usize,
    seed: SeedSpec,
    workers: usize,
) -> Result<MeanWidthEstimate, GeometryError> {
    if trials < MIN_TRIALS {
        return Err(GeometryError::TooFewTrials(trials));
    }
    let opts = SolveOptions::default();
    let values = par_map(trials, workers, |t| -> Result<f64, GeometryError> {
        let c = sample_cost_vector(CostVectorKind::UniformSphere, a.cols(), seed.substream(t as u64))?;
        let inst = LpInstance::new(a.clone(), c)?;
        match solve(&inst, &opts)? {
            SolveOutcome::Optimal { solution, .. } => Ok(solution.z_star),
            SolveOutcome::Unbounded { .. } => Err(GeometryError::UnboundedDirection { direction: t }),
        }
    });
    let values = values.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let summary = summarize(&values).expect("at least MIN_TRIALS finite values");
    let estimate = 2.0 * summary.mean;
    Ok(MeanWidthEstimate {
        estimate,
        standard_error: 2.0 * summary.standard_error(),
        trials,
        normalized: asymptotic_bound(a.rows(), a.cols()).ok().map(|ab| estimate / ab),
    })
}

/// `1/‖Ac‖∞`; the point `c/‖Ac‖∞` is feasible, so this bounds `z*` from below.
pub fn scaled_cost_bound(a: &DenseMatrix, c: &[f64]) -> Result<f64, GeometryError> {
    let c = Vector::new(c.to_vec())?;
    let norm = c.norm2();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NotUnitCost(norm));
    }
    let inf = matvec(a, &c)?.norm_inf();
    if inf == 0.0 {
        return Err(GeometryError::ZeroImage);
    }
    Ok(inf.recip())
}
