//! Declarative Monte Carlo campaigns: objective and standard-deviation
//! tables, sparse cost vectors, the limiting-distribution study, the
//! feasibility-restoration table, mean widths and tail checks.
//!
//! Every replicate draws from its own stream
//! `stream_index(purpose, cell, replicate)` under the configured master seed,
//! so results do not depend on the number of workers or the order in which
//! replicates finish.

mod campaign;
mod config;
mod emit;
pub mod svg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use campaign::*;
pub use config::*;
pub use emit::{strip_wall_time, write_csv, write_jsonl};

use crate::solver::{solve, LpInstance, SolveOptions, SolveOutcome, SolveStatus, SolverError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Failed(String),
}

/// Stream purposes, stored in the top byte of a stream index.
pub mod purpose {
    pub const MATRIX: u64 = 1;
    pub const COST: u64 = 2;
    pub const DIRECTIONS: u64 = 3;
    pub const TAIL: u64 = 4;
}

/// `purpose << 56 | cell << 32 | replicate`, with `cell < 2^24` and
/// `replicate < 2^32`. Injective on that range.
pub fn stream_index(purpose: u64, cell: usize, replicate: usize) -> u64 {
    debug_assert!(cell < 1 << 24 && (replicate as u64) < 1 << 32);
    purpose << 56 | (cell as u64) << 32 | replicate as u64
}

/// The LP back end used by campaigns; test doubles implement it too.
pub trait LpSolver: Sync {
    fn solve(&self, inst: &LpInstance) -> Result<SolveOutcome, SolverError>;
}

/// The revised simplex solver with fixed options.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexSolver(pub SolveOptions);

impl LpSolver for SimplexSolver {
    fn solve(&self, inst: &LpInstance) -> Result<SolveOutcome, SolverError> {
        solve(inst, &self.0)
    }
}

/// One replicate of a campaign, persisted as a JSON line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub m: usize,
    pub n: usize,
    pub cell: usize,
    pub replicate_index: usize,
    pub master_seed: u64,
    /// Stream of the constraint matrix.
    pub stream_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SolveStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_star: Option<f64>,
    pub pivots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audited: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// `⟨c, x⟩` of the restored point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time: f64,
}

impl RunRecord {
    /// `z*` of a successful optimal replicate.
    pub fn usable_z(&self) -> Option<f64> {
        if self.error.is_some() {
            return None;
        }
        self.z_star
    }
}
