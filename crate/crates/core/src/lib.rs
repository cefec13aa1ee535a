//! Random linear programs `max ⟨c,x⟩ s.t. Ax ≤ 1` with subgaussian constraint
//! matrices.
//!
//! The crate samples instances, solves them exactly with a revised simplex on
//! the dual standard form, restores feasibility of the scaled cost vector
//! with a block Kaczmarz projection, and runs the Monte Carlo studies
//! (objective tables, standard deviations, sparse cost vectors, limiting
//! distribution, mean width, moderate-deviation tails) behind the `randlp`
//! CLI.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod sampling;
pub mod solver;
pub mod par;
pub mod restore;
pub mod stats;
