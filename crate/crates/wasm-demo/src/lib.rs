//! Browser bindings: a random polygon with its mean width, the sampling
//! distribution of `z*` for small instances, and a feasibility-restoration
//! trace. Every export returns a JSON string.

use randlp::geometry::mean_width_mc;
use randlp::linalg::{DenseMatrix, Vector};
use randlp::restore::{restore, RestoreOptions};
use randlp::sampling::{sample_cost_vector, sample_matrix, CostVectorKind, EntryDistribution, SeedSpec};
use randlp::solver::{solve, LpInstance, SolveOptions, SolveOutcome};
use randlp::stats::{asymptotic_bound, histogram, ks_test, sturges_bins};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_ROWS: usize = 5000;
const MAX_SAMPLES: usize = 2000;

fn parse_dist(name: &str) -> Result<EntryDistribution, String> {
    match name {
        "gaussian" => Ok(EntryDistribution::Gaussian),
        "rademacher" => Ok(EntryDistribution::Rademacher),
        "bernoulli-normal" => Ok(EntryDistribution::HALF_BERNOULLI_NORMAL),
        _ => Err(format!("unknown distribution {name:?}")),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct Polygon {
    pub rows: Vec<[f64; 2]>,
    /// Counter-clockwise vertices of `{x : Ax ≤ 1}`; empty when unbounded.
    pub vertices: Vec<[f64; 2]>,
    pub bounded: bool,
    pub mean_width: Option<f64>,
    pub standard_error: Option<f64>,
    pub normalized: Option<f64>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut h: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
                h.pop();
            }
            h.push(q);
        }
        h.pop();
    }
    h
}

/// `P = {x : Ax ≤ 1}` is the polar of `conv(rows)`: it is bounded iff the
/// origin lies strictly inside the hull, and each hull edge `(p, q)` gives
/// the vertex solving `⟨p, x⟩ = ⟨q, x⟩ = 1`.
fn polar_vertices(rows: &[[f64; 2]]) -> Option<Vec<[f64; 2]>> {
    let h = hull(rows);
    if h.len() < 3 {
        return None;
    }
    let mut out = Vec::with_capacity(h.len());
    for i in 0..h.len() {
        let (p, q) = (h[i], h[(i + 1) % h.len()]);
        if cross(p, q, [0.0, 0.0]) <= 1e-12 {
            return None;
        }
        let det = p[0] * q[1] - p[1] * q[0];
        out.push([(q[1] - p[1]) / det, (p[0] - q[0]) / det]);
    }
    Some(out)
}

pub fn polygon(m: usize, dist: &str, seed: u64, trials: usize) -> Result<Polygon, String> {
    if !(3..=MAX_ROWS).contains(&m) {
        return Err(format!("m must lie in 3..={MAX_ROWS}"));
    }
    let a = sample_matrix(parse_dist(dist)?, m, 2, SeedSpec::new(seed, 0)).map_err(|e| e.to_string())?;
    let rows: Vec<[f64; 2]> = a.row_iter().map(|r| [r[0], r[1]]).collect();
    let vertices = polar_vertices(&rows);
    let width = match vertices {
        Some(_) => Some(mean_width_mc(&a, trials, SeedSpec::new(seed, 1), 1).map_err(|e| e.to_string())?),
        None => None,
    };
    Ok(Polygon {
        rows,
        bounded: vertices.is_some(),
        vertices: vertices.unwrap_or_default(),
        mean_width: width.map(|w| w.estimate),
        standard_error: width.map(|w| w.standard_error),
        normalized: width.and_then(|w| w.normalized),
    })
}

#[derive(Debug, Serialize)]
pub struct ObjectiveSample {
    pub ab: f64,
    pub z: Vec<f64>,
    pub mean: f64,
    pub bins: Vec<(f64, f64, usize)>,
    pub ks_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub unbounded: usize,
}

pub fn objective_sample(m: usize, n: usize, dist: &str, samples: usize, seed: u64) -> Result<ObjectiveSample, String> {
    if n == 0 || m <= n || m * n > MAX_ROWS * 20 {
        return Err(format!("need m > n >= 1 and m*n <= {}", MAX_ROWS * 20));
    }
    if !(1..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must lie in 1..={MAX_SAMPLES}"));
    }
    let dist = parse_dist(dist)?;
    let c = sample_cost_vector(CostVectorKind::RescaledRademacher, n, SeedSpec::new(seed, u64::MAX))
        .map_err(|e| e.to_string())?;
    let mut z = Vec::with_capacity(samples);
    let mut unbounded = 0;
    for rep in 0..samples as u64 {
        let a = sample_matrix(dist, m, n, SeedSpec::new(seed, rep)).map_err(|e| e.to_string())?;
        let inst = LpInstance::new(a, c.clone()).map_err(|e| e.to_string())?;
        match solve(&inst, &SolveOptions::default()).map_err(|e| e.to_string())? {
            SolveOutcome::Optimal { solution, .. } => z.push(solution.z_star),
            SolveOutcome::Unbounded { .. } => unbounded += 1,
        }
    }
    if z.is_empty() {
        return Err("every sample was unbounded".into());
    }
    let bins = histogram(&z, sturges_bins(z.len()))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|b| (b.bin_left, b.bin_right, b.count))
        .collect();
    let ks = ks_test(&z).ok();
    Ok(ObjectiveSample {
        ab: asymptotic_bound(m, n).map_err(|e| e.to_string())?,
        mean: z.iter().sum::<f64>() / z.len() as f64,
        z,
        bins,
        ks_statistic: ks.map(|k| k.statistic),
        p_value: ks.map(|k| k.p_value),
        unbounded,
    })
}

#[derive(Debug, Serialize)]
pub struct TraceStep {
    pub block_size: usize,
    pub epsilon: f64,
    pub update_norm: f64,
    pub dropped: usize,
}

#[derive(Debug, Serialize)]
pub struct RestoreSummary {
    pub ab: f64,
    pub converged: bool,
    pub max_violation: f64,
    pub initial_violations: usize,
    pub steps: Vec<TraceStep>,
    pub error: Option<String>,
}

pub fn restore_summary(m: usize, n: usize, dist: &str, seed: u64) -> Result<RestoreSummary, String> {
    if n == 0 || m <= n || m * n > MAX_ROWS * 100 {
        return Err(format!("need m > n >= 1 and m*n <= {}", MAX_ROWS * 100));
    }
    let a = sample_matrix(parse_dist(dist)?, m, n, SeedSpec::new(seed, 0)).map_err(|e| e.to_string())?;
    let c = sample_cost_vector(CostVectorKind::UniformSphere, n, SeedSpec::new(seed, 1)).map_err(|e| e.to_string())?;
    let ab = asymptotic_bound(m, n).map_err(|e| e.to_string())?;
    let initial_violations = count_violations(&a, &c, ab);
    let (trace, error) = match restore(&a, &c, &RestoreOptions::default()) {
        Ok(t) => (t, None),
        Err(e) => match e.trace() {
            Some(t) => (t.clone(), Some(e.to_string())),
            None => return Err(e.to_string()),
        },
    };
    Ok(RestoreSummary {
        ab,
        converged: trace.converged,
        max_violation: trace.max_violation,
        initial_violations,
        steps: trace
            .iterates
            .iter()
            .map(|it| TraceStep {
                block_size: it.violated_set_size,
                epsilon: it.epsilon,
                update_norm: it.update_norm,
                dropped: it.dropped,
            })
            .collect(),
        error,
    })
}

/// Rows violated by the starting point `ab · c`.
fn count_violations(a: &DenseMatrix, c: &Vector, ab: f64) -> usize {
    a.row_iter()
        .filter(|r| ab * r.iter().zip(c.iter()).map(|(p, q)| p * q).sum::<f64>() > 1.0)
        .count()
}

#[wasm_bindgen(js_name = randomPolygon)]
pub fn random_polygon(m: usize, dist: &str, seed: u64, trials: usize) -> Result<String, JsError> {
    polygon(m, dist, seed, trials).and_then(|p| to_json(&p)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = objectiveHistogram)]
pub fn objective_histogram(m: usize, n: usize, dist: &str, samples: usize, seed: u64) -> Result<String, JsError> {
    objective_sample(m, n, dist, samples, seed)
        .and_then(|s| to_json(&s))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = restoreTrace)]
pub fn restore_trace(m: usize, n: usize, dist: &str, seed: u64) -> Result<String, JsError> {
    restore_summary(m, n, dist, seed).and_then(|s| to_json(&s)).map_err(|e| JsError::new(&e))
}
