use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::emit::{write_csv, write_json, write_jsonl, write_text};
use super::svg;
use super::{purpose, stream_index, ExperimentConfig, ExperimentKind, HarnessError, LpSolver, RunRecord};
use super::{CostPolicy, TailDirection, DEFAULT_WIDTH_TRIALS};
use crate::geometry::mean_width_mc;
use crate::linalg::Vector;
use crate::par::par_map;
use crate::restore::{restore, RestoreOptions};
use crate::sampling::{sample_cost_vector, sample_matrix, CostVectorKind, SeedSpec};
use crate::solver::{audit, LpInstance, SolveOutcome};
use crate::stats::{
    asymptotic_bound, ecdf, histogram, ks_test, normal_sf, relative_gap, sturges_bins, summarize,
    tail_probability_mc, HistogramBin, KsResult,
};

/// Every `AUDIT_EVERY`-th replicate re-checks its optimality certificate.
pub const AUDIT_EVERY: usize = 20;

/// Files written by a campaign and how many replicates failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub files: Vec<PathBuf>,
    pub records: usize,
    pub excluded: usize,
}

impl CampaignOutput {
    /// 0 on full success, 2 when some replicates were excluded.
    pub fn exit_code(&self) -> i32 {
        if self.excluded > 0 {
            2
        } else {
            0
        }
    }
}

/// Runs the configured campaign and persists its outputs under `output_dir`.
pub fn run_campaign(cfg: &ExperimentConfig, solver: &dyn LpSolver) -> Result<CampaignOutput, HarnessError> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::ObjectiveTable => run_objective_table(cfg, solver)?.write(cfg),
        ExperimentKind::StdDevTable => run_stddev_table(cfg, solver)?.write(cfg),
        ExperimentKind::SparseCostTable => run_sparse_cost_table(cfg, solver)?.write(cfg),
        ExperimentKind::DistributionStudy => run_distribution_study(cfg, solver)?.write(cfg),
        ExperimentKind::AlgorithmTable => run_algorithm_table(cfg)?.write(cfg),
        ExperimentKind::MeanWidth => run_mean_width(cfg)?.write(cfg),
        ExperimentKind::TailCheck => run_tail_check(cfg)?.write(cfg),
    }
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<(), HarnessError> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(HarnessError::Failed(format!("expected a {kind:?} config, got {:?}", cfg.kind)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    index: usize,
    /// Cells sharing a matrix cell see the same matrices.
    matrix_cell: usize,
    m: usize,
    n: usize,
    cost: CostVectorKind,
    k: Option<usize>,
}

fn grid_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    cfg.grid
        .iter()
        .enumerate()
        .map(|(g, &(m, n))| Cell {
            index: g,
            matrix_cell: g,
            m,
            n,
            cost: cfg.cost_kind,
            k: None,
        })
        .collect()
}

fn cost_stream(cfg: &ExperimentConfig, cell: usize, rep: usize) -> u64 {
    match cfg.cost_policy {
        CostPolicy::FixedAcrossReplicates => stream_index(purpose::COST, cell, 0),
        CostPolicy::FreshPerReplicate => stream_index(purpose::COST, cell, rep),
    }
}

/// Samples and solves `sample_size` replicates per cell, in (cell, replicate)
/// order.
fn solve_cells(cfg: &ExperimentConfig, cells: &[Cell], solver: &dyn LpSolver) -> Vec<RunRecord> {
    let reps = cfg.sample_size;
    par_map(cells.len() * reps, cfg.workers, |job| {
        let (cell, rep) = (&cells[job / reps], job % reps);
        solve_replicate(cfg, cell, rep, solver)
    })
}

fn solve_replicate(cfg: &ExperimentConfig, cell: &Cell, rep: usize, solver: &dyn LpSolver) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord {
        m: cell.m,
        n: cell.n,
        cell: cell.index,
        replicate_index: rep,
        master_seed: cfg.master_seed,
        stream_index: stream_index(purpose::MATRIX, cell.matrix_cell, rep),
        cost_stream: Some(cost_stream(cfg, cell.index, rep)),
        k: cell.k,
        ..Default::default()
    };
    let built = sample_matrix(cfg.dist, cell.m, cell.n, SeedSpec::new(cfg.master_seed, rec.stream_index))
        .map_err(|e| e.to_string())
        .and_then(|a| {
            let c = sample_cost_vector(cell.cost, cell.n, SeedSpec::new(cfg.master_seed, rec.cost_stream.unwrap()))
                .map_err(|e| e.to_string())?;
            LpInstance::new(a, c).map_err(|e| e.to_string())
        });
    match built.and_then(|inst| solver.solve(&inst).map(|out| (inst, out)).map_err(|e| e.to_string())) {
        Ok((inst, out)) => {
            rec.status = Some(out.status());
            rec.pivots = out.pivots();
            match out {
                SolveOutcome::Optimal { solution, .. } => {
                    rec.z_star = Some(solution.z_star);
                    if rep.is_multiple_of(AUDIT_EVERY) {
                        let ok = audit(&inst, &solution).is_ok_and(|r| r.holds(1e-9, 1e-7, 1e-7));
                        rec.audited = Some(ok);
                        if !ok {
                            rec.error = Some("certificate audit failed".into());
                        }
                    }
                }
                SolveOutcome::Unbounded { .. } => rec.error = Some("unbounded".into()),
            }
        }
        Err(e) => rec.error = Some(e),
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

fn usable(records: &[RunRecord], cell: usize) -> Vec<f64> {
    records.iter().filter(|r| r.cell == cell).filter_map(RunRecord::usable_z).collect()
}

fn excluded(records: &[RunRecord]) -> usize {
    records.iter().filter(|r| r.error.is_some()).count()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRow {
    pub m: usize,
    pub n: usize,
    pub ab: f64,
    pub mu_hat: f64,
    pub relative_gap_pct: f64,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTable {
    pub rows: Vec<ObjectiveRow>,
    pub records: Vec<RunRecord>,
    pub excluded: usize,
}

pub fn run_objective_table(cfg: &ExperimentConfig, solver: &dyn LpSolver) -> Result<ObjectiveTable, HarnessError> {
    require(cfg, ExperimentKind::ObjectiveTable)?;
    let cells = grid_cells(cfg);
    let records = solve_cells(cfg, &cells, solver);
    let rows = cells
        .iter()
        .map(|c| {
            let z = usable(&records, c.index);
            let ab = asymptotic_bound(c.m, c.n).expect("validated grid");
            let mu_hat = mean(&z);
            ObjectiveRow {
                m: c.m,
                n: c.n,
                ab,
                mu_hat,
                relative_gap_pct: relative_gap(ab, mu_hat).unwrap_or(f64::NAN),
                used: z.len(),
            }
        })
        .collect();
    Ok(ObjectiveTable {
        rows,
        excluded: excluded(&records),
        records,
    })
}

impl ObjectiveTable {
    pub fn csv_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.m, r.n, r.ab, r.mu_hat, r.relative_gap_pct))
            .collect()
    }

    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let dir = &cfg.output_dir;
        let files = vec![
            write_csv(&dir.join("table.csv"), "m,n,ab,mu_hat,relative_gap_pct", &self.csv_lines(), self.excluded)?,
            write_jsonl(&dir.join("records.jsonl"), &self.records)?,
        ];
        Ok(CampaignOutput {
            files,
            records: self.records.len(),
            excluded: self.excluded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdDevRow {
    pub m: usize,
    pub n: usize,
    pub ab: f64,
    pub sigma_hat: f64,
    pub sigma_sqrt_m: f64,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdDevTable {
    pub rows: Vec<StdDevRow>,
    pub records: Vec<RunRecord>,
    pub excluded: usize,
}

pub fn run_stddev_table(cfg: &ExperimentConfig, solver: &dyn LpSolver) -> Result<StdDevTable, HarnessError> {
    require(cfg, ExperimentKind::StdDevTable)?;
    let cells = grid_cells(cfg);
    let records = solve_cells(cfg, &cells, solver);
    let rows = cells
        .iter()
        .map(|c| {
            let z = usable(&records, c.index);
            let sigma_hat = summarize(&z).map_or(f64::NAN, |s| s.std);
            StdDevRow {
                m: c.m,
                n: c.n,
                ab: asymptotic_bound(c.m, c.n).expect("validated grid"),
                sigma_hat,
                sigma_sqrt_m: sigma_hat * (c.m as f64).sqrt(),
                used: z.len(),
            }
        })
        .collect();
    Ok(StdDevTable {
        rows,
        excluded: excluded(&records),
        records,
    })
}

impl StdDevTable {
    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.m, r.n, r.ab, r.sigma_hat, r.sigma_sqrt_m))
            .collect();
        let dir = &cfg.output_dir;
        let files = vec![
            write_csv(&dir.join("table.csv"), "m,n,ab,sigma_hat,sigma_sqrt_m", &lines, self.excluded)?,
            write_jsonl(&dir.join("records.jsonl"), &self.records)?,
        ];
        Ok(CampaignOutput {
            files,
            records: self.records.len(),
            excluded: self.excluded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub mu_hat: f64,
    /// Gap against the baseline computed in the same campaign.
    pub relative_gap_pct: f64,
    /// Gap against `baseline_mu`, when supplied.
    pub relative_gap_supplied_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseBaseline {
    pub m: usize,
    pub n: usize,
    pub cost_kind: CostVectorKind,
    pub mu_tilde: f64,
    pub supplied: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCostTable {
    pub rows: Vec<SparseRow>,
    pub baselines: Vec<SparseBaseline>,
    pub records: Vec<RunRecord>,
    pub excluded: usize,
}

/// One cell per `(grid point, k)` plus a baseline cell with the configured
/// cost kind. All cells of a grid point share their matrices, so differences
/// between rows come from the cost vectors alone.
pub fn run_sparse_cost_table(cfg: &ExperimentConfig, solver: &dyn LpSolver) -> Result<SparseCostTable, HarnessError> {
    require(cfg, ExperimentKind::SparseCostTable)?;
    let ks = cfg.k_values.clone().expect("validated");
    let stride = ks.len() + 1;
    let mut cells = Vec::new();
    for (g, &(m, n)) in cfg.grid.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            cells.push(Cell {
                index: g * stride + j,
                matrix_cell: g,
                m,
                n,
                cost: CostVectorKind::KSpike { k },
                k: Some(k),
            });
        }
        cells.push(Cell {
            index: g * stride + ks.len(),
            matrix_cell: g,
            m,
            n,
            cost: cfg.cost_kind,
            k: None,
        });
    }
    let records = solve_cells(cfg, &cells, solver);
    let mut rows = Vec::new();
    let mut baselines = Vec::new();
    for (g, &(m, n)) in cfg.grid.iter().enumerate() {
        let mu_tilde = mean(&usable(&records, g * stride + ks.len()));
        baselines.push(SparseBaseline {
            m,
            n,
            cost_kind: cfg.cost_kind,
            mu_tilde,
            supplied: cfg.baseline_mu,
        });
        for (j, &k) in ks.iter().enumerate() {
            let mu_hat = mean(&usable(&records, g * stride + j));
            rows.push(SparseRow {
                m,
                n,
                k,
                mu_hat,
                relative_gap_pct: relative_gap(mu_tilde, mu_hat).unwrap_or(f64::NAN),
                relative_gap_supplied_pct: cfg.baseline_mu.map(|b| relative_gap(b, mu_hat).unwrap_or(f64::NAN)),
            });
        }
    }
    Ok(SparseCostTable {
        rows,
        baselines,
        excluded: excluded(&records),
        records,
    })
}

impl SparseCostTable {
    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.m,
                    r.n,
                    r.k,
                    r.mu_hat,
                    r.relative_gap_pct,
                    fmt_opt(r.relative_gap_supplied_pct)
                )
            })
            .collect();
        let base: Vec<String> = self
            .baselines
            .iter()
            .map(|b| format!("{},{},{},{}", b.m, b.n, b.mu_tilde, fmt_opt(b.supplied)))
            .collect();
        let dir = &cfg.output_dir;
        let files = vec![
            write_csv(
                &dir.join("table.csv"),
                "m,n,k,mu_hat,relative_gap_pct,relative_gap_supplied_pct",
                &lines,
                self.excluded,
            )?,
            write_csv(&dir.join("baseline.csv"), "m,n,mu_tilde,supplied", &base, 0)?,
            write_jsonl(&dir.join("records.jsonl"), &self.records)?,
        ];
        Ok(CampaignOutput {
            files,
            records: self.records.len(),
            excluded: self.excluded,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionResult {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub histogram: Vec<HistogramBin>,
    pub ecdf: Vec<(f64, f64)>,
    /// The KS outcome, or the reason it could not be computed.
    pub ks: Result<KsResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionStudy {
    pub results: Vec<DistributionResult>,
    pub records: Vec<RunRecord>,
    pub excluded: usize,
}

pub fn run_distribution_study(
    cfg: &ExperimentConfig,
    solver: &dyn LpSolver,
) -> Result<DistributionStudy, HarnessError> {
    require(cfg, ExperimentKind::DistributionStudy)?;
    let cells = grid_cells(cfg);
    let records = solve_cells(cfg, &cells, solver);
    let mut results = Vec::new();
    for c in &cells {
        let z = usable(&records, c.index);
        if z.is_empty() {
            return Err(HarnessError::Failed(format!("no usable replicates at ({}, {})", c.m, c.n)));
        }
        let bins = cfg.n_bins.unwrap_or_else(|| sturges_bins(z.len()));
        let summary = summarize(&z).ok();
        results.push(DistributionResult {
            m: c.m,
            n: c.n,
            samples: z.len(),
            mean: summary.map_or(z[0], |s| s.mean),
            std: summary.map_or(0.0, |s| s.std),
            histogram: histogram(&z, bins).expect("non-empty finite sample"),
            ecdf: ecdf(&z).expect("non-empty finite sample"),
            ks: ks_test(&z).map_err(|e| e.to_string()),
        });
    }
    Ok(DistributionStudy {
        results,
        excluded: excluded(&records),
        records,
    })
}

impl DistributionStudy {
    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let dir = &cfg.output_dir;
        let mut files = Vec::new();
        let mut summary = Vec::new();
        for r in &self.results {
            let tag = format!("m{}_n{}", r.m, r.n);
            let hist: Vec<String> = r
                .histogram
                .iter()
                .map(|b| format!("{},{},{}", b.bin_left, b.bin_right, b.count))
                .collect();
            let steps: Vec<String> = r.ecdf.iter().map(|(x, f)| format!("{x},{f}")).collect();
            files.push(write_csv(&dir.join(format!("histogram_{tag}.csv")), "bin_left,bin_right,count", &hist, 0)?);
            files.push(write_csv(&dir.join(format!("ecdf_{tag}.csv")), "x,ecdf", &steps, 0)?);
            let title = format!("z*, m = {}, n = {}", r.m, r.n);
            files.push(write_text(&dir.join(format!("histogram_{tag}.svg")), &svg::histogram(&r.histogram, &title))?);
            files.push(write_text(&dir.join(format!("ecdf_{tag}.svg")), &svg::ecdf(&r.ecdf, &title))?);
            files.push(write_json(&dir.join(format!("ks_{tag}.json")), &r.ks)?);
            let (d, p, err) = match &r.ks {
                Ok(k) => (k.statistic.to_string(), k.p_value.to_string(), String::new()),
                Err(e) => (String::new(), String::new(), e.clone()),
            };
            summary.push(format!("{},{},{},{},{},{d},{p},{err}", r.m, r.n, r.samples, r.mean, r.std));
        }
        files.push(write_csv(
            &dir.join("ks.csv"),
            "m,n,samples,mean,std,ks_statistic,p_value,error",
            &summary,
            self.excluded,
        )?);
        files.push(write_jsonl(&dir.join("records.jsonl"), &self.records)?);
        Ok(CampaignOutput {
            files,
            records: self.records.len(),
            excluded: self.excluded,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmTable {
    pub records: Vec<RunRecord>,
    pub traces: Vec<serde_json::Value>,
    pub excluded: usize,
}

/// One restoration run per `(grid point, replicate)`; non-convergence is a
/// row with `converged = false`, not a campaign failure.
pub fn run_algorithm_table(cfg: &ExperimentConfig) -> Result<AlgorithmTable, HarnessError> {
    require(cfg, ExperimentKind::AlgorithmTable)?;
    let cells = grid_cells(cfg);
    let reps = cfg.sample_size;
    let opts = RestoreOptions::default();
    let out = par_map(cells.len() * reps, cfg.workers, |job| {
        let (cell, rep) = (&cells[job / reps], job % reps);
        let start = Instant::now();
        let mut rec = RunRecord {
            m: cell.m,
            n: cell.n,
            cell: cell.index,
            replicate_index: rep,
            master_seed: cfg.master_seed,
            stream_index: stream_index(purpose::MATRIX, cell.matrix_cell, rep),
            cost_stream: Some(cost_stream(cfg, cell.index, rep)),
            ..Default::default()
        };
        let a = sample_matrix(cfg.dist, cell.m, cell.n, SeedSpec::new(cfg.master_seed, rec.stream_index));
        let c = sample_cost_vector(cell.cost, cell.n, SeedSpec::new(cfg.master_seed, rec.cost_stream.unwrap()));
        let trace = match (a, c) {
            (Ok(a), Ok(c)) => {
                let result = restore(&a, &c, &opts);
                let trace = match &result {
                    Ok(t) => Some(t.clone()),
                    Err(e) => e.trace().cloned(),
                };
                if let Err(e) = &result {
                    rec.error = Some(e.to_string());
                }
                if let Some(t) = &trace {
                    rec.r = Some(t.iterations());
                    rec.i0 = Some(t.block_size(0));
                    rec.i1 = Some(t.block_size(1));
                    rec.converged = Some(t.converged);
                    rec.z_x = Some(crate::linalg::dot(&c, &t.final_x));
                    rec.max_violation = Some(t.max_violation);
                }
                trace
            }
            (Err(e), _) | (_, Err(e)) => {
                rec.error = Some(e.to_string());
                None
            }
        };
        rec.wall_time = start.elapsed().as_secs_f64();
        let trace = serde_json::json!({
            "m": cell.m,
            "n": cell.n,
            "replicate_index": rep,
            "trace": trace,
        });
        (rec, trace)
    });
    let (records, traces): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok(AlgorithmTable {
        excluded: excluded(&records),
        records,
        traces,
    })
}

impl AlgorithmTable {
    pub fn csv_lines(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.m,
                    r.n,
                    r.replicate_index,
                    r.r.map_or_else(String::new, |v| v.to_string()),
                    fmt_opt(r.z_x),
                    r.i0.map_or_else(String::new, |v| v.to_string()),
                    r.i1.map_or_else(String::new, |v| v.to_string()),
                    r.converged.unwrap_or(false),
                    fmt_opt(r.max_violation),
                )
            })
            .collect()
    }

    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let dir = &cfg.output_dir;
        let files = vec![
            write_csv(
                &dir.join("table.csv"),
                "m,n,replicate,r,z_x,i0,i1,converged,max_violation",
                &self.csv_lines(),
                self.excluded,
            )?,
            write_jsonl(&dir.join("records.jsonl"), &self.records)?,
            write_jsonl(&dir.join("traces.jsonl"), &self.traces)?,
        ];
        Ok(CampaignOutput {
            files,
            records: self.records.len(),
            excluded: self.excluded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWidthRow {
    pub m: usize,
    pub n: usize,
    pub replicate: usize,
    pub trials: usize,
    pub estimate: f64,
    pub standard_error: f64,
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanWidthTable {
    pub rows: Vec<MeanWidthRow>,
    pub errors: Vec<String>,
}

/// One matrix per `(grid point, replicate)`; its directions are solved on
/// the worker pool.
pub fn run_mean_width(cfg: &ExperimentConfig) -> Result<MeanWidthTable, HarnessError> {
    require(cfg, ExperimentKind::MeanWidth)?;
    let trials = cfg.trials.unwrap_or(DEFAULT_WIDTH_TRIALS);
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (g, &(m, n)) in cfg.grid.iter().enumerate() {
        for rep in 0..cfg.sample_size {
            let seed = SeedSpec::new(cfg.master_seed, stream_index(purpose::MATRIX, g, rep));
            let dirs = SeedSpec::new(cfg.master_seed, stream_index(purpose::DIRECTIONS, g, rep));
            let est = sample_matrix(cfg.dist, m, n, seed)
                .map_err(|e| e.to_string())
                .and_then(|a| mean_width_mc(&a, trials, dirs, cfg.workers).map_err(|e| e.to_string()));
            match est {
                Ok(e) => rows.push(MeanWidthRow {
                    m,
                    n,
                    replicate: rep,
                    trials,
                    estimate: e.estimate,
                    standard_error: e.standard_error,
                    normalized: e.normalized,
                }),
                Err(e) => errors.push(format!("m={m} n={n} replicate={rep}: {e}")),
            }
        }
    }
    Ok(MeanWidthTable { rows, errors })
}

impl MeanWidthTable {
    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    r.m,
                    r.n,
                    r.replicate,
                    r.trials,
                    r.estimate,
                    r.standard_error,
                    fmt_opt(r.normalized)
                )
            })
            .collect();
        let mut files = vec![write_csv(
            &cfg.output_dir.join("table.csv"),
            "m,n,replicate,trials,estimate,standard_error,normalized",
            &lines,
            self.errors.len(),
        )?];
        if !self.errors.is_empty() {
            files.push(write_text(&cfg.output_dir.join("errors.txt"), &(self.errors.join("\n") + "\n"))?);
        }
        Ok(CampaignOutput {
            files,
            records: self.rows.len() + self.errors.len(),
            excluded: self.errors.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub t: f64,
    pub p_hat: f64,
    pub standard_error: f64,
    /// `exp(-δn/2)`.
    pub bound: f64,
    /// `1 - Φ(t)`, exact in the Gaussian case.
    pub normal_tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    pub rows: Vec<TailRow>,
}

/// Estimates `P{⟨y, ξ⟩ ≥ (1 - ε)√(δn)}` for every `(δ, ε)` pair.
pub fn run_tail_check(cfg: &ExperimentConfig) -> Result<TailTable, HarnessError> {
    require(cfg, ExperimentKind::TailCheck)?;
    let tail = cfg.tail.as_ref().expect("validated");
    let n = tail.n;
    let y: Vector = match tail.direction {
        TailDirection::Flat => Vector::new(vec![1.0 / (n as f64).sqrt(); n]).expect("finite"),
        TailDirection::Sphere => sample_cost_vector(
            CostVectorKind::UniformSphere,
            n,
            SeedSpec::new(cfg.master_seed, stream_index(purpose::COST, 0, 0)),
        )
        .map_err(|e| HarnessError::Failed(e.to_string()))?,
    };
    let mut rows = Vec::new();
    let mut cell = 0;
    for &delta in &tail.deltas {
        for &epsilon in &tail.epsilons {
            let t = (1.0 - epsilon) * (delta * n as f64).sqrt();
            let seed = SeedSpec::new(cfg.master_seed, stream_index(purpose::TAIL, cell, 0));
            let est = tail_probability_mc(&y, cfg.dist, t, tail.trials, seed, cfg.workers)
                .map_err(|e| HarnessError::Failed(e.to_string()))?;
            rows.push(TailRow {
                n,
                delta,
                epsilon,
                t,
                p_hat: est.p_hat,
                standard_error: est.standard_error,
                bound: (-delta * n as f64 / 2.0).exp(),
                normal_tail: normal_sf(t),
            });
            cell += 1;
        }
    }
    Ok(TailTable { rows })
}

impl TailTable {
    fn write(&self, cfg: &ExperimentConfig) -> Result<CampaignOutput, HarnessError> {
        let lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.n, r.delta, r.epsilon, r.t, r.p_hat, r.standard_error, r.bound, r.normal_tail
                )
            })
            .collect();
        let files = vec![write_csv(
            &cfg.output_dir.join("table.csv"),
            "n,delta,epsilon,t,p_hat,standard_error,exp_bound,normal_tail",
            &lines,
            0,
        )?];
        Ok(CampaignOutput {
            files,
            records: self.rows.len(),
            excluded: 0,
        })
    }
}
