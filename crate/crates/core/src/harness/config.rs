use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{CostVectorKind, EntryDistribution};

/// Environment variable that overrides `output_dir` (and nothing else).
pub const OUTPUT_DIR_ENV: &str = "RANDLP_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ObjectiveTable,
    StdDevTable,
    SparseCostTable,
    DistributionStudy,
    AlgorithmTable,
    MeanWidth,
    TailCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostPolicy {
    /// One cost vector per grid point, shared by every replicate.
    #[default]
    FixedAcrossReplicates,
    FreshPerReplicate,
}

/// How the unit vector `y` of a tail check is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    /// `y = (1, …, 1)/√n`.
    #[default]
    Flat,
    /// A uniformly random unit vector.
    Sphere,
}

/// Tail check parameters: one row per `(delta, epsilon)` pair, at threshold
/// `t = (1 - ε)√(δn)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub n: usize,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub direction: TailDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dist: EntryDistribution,
    #[serde(default)]
    pub grid: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub sample_size: usize,
    #[serde(default = "default_cost")]
    pub cost_kind: CostVectorKind,
    #[serde(default)]
    pub cost_policy: CostPolicy,
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
    /// Histogram bins; Sturges' rule when absent.
    #[serde(default)]
    pub n_bins: Option<usize>,
    /// Spike sizes for the sparse cost table.
    #[serde(default)]
    pub k_values: Option<Vec<usize>>,
    /// Externally supplied baseline mean for the sparse cost table.
    #[serde(default)]
    pub baseline_mu: Option<f64>,
    /// Directions per matrix for the mean-width study.
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub tail: Option<TailParams>,
}

fn one() -> usize {
    1
}

fn default_cost() -> CostVectorKind {
    CostVectorKind::RescaledRademacher
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a TOML file, then applies the output-dir override
    /// from the environment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        self.dist.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.sample_size == 0 {
            return bad("sample_size must be at least 1".into());
        }
        if self.kind == ExperimentKind::TailCheck {
            let Some(t) = &self.tail else {
                return bad("tail_check needs a [tail] section".into());
            };
            if t.n == 0 || t.deltas.is_empty() || t.epsilons.is_empty() {
                return bad("tail needs n >= 1 and non-empty deltas and epsilons".into());
            }
            if t.deltas.iter().any(|d| !(*d >= 0.0)) || t.epsilons.iter().any(|e| !(0.0..1.0).contains(e)) {
                return bad("tail deltas must be >= 0 and epsilons in [0, 1)".into());
            }
            if t.trials < crate::stats::TAIL_MIN_TRIALS {
                return bad(format!("tail trials must be at least {}", crate::stats::TAIL_MIN_TRIALS));
            }
            return Ok(());
        }
        if self.grid.is_empty() {
            return bad("grid must not be empty".into());
        }
        if let Some(&(m, n)) = self.grid.iter().find(|(m, n)| *n == 0 || m <= n) {
            return bad(format!("grid point ({m}, {n}) needs m > n >= 1"));
        }
        if let CostVectorKind::KSpike { k } = self.cost_kind {
            if let Some(&(_, n)) = self.grid.iter().find(|(_, n)| k == 0 || k > *n) {
                return bad(format!("k_spike k = {k} out of range for n = {n}"));
            }
        }
        match self.kind {
            ExperimentKind::SparseCostTable => {
                let Some(ks) = &self.k_values else {
                    return bad("sparse_cost_table needs k_values".into());
                };
                if ks.is_empty() {
                    return bad("k_values must not be empty".into());
                }
                if let Some(&(_, n)) = self.grid.iter().find(|(_, n)| ks.iter().any(|&k| k == 0 || k > *n)) {
                    return bad(format!("k_values must lie in 1..={n}"));
                }
                if let Some(b) = self.baseline_mu {
                    if !(b > 0.0) {
                        return bad("baseline_mu must be positive".into());
                    }
                }
            }
            ExperimentKind::StdDevTable if self.sample_size < 2 => {
                return bad("std_dev_table needs sample_size >= 2".into());
            }
            ExperimentKind::DistributionStudy if self.sample_size < crate::stats::KS_MIN_SAMPLES => {
                return bad(format!(
                    "distribution_study needs sample_size >= {}",
                    crate::stats::KS_MIN_SAMPLES
                ));
            }
            ExperimentKind::MeanWidth => {
                let trials = self.trials.unwrap_or(DEFAULT_WIDTH_TRIALS);
                if trials < crate::geometry::MIN_TRIALS {
                    return bad(format!("trials must be at least {}", crate::geometry::MIN_TRIALS));
                }
            }
            _ => {}
        }
        if self.n_bins == Some(0) {
            return bad("n_bins must be positive".into());
        }
        Ok(())
    }
}

pub const DEFAULT_WIDTH_TRIALS: usize = 200;

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
kind = "objective_table"
master_seed = 7
sample_size = 50
grid = [[1000, 50], [2000, 50]]
dist = { type = "gaussian" }
cost_kind = { type = "rescaled_rademacher" }
cost_policy = "fixed_across_replicates"
output_dir = "out/t1"
workers = 2
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(TABLE1).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::ObjectiveTable);
        assert_eq!(cfg.grid, vec![(1000, 50), (2000, 50)]);
        assert_eq!(cfg.workers, 2);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let swap = |from: &str, to: &str| ExperimentConfig::from_toml_str(&TABLE1.replace(from, to));
        assert!(matches!(swap("[2000, 50]", "[50, 50]"), Err(ConfigError::Invalid(_))));
        assert!(matches!(swap("sample_size = 50", "sample_size = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(swap("grid = [[1000, 50], [2000, 50]]", "grid = []"), Err(ConfigError::Invalid(_))));
        assert!(matches!(swap("workers = 2", "workers = 2\nbogus = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(swap("\"gaussian\"", "\"cauchy\""), Err(ConfigError::Parse(_))));
        assert!(matches!(swap("objective_table", "sparse_cost_table"), Err(ConfigError::Invalid(_))));
        assert!(matches!(swap("objective_table", "tail_check"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn tail_section() {
        let text = r#"
kind = "tail_check"
master_seed = 1
dist = { type = "rademacher" }
[tail]
n = 400
deltas = [0.01]
epsilons = [0.0, 0.1]
trials = 100000
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.tail.unwrap().direction, TailDirection::Flat);
    }
}
