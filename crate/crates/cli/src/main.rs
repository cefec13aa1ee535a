use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use randlp::harness::{run_campaign, ExperimentConfig, ExperimentKind, SimplexSolver};
use randlp::linalg::Vector;
use randlp::restore::{restore, RestoreOptions};
use randlp::sampling::{sample_cost_vector, sample_matrix, CostVectorKind, EntryDistribution, SeedSpec};
use randlp::solver::{solve, LpInstance, SolveOptions};

mod presets;

#[derive(Parser)]
#[command(name = "randlp", version, about = "Random linear programs max <c,x> s.t. Ax <= 1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance and write it as JSON
    Generate(InstanceArgs),
    /// Solve an instance exactly
    Solve(InstanceArgs),
    /// Restore feasibility of the scaled cost vector
    Restore(InstanceArgs),
    /// Objective, standard-deviation, sparse-cost or restoration tables
    Table(CampaignArgs),
    /// Histogram, ECDF and KS test of z*
    Dist(CampaignArgs),
    /// Monte Carlo mean width
    Meanwidth(CampaignArgs),
    /// Monte Carlo tail probabilities
    Tailcheck(CampaignArgs),
    /// List the built-in presets
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, overriding the config
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (instance commands) or directory (campaigns)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    common: Common,
    /// Built-in config, see `randlp presets`
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    common: Common,
    /// Read the instance from a JSON file written by `generate`
    #[arg(long, conflicts_with_all = ["m", "n"])]
    instance: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// gaussian | rademacher | bernoulli-normal
    #[arg(long)]
    dist: Option<String>,
    /// rescaled-rademacher | uniform-sphere | spike:K
    #[arg(long)]
    cost: Option<String>,
    /// Stream of the matrix; the cost vector uses the next stream
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

/// Failures that map to exit code 1.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Fatal(msg)) => {
            eprintln!("randlp: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Fatal> {
    match cmd {
        Command::Generate(args) => {
            let inst = build_instance(&args)?;
            emit_json(args.common.out.as_deref(), &inst)?;
            Ok(0)
        }
        Command::Solve(args) => {
            let inst = build_instance(&args)?;
            let out = solve(&inst, &SolveOptions::default())?;
            emit_json(args.common.out.as_deref(), &out)?;
            Ok(0)
        }
        Command::Restore(args) => {
            let inst = build_instance(&args)?;
            match restore(&inst.a, &inst.c, &RestoreOptions::default()) {
                Ok(trace) => {
                    emit_json(args.common.out.as_deref(), &trace)?;
                    Ok(0)
                }
                Err(e) => match e.trace() {
                    Some(trace) => {
                        emit_json(args.common.out.as_deref(), trace)?;
                        eprintln!("randlp: {e}");
                        Ok(2)
                    }
                    None => Err(e.into()),
                },
            }
        }
        Command::Table(args) => campaign(
            args,
            &[
                ExperimentKind::ObjectiveTable,
                ExperimentKind::StdDevTable,
                ExperimentKind::SparseCostTable,
                ExperimentKind::AlgorithmTable,
            ],
        ),
        Command::Dist(args) => campaign(args, &[ExperimentKind::DistributionStudy]),
        Command::Meanwidth(args) => campaign(args, &[ExperimentKind::MeanWidth]),
        Command::Tailcheck(args) => campaign(args, &[ExperimentKind::TailCheck]),
        Command::Presets => {
            for (name, text) in presets::PRESETS {
                let about = text.lines().next().unwrap_or("").trim_start_matches("# ");
                println!("{name:<10} {about}");
            }
            Ok(0)
        }
    }
}

/// Loads a config (file or preset), applies the env and flag overrides, and
/// runs it.
fn load_config(args: &CampaignArgs) -> Result<ExperimentConfig, Fatal> {
    let mut cfg = match (&args.common.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => {
            let text = presets::lookup(name).ok_or_else(|| Fatal(format!("unknown preset {name:?}")))?;
            let mut cfg = ExperimentConfig::from_toml_str(text)?;
            cfg.apply_env();
            cfg
        }
        (None, None) => return Err(Fatal("either --config or --preset is required".into())),
    };
    if let Some(seed) = args.common.seed {
        cfg.master_seed = seed;
    }
    if let Some(w) = args.common.workers {
        cfg.workers = w;
    }
    if let Some(out) = &args.common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn campaign(args: CampaignArgs, allowed: &[ExperimentKind]) -> Result<u8, Fatal> {
    let cfg = load_config(&args)?;
    if !allowed.contains(&cfg.kind) {
        return Err(Fatal(format!("this subcommand does not run {:?} configs", cfg.kind)));
    }
    let out = run_campaign(&cfg, &SimplexSolver::default())?;
    for f in &out.files {
        println!("{}", f.display());
    }
    if out.excluded > 0 {
        eprintln!("randlp: {} of {} replicates excluded", out.excluded, out.records);
    }
    Ok(out.exit_code() as u8)
}

fn parse_dist(s: &str) -> Result<EntryDistribution, Fatal> {
    match s {
        "gaussian" => Ok(EntryDistribution::Gaussian),
        "rademacher" => Ok(EntryDistribution::Rademacher),
        "bernoulli-normal" => Ok(EntryDistribution::HALF_BERNOULLI_NORMAL),
        _ => Err(Fatal(format!("unknown distribution {s:?}"))),
    }
}

fn parse_cost(s: &str) -> Result<CostVectorKind, Fatal> {
    match s {
        "rescaled-rademacher" => Ok(CostVectorKind::RescaledRademacher),
        "uniform-sphere" => Ok(CostVectorKind::UniformSphere),
        _ => match s.strip_prefix("spike:").map(str::parse) {
            Some(Ok(k)) => Ok(CostVectorKind::KSpike { k }),
            _ => Err(Fatal(format!("unknown cost kind {s:?}"))),
        },
    }
}

/// An instance from `--instance`, or sampled from flags with defaults taken
/// from `--config` (first grid point, distribution, cost kind and seed).
fn build_instance(args: &InstanceArgs) -> Result<LpInstance, Fatal> {
    if let Some(path) = &args.instance {
        let text = std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        let inst: LpInstance = serde_json::from_str(&text)?;
        return Ok(LpInstance::new(inst.a, inst.c)?);
    }
    let cfg = args.common.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let grid_point = cfg.as_ref().and_then(|c| c.grid.first().copied());
    let m = args.m.or(grid_point.map(|g| g.0)).ok_or_else(|| Fatal("--m is required".into()))?;
    let n = args.n.or(grid_point.map(|g| g.1)).ok_or_else(|| Fatal("--n is required".into()))?;
    let dist = match &args.dist {
        Some(s) => parse_dist(s)?,
        None => cfg.as_ref().map_or(EntryDistribution::Gaussian, |c| c.dist),
    };
    let cost = match &args.cost {
        Some(s) => parse_cost(s)?,
        None => cfg.as_ref().map_or(CostVectorKind::UniformSphere, |c| c.cost_kind),
    };
    let seed = args.common.seed.or(cfg.as_ref().map(|c| c.master_seed)).unwrap_or(0);
    let a = sample_matrix(dist, m, n, SeedSpec::new(seed, args.stream))?;
    let c: Vector = sample_cost_vector(cost, n, SeedSpec::new(seed, args.stream + 1))?;
    Ok(LpInstance::new(a, c)?)
}

fn emit_json<T: serde::Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<(), Fatal> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_and_dist_names() {
        assert_eq!(parse_cost("spike:3").ok(), Some(CostVectorKind::KSpike { k: 3 }));
        assert!(parse_cost("spike:x").is_err());
        assert_eq!(parse_dist("bernoulli-normal").ok(), Some(EntryDistribution::HALF_BERNOULLI_NORMAL));
        assert!(parse_dist("cauchy").is_err());
    }
}
