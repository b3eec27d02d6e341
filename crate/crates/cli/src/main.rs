//! Command-line surface for the simplex clustering library: run CM, sweep k,
//! generate synthetic data, run the consistency experiment, and verify the
//! geometry bounds. Output is file-first (CSV/JSON) with a short summary on
//! standard output.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 non-convergence,
//! 3 theory-check failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simplex_cluster::{
    export_dataset_csv, generate, ingest_csv, preset, preset_names, read_mixture_spec,
    run_cm_restarts, run_consistency, run_theory_checks, select_k, write_consistency_csv,
    write_consistency_json, write_json, write_run_json, write_selection_csv,
    write_selection_json, CmConfig, ConsistencyConfig, Dataset, InitPolicy, MixtureSpec,
    RegularizationParams, SelectionConfig, Termination,
};

#[derive(Parser)]
#[command(
    name = "simplex-cluster",
    version,
    about = "Prototype-based clustering of probability vectors under KL divergence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the CM algorithm for a fixed k and write the run artifact as JSON.
    Cluster(ClusterArgs),
    /// Sweep k and pick the minimizer of the regularized empirical risk.
    #[command(name = "select-k")]
    SelectK(SelectKArgs),
    /// Generate a synthetic dataset from a mixture preset or spec file.
    Gen(GenArgs),
    /// Minimal-risk-vs-sample-size experiment against a held-out reference.
    Consistency(ConsistencyArgs),
    /// Verify the geometry bounds (balls, remainders, distance bracket).
    #[command(name = "check-theory")]
    CheckTheory(CheckTheoryArgs),
}

/// Where the observations come from: a CSV file (rows normalized by their
/// sums) or a named preset / JSON mixture-spec file.
#[derive(Args)]
struct InputArgs {
    /// CSV file of nonnegative rows; each row is normalized by its sum.
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Built-in preset name (fig1-4c, fig1-6c) or path to a mixture-spec
    /// JSON file.
    #[arg(long)]
    preset: Option<String>,
    /// Sample size override for preset/spec generation.
    #[arg(long)]
    n: Option<usize>,
    /// Data seed override for preset/spec generation.
    #[arg(long)]
    data_seed: Option<u64>,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, String> {
        match (&self.input, &self.preset) {
            (Some(path), _) => ingest_csv(path).map_err(|e| e.to_string()),
            (None, Some(_)) => {
                let spec = self.spec()?;
                let (data, _) = generate(&spec).map_err(|e| e.to_string())?;
                Ok(data)
            }
            (None, None) => Err("either --input or --preset is required".to_string()),
        }
    }

    fn spec(&self) -> Result<MixtureSpec, String> {
        let name = self
            .preset
            .as_deref()
            .ok_or_else(|| "a preset name or spec file is required".to_string())?;
        let mut spec = match preset(name) {
            Some(spec) => spec,
            None if Path::new(name).exists() => {
                read_mixture_spec(Path::new(name)).map_err(|e| e.to_string())?
            }
            None => {
                return Err(format!(
                    "unknown preset {name:?}; built-ins are {} (or pass a spec JSON path)",
                    preset_names().join(", ")
                ))
            }
        };
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(seed) = self.data_seed {
            spec.seed = seed;
        }
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Smoothing parameter in [0, 1]; 1 disables smoothing.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Base seed for initialization restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    /// Initialization policy: farthest-first or random-sample.
    #[arg(long, default_value = "farthest-first")]
    init: String,
    /// Output path for the run artifact JSON.
    #[arg(long, short, default_value = "run.json")]
    output: PathBuf,
}

#[derive(Args)]
struct SelectKArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1)]
    kmin: usize,
    /// Largest k to try; defaults to min(12, n).
    #[arg(long)]
    kmax: Option<usize>,
    /// Minimum cluster probability (constraint C1 and cost scale).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Minimum symmetric divergence between centers (constraint C2 and cost
    /// scale).
    #[arg(long, default_value_t = 0.03)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    #[arg(long, default_value = "farthest-first")]
    init: String,
    /// Exclude k values violating C1/C2 instead of just reporting them.
    #[arg(long)]
    enforce_constraints: bool,
    /// Output path for the report CSV.
    #[arg(long, short, default_value = "selection.csv")]
    output: PathBuf,
    /// Optional path for the report JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Built-in preset name or mixture-spec JSON path.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the dataset CSV.
    #[arg(long, short, default_value = "data.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct ConsistencyArgs {
    /// Built-in preset name or mixture-spec JSON path.
    #[arg(long)]
    preset: String,
    /// Comma-separated strictly increasing sample sizes.
    #[arg(long, default_value = "250,500,1000,2000", value_delimiter = ',')]
    schedule: Vec<usize>,
    /// Number of clusters; defaults to the preset's component count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Held-out sample size for the reference risk.
    #[arg(long, default_value_t = 100_000)]
    heldout: usize,
    /// Held-out replicates (for the Monte-Carlo standard error).
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Output path for the curve CSV.
    #[arg(long, short, default_value = "consistency.csv")]
    output: PathBuf,
    /// Optional path for the curve JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CheckTheoryArgs {
    /// Simplex dimensions to test.
    #[arg(long = "m", default_values_t = [2usize, 3, 5, 10], value_delimiter = ',')]
    dims: Vec<usize>,
    /// Random samples per check.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the report JSON.
    #[arg(long, short, default_value = "theory.json")]
    output: PathBuf,
}

fn parse_init(name: &str) -> Result<InitPolicy, String> {
    match name {
        "farthest-first" => Ok(InitPolicy::FarthestFirst),
        "random-sample" => Ok(InitPolicy::RandomSample),
        other => Err(format!(
            "unknown init policy {other:?}; use farthest-first or random-sample"
        )),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SIMPLEX_CLUSTER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .map_err(|_| format!("SIMPLEX_CLUSTER_THREADS must be a nonnegative integer, got {raw:?}"))?;
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn cmd_cluster(args: &ClusterArgs) -> Result<u8, String> {
    let data = args.input.load()?;
    let config = CmConfig {
        k: args.k,
        init: parse_init(&args.init)?,
        seed: args.seed,
        max_iterations: args.max_iterations,
        theta: args.theta,
    };
    let run = run_cm_restarts(&data, &config, args.restarts).map_err(|e| e.to_string())?;
    write_run_json(&run, &args.output).map_err(|e| e.to_string())?;
    println!(
        "k = {}, n = {}, m = {}: risk {} after {} iterations ({:?}); wrote {}",
        args.k,
        data.n(),
        data.dim(),
        run.risk,
        run.trace.iterations,
        run.trace.termination,
        args.output.display()
    );
    match run.trace.termination {
        Termination::Converged => Ok(0),
        Termination::MaxIterations => {
            eprintln!("warning: hit the iteration cap before convergence");
            Ok(2)
        }
    }
}

fn cmd_select_k(args: &SelectKArgs) -> Result<u8, String> {
    let data = args.input.load()?;
    let params = RegularizationParams::new(args.alpha, args.beta).map_err(|e| e.to_string())?;
    let config = SelectionConfig {
        k_min: args.kmin,
        k_max: args.kmax.unwrap_or_else(|| 12.min(data.n())),
        params,
        restarts: args.restarts,
        seed: args.seed,
        theta: args.theta,
        max_iterations: args.max_iterations,
        init: parse_init(&args.init)?,
        enforce_constraints: args.enforce_constraints,
    };
    let report = select_k(&data, &config).map_err(|e| e.to_string())?;
    write_selection_csv(&report, &args.output).map_err(|e| e.to_string())?;
    if let Some(json) = &args.json {
        write_selection_json(&report, json).map_err(|e| e.to_string())?;
    }
    println!(
        "chosen k = {} over {}..={}; wrote {}",
        report.chosen_k,
        config.k_min,
        config.k_max,
        args.output.display()
    );
    Ok(0)
}

fn cmd_gen(args: &GenArgs) -> Result<u8, String> {
    let input = InputArgs {
        input: None,
        preset: Some(args.preset.clone()),
        n: args.n,
        data_seed: Some(args.seed),
    };
    let spec = input.spec()?;
    let (data, _) = generate(&spec).map_err(|e| e.to_string())?;
    export_dataset_csv(&data, &args.output).map_err(|e| e.to_string())?;
    println!(
        "generated {} x {} points from {:?} (seed {}); wrote {}",
        data.n(),
        data.dim(),
        args.preset,
        args.seed,
        args.output.display()
    );
    Ok(0)
}

fn cmd_consistency(args: &ConsistencyArgs) -> Result<u8, String> {
    let input = InputArgs {
        input: None,
        preset: Some(args.preset.clone()),
        n: None,
        data_seed: None,
    };
    let spec = input.spec()?;
    let mut config = ConsistencyConfig::new(args.schedule.clone(), args.k.unwrap_or(spec.k()));
    config.restarts = args.restarts;
    config.seed = args.seed;
    config.theta = args.theta;
    config.heldout_size = args.heldout;
    config.heldout_replicates = args.replicates;
    let curve = run_consistency(&spec, &config).map_err(|e| e.to_string())?;
    write_consistency_csv(&curve, &args.output).map_err(|e| e.to_string())?;
    if let Some(json) = &args.json {
        write_consistency_json(&curve, json).map_err(|e| e.to_string())?;
    }
    println!(
        "reference risk {} (se {}); wrote {}",
        curve.reference_risk,
        curve.reference_se,
        args.output.display()
    );
    for row in &curve.rows {
        println!("  n = {:>6}: min risk {}", row.n, row.min_risk);
    }
    Ok(0)
}

fn cmd_check_theory(args: &CheckTheoryArgs) -> Result<u8, String> {
    if args.dims.iter().any(|&m| m < 2) {
        return Err("dimensions must be at least 2".to_string());
    }
    let report = run_theory_checks(&args.dims, args.samples, args.seed);
    let value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    write_json(&value, &args.output).map_err(|e| e.to_string())?;
    println!(
        "membership {}, minimal-ball uniqueness {}, remainder characterization {}",
        report.membership_agreement,
        report.minimal_ball_uniqueness,
        report.remainder_characterization
    );
    let failures = report.rho_checks.iter().filter(|c| !c.pass).count();
    println!(
        "distance bracket: {}/{} grid points pass; wrote {}",
        report.rho_checks.len() - failures,
        report.rho_checks.len(),
        args.output.display()
    );
    if report.pass {
        println!("all checks passed");
        Ok(0)
    } else {
        eprintln!("theory checks FAILED");
        Ok(3)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.exit_code() == 0 { 0 } else { 1 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::SelectK(args) => cmd_select_k(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Consistency(args) => cmd_consistency(args),
        Command::CheckTheory(args) => cmd_check_theory(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
