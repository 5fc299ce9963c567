//! Command-line entry point: validate datasets, run evaluations, predict
//! single ratings and dump optimizer traces.
//!
//! Exit codes: 0 success, 1 configuration or validation failure, 2 failure
//! to resolve referenced data (unknown user, missing model).

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weedrec_core::error::Error as CoreError;
use weedrec_core::eval::{self, run_experiment};
use weedrec_core::predictor::{
    fallback_prediction, fit_user_weights, fit_user_weights_with_trace, weighted_prediction,
    CachedModel,
};
use weedrec_core::ratings::{parse_ratings_file, RatingMatrix, UserId};
use weedrec_core::ItemId;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "weedrec",
    version,
    about = "Neighborhood collaborative filtering with IWO-learned neighbor weights"
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags win over file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset file and print its summary counts.
    Validate(CommonArgs),
    /// Run a train/test evaluation and write report.json / pairs.csv.
    Evaluate(EvaluateArgs),
    /// Predict one user-item rating, fitting the user model on demand.
    Predict(PredictArgs),
    /// Dump the optimizer convergence CSV for one user.
    Trace(TraceArgs),
}

/// Flags mirroring the config file keys; any flag overrides the file.
#[derive(Args, Default)]
struct CommonArgs {
    /// Rating triples file (`user item rating` per line).
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
    /// Dataset format: filmtrust, epinions or generic-triples.
    #[arg(long)]
    format: Option<String>,
    /// Fraction of ratings held out as the test set.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Seed of the train/test split.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Confidence factor applied when correlation is absent.
    #[arg(long)]
    k: Option<f64>,
    /// Important-user selection threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Seeds granted to the worst weed.
    #[arg(long)]
    s_min: Option<u32>,
    /// Seeds granted to the best weed.
    #[arg(long)]
    s_max: Option<u32>,
    /// Initial dispersal standard deviation.
    #[arg(long)]
    sigma_initial: Option<f64>,
    /// Final dispersal standard deviation.
    #[arg(long)]
    sigma_final: Option<f64>,
    /// Nonlinear modulation index of the sigma schedule.
    #[arg(long)]
    n: Option<f64>,
    /// Optimizer iterations.
    #[arg(long)]
    iterations: Option<u32>,
    /// Initial population size.
    #[arg(long)]
    pop_initial: Option<u32>,
    /// Population cap.
    #[arg(long)]
    pop_max: Option<u32>,
    /// Fraction of a user's train ratings held out as fitness items.
    #[arg(long)]
    fitness_holdout: Option<f64>,
    /// Restrict the run to this many seeded-random users.
    #[arg(long)]
    sample_users: Option<usize>,
    /// Predictor to evaluate: proposed, user-mean or pcc-topk-unweighted.
    #[arg(long)]
    baseline: Option<String>,
    /// Machine-readable report path.
    #[arg(long, value_name = "PATH")]
    out_json: Option<PathBuf>,
    /// Per-pair CSV path.
    #[arg(long, value_name = "PATH")]
    out_csv: Option<PathBuf>,
    /// Global seed (also settable via WEEDREC_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for per-user fitting; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the effective merged configuration to this file.
    #[arg(long, value_name = "PATH")]
    emit_config: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target user id.
    #[arg(long)]
    user: u64,
    /// Target item id.
    #[arg(long)]
    item: u64,
    /// Model cache file; hits skip fitting, misses are appended.
    #[arg(long, value_name = "PATH")]
    models: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target user id.
    #[arg(long)]
    user: u64,
    /// Output CSV path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::UnknownUser(_) | CoreError::UnknownItem(_) | CoreError::TooFewRatings { .. } => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(common) => {
            let cfg = build_config(cli.config.as_deref(), &common)?;
            cmd_validate(&cfg)
        }
        Command::Evaluate(args) => {
            let cfg = build_config(cli.config.as_deref(), &args.common)?;
            cmd_evaluate(&cfg, args.emit_config.as_deref())
        }
        Command::Predict(args) => {
            let cfg = build_config(cli.config.as_deref(), &args.common)?;
            cmd_predict(&cfg, UserId(args.user), ItemId(args.item), args.models.as_deref())
        }
        Command::Trace(args) => {
            let cfg = build_config(cli.config.as_deref(), &args.common)?;
            cmd_trace(&cfg, UserId(args.user), args.out.as_deref())
        }
    }
}

/// Defaults, then the config file, then the seed env var, then flags.
fn build_config(file: Option<&Path>, flags: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        cfg.apply_file(&text).map_err(CliError::config)?;
    }
    cfg.apply_env().map_err(CliError::config)?;

    if let Some(v) = &flags.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = &flags.format {
        cfg.format = v.parse().map_err(|e: CoreError| CliError::config(e.to_string()))?;
    }
    if let Some(v) = flags.test_fraction {
        cfg.test_fraction = v;
    }
    if let Some(v) = flags.split_seed {
        cfg.split_seed = v;
    }
    if let Some(v) = flags.k {
        cfg.k = v;
    }
    if let Some(v) = flags.theta {
        cfg.theta = v;
    }
    if let Some(v) = flags.s_min {
        cfg.s_min = v;
    }
    if let Some(v) = flags.s_max {
        cfg.s_max = v;
    }
    if let Some(v) = flags.sigma_initial {
        cfg.sigma_initial = v;
    }
    if let Some(v) = flags.sigma_final {
        cfg.sigma_final = v;
    }
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = flags.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = flags.pop_initial {
        cfg.pop_initial = v;
    }
    if let Some(v) = flags.pop_max {
        cfg.pop_max = v;
    }
    if let Some(v) = flags.fitness_holdout {
        cfg.fitness_holdout = v;
    }
    if let Some(v) = flags.sample_users {
        cfg.sample_users = Some(v);
    }
    if let Some(v) = &flags.baseline {
        cfg.baseline = v.parse().map_err(|e: CoreError| CliError::config(e.to_string()))?;
    }
    if let Some(v) = &flags.out_json {
        cfg.out_json = v.clone();
    }
    if let Some(v) = &flags.out_csv {
        cfg.out_csv = v.clone();
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.workers {
        cfg.workers = v;
    }
    Ok(cfg)
}

fn load_dataset(cfg: &RunConfig) -> Result<(RatingMatrix, String), CliError> {
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::config("no dataset configured (use --dataset)"))?;
    if !path.exists() {
        return Err(CliError::config(format!("file not found: {}", path.display())));
    }
    let matrix = parse_ratings_file(path, cfg.format)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    Ok((matrix, name))
}

fn cmd_validate(cfg: &RunConfig) -> Result<(), CliError> {
    let (matrix, name) = load_dataset(cfg)?;
    cfg.sim_params().validate()?;
    cfg.iwo_params().validate()?;
    println!(
        "{name}: {} users, {} items, {} ratings, scale [{}, {}]",
        matrix.n_users(),
        matrix.n_items(),
        matrix.n_ratings(),
        matrix.scale_min(),
        matrix.scale_max()
    );
    println!("ok");
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, emit_config: Option<&Path>) -> Result<(), CliError> {
    let (matrix, name) = load_dataset(cfg)?;
    let experiment = cfg.experiment_config(name);
    let report = run_experiment(&matrix, &experiment)?;

    fs::write(&cfg.out_json, eval::to_json(&report))
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", cfg.out_json.display())))?;
    fs::write(&cfg.out_csv, eval::per_pair_csv(&report))
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", cfg.out_csv.display())))?;
    if let Some(path) = emit_config {
        fs::write(path, cfg.to_kv())
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    }
    print!("{}", eval::render_table(&report));
    println!(
        "report          {} | {}",
        cfg.out_json.display(),
        cfg.out_csv.display()
    );
    Ok(())
}

fn cmd_predict(
    cfg: &RunConfig,
    user: UserId,
    item: ItemId,
    models: Option<&Path>,
) -> Result<(), CliError> {
    let (matrix, _) = load_dataset(cfg)?;
    if matrix.user_index(user).is_none() {
        return Err(CliError::data(format!("unknown user {user}")));
    }

    let cached = match models {
        Some(path) if path.exists() => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            let mut found = None;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let model = CachedModel::parse_record(line)?;
                if model.target == user {
                    found = Some(model);
                    break;
                }
            }
            found
        }
        _ => None,
    };

    let cached = match cached {
        Some(m) => m,
        None => {
            let fresh = fit_model(cfg, &matrix, user)?;
            if let Some(path) = models {
                let mut file = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| {
                        CliError::config(format!("cannot open {}: {e}", path.display()))
                    })?;
                writeln!(file, "{}", fresh.to_record())
                    .map_err(|e| CliError::config(format!("cannot append model: {e}")))?;
            }
            fresh
        }
    };

    let ids: Vec<UserId> = cached.neighbor_weights.iter().map(|&(v, _)| v).collect();
    let weights: Vec<f64> = cached.neighbor_weights.iter().map(|&(_, w)| w).collect();
    let direct = weighted_prediction(&matrix, &ids, &weights, item)?;
    let (predicted, fallback) = match direct {
        Some(p) => (p, false),
        None => (fallback_prediction(&matrix, user, item)?, true),
    };
    println!("user={user} item={item} predicted={predicted} fallback={fallback}");
    Ok(())
}

/// Fits on demand; users too thin to fit get an empty fallback-only model.
fn fit_model(cfg: &RunConfig, matrix: &RatingMatrix, user: UserId) -> Result<CachedModel, CliError> {
    let ui = matrix.user_index(user).expect("checked by caller");
    if matrix.ratings_of(ui).len() < 2 {
        return Ok(CachedModel {
            target: user,
            neighbor_weights: Vec::new(),
            fitness: None,
        });
    }
    let model = fit_user_weights(
        matrix,
        user,
        &cfg.sim_params(),
        &cfg.iwo_params(),
        cfg.fitness_holdout,
        cfg.seed,
    )?;
    Ok(CachedModel {
        target: model.target,
        neighbor_weights: model
            .neighbor_set
            .user_ids()
            .into_iter()
            .zip(model.weights.iter().copied())
            .collect(),
        fitness: model.fitness_achieved,
    })
}

fn cmd_trace(cfg: &RunConfig, user: UserId, out: Option<&Path>) -> Result<(), CliError> {
    let (matrix, _) = load_dataset(cfg)?;
    if matrix.user_index(user).is_none() {
        return Err(CliError::data(format!("unknown user {user}")));
    }
    let (model, trace) = fit_user_weights_with_trace(
        &matrix,
        user,
        &cfg.sim_params(),
        &cfg.iwo_params(),
        cfg.fitness_holdout,
        cfg.seed,
    )?;
    let Some(trace) = trace else {
        return Err(CliError::data(format!(
            "user {user} has no important users at theta {}; nothing to trace",
            model.neighbor_set.theta_used
        )));
    };
    let csv = trace.to_csv();
    match out {
        Some(path) => fs::write(path, csv)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}
