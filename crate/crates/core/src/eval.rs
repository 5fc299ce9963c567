//! End-to-end experiment runner: split, fit, predict every test pair and
//! report MAE / RMSE / coverage, next to two baselines evaluated on the
//! identical split. Per-user fitting fans out over a bounded worker pool;
//! results are merged in user-id order, so thread scheduling never changes
//! the output bytes.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iwo::IwoParams;
use crate::predictor::{self, fallback_prediction, fit_user_weights, predict_rating};
use crate::ratings::{split_ratings, ItemId, RatingMatrix, UserId};
use crate::similarity::{select_important_users, SimilarityParams};

/// Which predictor the experiment evaluates.
///
/// `PccTopkUnweighted` selects important users exactly like the proposed
/// method but averages them with all weights 1, isolating the contribution
/// of the learned weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Proposed,
    UserMean,
    PccTopkUnweighted,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Baseline::Proposed),
            "user-mean" => Ok(Baseline::UserMean),
            "pcc-topk-unweighted" => Ok(Baseline::PccTopkUnweighted),
            other => Err(Error::InvalidParams(format!(
                "unknown baseline `{other}` (expected proposed, user-mean or pcc-topk-unweighted)"
            ))),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Baseline::Proposed => "proposed",
            Baseline::UserMean => "user-mean",
            Baseline::PccTopkUnweighted => "pcc-topk-unweighted",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

/// Full parameter record of one experiment; embedded verbatim in the
/// report so every run is reproducible from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub baseline: Baseline,
    pub split: SplitConfig,
    pub sim: SimilarityParams,
    pub iwo: IwoParams,
    pub fitness_holdout_fraction: f64,
    pub sample_users: Option<usize>,
    pub global_seed: u64,
    /// Worker threads for per-user fitting; 0 means all available cores.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(dataset_name: impl Into<String>, baseline: Baseline) -> Self {
        ExperimentConfig {
            dataset_name: dataset_name.into(),
            baseline,
            split: SplitConfig {
                test_fraction: 0.2,
                seed: 42,
            },
            sim: SimilarityParams::default(),
            iwo: IwoParams::default(),
            fitness_holdout_fraction: 0.25,
            sample_users: None,
            global_seed: 42,
            workers: 0,
        }
    }
}

/// One predicted test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub user: UserId,
    pub item: ItemId,
    pub actual: f64,
    pub predicted: f64,
    pub used_fallback: bool,
}

/// A published comparison result carried along for context. These numbers
/// are quoted, not reproduced by this code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub method: String,
    pub mae: f64,
    pub rmse: f64,
    pub note: String,
}

/// Aggregate report over every predicted test pair.
///
/// `elapsed` is informational only and excluded from the serialized form so
/// reports of identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub baseline: Baseline,
    pub z_predictions: usize,
    pub mae: f64,
    pub rmse: f64,
    pub coverage: f64,
    pub reference: Vec<ReferenceRow>,
    pub config: ExperimentConfig,
    pub per_pair: Vec<PairOutcome>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Mean absolute error over a residual list (`predicted - actual`).
pub fn mae(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    Ok(residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64)
}

/// Root mean square error over a residual list.
pub fn rmse(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    Ok((residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt())
}

/// Published MAE/RMSE rows for the named dataset, empty for anything else.
pub fn reference_rows_for(dataset: &str) -> Vec<ReferenceRow> {
    let name = dataset.to_ascii_lowercase();
    let rows: &[(&str, f64, f64)] = if name.contains("filmtrust") {
        &[
            ("Bobadilla", 0.771, 0.982),
            ("Yilmaz", 0.685, 0.912),
            ("TARS", 0.662, 0.872),
            ("TCFACO", 0.561, 0.764),
            ("IWO-CF", 0.545, 0.656),
        ]
    } else if name.contains("epinions") {
        &[
            ("Bobadilla", 0.862, 1.124),
            ("Yilmaz", 0.852, 1.101),
            ("TARS", 0.830, 1.092),
            ("TCFACO", 0.795, 1.043),
            ("IWO-CF", 0.710, 0.961),
        ]
    } else {
        &[]
    };
    rows.iter()
        .map(|&(method, mae, rmse)| ReferenceRow {
            method: method.to_string(),
            mae,
            rmse,
            note: "published result, not reproduced by this run".to_string(),
        })
        .collect()
}

/// Submatrix restricted to `n` seeded-random users; items are re-indexed
/// and items left without raters are dropped. `n == n_users` is identity.
pub fn sample_users(dataset: &RatingMatrix, n: usize, seed: u64) -> Result<RatingMatrix> {
    if n == 0 || n > dataset.n_users() {
        return Err(Error::BadSampleSize {
            requested: n,
            available: dataset.n_users(),
        });
    }
    if n == dataset.n_users() {
        return Ok(dataset.clone());
    }
    let mut users: Vec<UserId> = dataset.users().to_vec();
    users.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = users.partial_shuffle(&mut rng, n);
    let keep: std::collections::HashSet<UserId> = chosen.iter().copied().collect();

    let triples: Vec<_> = dataset
        .triples()
        .filter(|(u, _, _)| keep.contains(u))
        .collect();
    RatingMatrix::from_triples(&triples, dataset.scale_min(), dataset.scale_max())
}

/// Runs one experiment: optional user subsampling, seeded split, per-user
/// fitting (for the proposed method) and prediction of every test pair.
pub fn run_experiment(dataset: &RatingMatrix, config: &ExperimentConfig) -> Result<EvaluationReport> {
    config.sim.validate()?;
    config.iwo.validate()?;
    let started = Instant::now();

    let sampled;
    let data: &RatingMatrix = match config.sample_users {
        Some(n) => {
            sampled = sample_users(dataset, n, config.global_seed)?;
            &sampled
        }
        None => dataset,
    };

    let split = split_ratings(data, config.split.test_fraction, config.split.seed)?;
    let train = &split.train;
    let test = &split.test;

    // test pairs grouped per user, both levels ordered by external id
    let mut by_user: Vec<(UserId, Vec<(ItemId, f64)>)> = Vec::with_capacity(test.n_users());
    let mut test_users: Vec<UserId> = test.users().to_vec();
    test_users.sort_unstable();
    for u in test_users {
        let ui = test.user_index(u).expect("listed user");
        let mut items: Vec<(ItemId, f64)> = test
            .ratings_of(ui)
            .iter()
            .map(|&(ii, r)| (test.item_id(ii), r))
            .collect();
        items.sort_unstable_by_key(|&(i, _)| i);
        by_user.push((u, items));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;
    let outcomes: Result<Vec<Vec<PairOutcome>>> = pool.install(|| {
        by_user
            .par_iter()
            .map(|(u, items)| evaluate_user(train, *u, items, config))
            .collect()
    });
    let per_pair: Vec<PairOutcome> = outcomes?.into_iter().flatten().collect();

    assemble_report(config, per_pair, started.elapsed())
}

fn evaluate_user(
    train: &RatingMatrix,
    u: UserId,
    items: &[(ItemId, f64)],
    config: &ExperimentConfig,
) -> Result<Vec<PairOutcome>> {
    let mut out = Vec::with_capacity(items.len());
    match config.baseline {
        Baseline::UserMean => {
            // the mean chain is the predictor itself here, not a fallback
            for &(item, actual) in items {
                out.push(PairOutcome {
                    user: u,
                    item,
                    actual,
                    predicted: fallback_prediction(train, u, item)?,
                    used_fallback: false,
                });
            }
        }
        Baseline::PccTopkUnweighted => {
            let selection = match train.user_index(u) {
                Some(_) => {
                    let set = select_important_users(train, u, &config.sim)?;
                    let ids = set.user_ids();
                    let ones = vec![1.0; ids.len()];
                    Some((ids, ones))
                }
                None => None,
            };
            for &(item, actual) in items {
                let predicted = match &selection {
                    Some((ids, ones)) => {
                        predictor::weighted_prediction(train, ids, ones, item)?
                    }
                    None => None,
                };
                out.push(resolve(train, u, item, actual, predicted)?);
            }
        }
        Baseline::Proposed => {
            let model = match train.user_index(u) {
                Some(ui) if train.ratings_of(ui).len() >= 2 => Some(fit_user_weights(
                    train,
                    u,
                    &config.sim,
                    &config.iwo,
                    config.fitness_holdout_fraction,
                    config.global_seed,
                )?),
                _ => None,
            };
            for &(item, actual) in items {
                let predicted = match &model {
                    Some(m) => predict_rating(train, m, item)?,
                    None => None,
                };
                out.push(resolve(train, u, item, actual, predicted)?);
            }
        }
    }
    Ok(out)
}

fn resolve(
    train: &RatingMatrix,
    user: UserId,
    item: ItemId,
    actual: f64,
    predicted: Option<f64>,
) -> Result<PairOutcome> {
    let (predicted, used_fallback) = match predicted {
        Some(p) => (p, false),
        None => (fallback_prediction(train, user, item)?, true),
    };
    Ok(PairOutcome {
        user,
        item,
        actual,
        predicted,
        used_fallback,
    })
}

fn assemble_report(
    config: &ExperimentConfig,
    per_pair: Vec<PairOutcome>,
    elapsed: Duration,
) -> Result<EvaluationReport> {
    let residuals: Vec<f64> = per_pair.iter().map(|p| p.predicted - p.actual).collect();
    let mae = mae(&residuals)?;
    let rmse = rmse(&residuals)?;
    // power-mean inequality, modulo float rounding
    assert!(rmse + 1e-12 >= mae, "rmse {rmse} < mae {mae}");
    let covered = per_pair.iter().filter(|p| !p.used_fallback).count();
    let coverage = covered as f64 / per_pair.len() as f64;
    Ok(EvaluationReport {
        dataset: config.dataset_name.clone(),
        baseline: config.baseline,
        z_predictions: per_pair.len(),
        mae,
        rmse,
        coverage,
        reference: reference_rows_for(&config.dataset_name),
        config: config.clone(),
        per_pair,
        elapsed,
    })
}

/// Pretty JSON form of the report; identical runs yield identical bytes.
pub fn to_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<EvaluationReport> {
    serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
}

/// Per-pair CSV: `user,item,actual,predicted,used_fallback`.
pub fn per_pair_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("user,item,actual,predicted,used_fallback\n");
    for p in &report.per_pair {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.user, p.item, p.actual, p.predicted, p.used_fallback
        ));
    }
    out
}

/// Human-readable aligned summary for standard output.
pub fn render_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("dataset          {}\n", report.dataset));
    out.push_str(&format!("baseline         {}\n", report.baseline));
    if let Some(n) = report.config.sample_users {
        out.push_str(&format!("sampled users    {n}\n"));
    }
    out.push_str(&format!("test pairs (Z)   {}\n", report.z_predictions));
    out.push_str(&format!("MAE              {:.4}\n", report.mae));
    out.push_str(&format!("RMSE             {:.4}\n", report.rmse));
    out.push_str(&format!("coverage         {:.4}\n", report.coverage));
    out.push_str(&format!(
        "split            fraction {} seed {}\n",
        report.config.split.test_fraction, report.config.split.seed
    ));
    out.push_str(&format!(
        "similarity       k {} theta {}\n",
        report.config.sim.k, report.config.sim.theta
    ));
    let iwo = &report.config.iwo;
    out.push_str(&format!(
        "iwo              seeds {}..{} sigma {}..{} n {} T {} pop {}/{}\n",
        iwo.min_seeds,
        iwo.max_seeds,
        iwo.sigma_final,
        iwo.sigma_initial,
        iwo.modulation_index,
        iwo.max_iterations,
        iwo.initial_population,
        iwo.max_population
    ));
    out.push_str(&format!(
        "seeds            global {} | fitness holdout {}\n",
        report.config.global_seed, report.config.fitness_holdout_fraction
    ));
    out.push_str(&format!("elapsed          {:.1?}\n", report.elapsed));
    if !report.reference.is_empty() {
        out.push_str("\npublished reference results (not reproduced by this run):\n");
        out.push_str(&format!("  {:<12}{:>8}{:>8}\n", "method", "MAE", "RMSE"));
        for row in &report.reference {
            out.push_str(&format!(
                "  {:<12}{:>8.3}{:>8.3}\n",
                row.method, row.mae, row.rmse
            ));
        }
    }
    out
}
