//! Phase 2 and 3: learn per-neighbor importance weights by minimizing
//! held-out MAE with the IWO optimizer, then predict unknown ratings as the
//! importance-weighted average of neighbor ratings.
//!
//! Fitting is leakage-free: a seeded fraction of the target's train ratings
//! is held out as the fitness item set, and those ratings are masked from
//! the target's profile while neighbors are selected and weights are
//! evaluated, so no held-out label influences its own prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iwo::{self, IwoParams, IwoTrace};
use crate::ratings::{ItemId, RatingMatrix, UserId};
use crate::similarity::{select_important_users, NeighborSet, SimilarityParams};

/// A fitted per-user model: the important-user set and one importance
/// weight per neighbor, aligned to the neighbor order.
/// `fitness_achieved` is the best held-out MAE reached by the optimizer,
/// `None` for fallback-only models (empty neighbor set, never optimized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub target: UserId,
    pub neighbor_set: NeighborSet,
    pub weights: Vec<f64>,
    pub fitness_achieved: Option<f64>,
}

impl UserModel {
    pub fn is_fallback_only(&self) -> bool {
        self.neighbor_set.is_empty()
    }

    /// Serializes as `user, neighbor:weight, ..., fitness`.
    pub fn to_record(&self) -> String {
        format_record(
            self.target,
            &self
                .neighbor_set
                .neighbors
                .iter()
                .zip(&self.weights)
                .map(|(n, &w)| (n.user, w))
                .collect::<Vec<_>>(),
            self.fitness_achieved,
        )
    }
}

/// The prediction-relevant part of a model as read back from a record:
/// neighbor ids and weights, without the similarity components.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedModel {
    pub target: UserId,
    pub neighbor_weights: Vec<(UserId, f64)>,
    pub fitness: Option<f64>,
}

impl CachedModel {
    pub fn parse_record(line: &str) -> Result<CachedModel> {
        let mut fields = line.split(',').map(str::trim);
        let user = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::ModelRecord("empty record".into()))?;
        let target = UserId(user.parse().map_err(|_| {
            Error::ModelRecord(format!("invalid user id `{user}`"))
        })?);

        let rest: Vec<&str> = fields.collect();
        let Some((last, pairs)) = rest.split_last() else {
            return Err(Error::ModelRecord("record has no fitness field".into()));
        };
        let fitness = match *last {
            "none" => None,
            s => Some(s.parse().map_err(|_| {
                Error::ModelRecord(format!("invalid fitness `{s}`"))
            })?),
        };
        let mut neighbor_weights = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let (id, w) = pair
                .split_once(':')
                .ok_or_else(|| Error::ModelRecord(format!("invalid neighbor pair `{pair}`")))?;
            let id: u64 = id
                .parse()
                .map_err(|_| Error::ModelRecord(format!("invalid neighbor id `{id}`")))?;
            let w: f64 = w
                .parse()
                .map_err(|_| Error::ModelRecord(format!("invalid weight `{w}`")))?;
            neighbor_weights.push((UserId(id), w));
        }
        Ok(CachedModel {
            target,
            neighbor_weights,
            fitness,
        })
    }

    pub fn to_record(&self) -> String {
        format_record(self.target, &self.neighbor_weights, self.fitness)
    }
}

fn format_record(target: UserId, pairs: &[(UserId, f64)], fitness: Option<f64>) -> String {
    let mut out = format!("{target}");
    for (id, w) in pairs {
        out.push_str(&format!(", {id}:{w}"));
    }
    match fitness {
        Some(f) => out.push_str(&format!(", {f}")),
        None => out.push_str(", none"),
    }
    out
}

/// Items held out from the target's train ratings for weight fitting,
/// together with their true ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessItemSet {
    pub target: UserId,
    pub items: Vec<(ItemId, f64)>,
}

/// Picks a seeded random subset of the target's train-rated items
/// (`floor(n * holdout_fraction)`, at least one) to serve as the fitness
/// item set. The target must keep at least one fitting rating, so users
/// with fewer than two train ratings are rejected.
pub fn build_fitness_set(
    train: &RatingMatrix,
    u: UserId,
    holdout_fraction: f64,
    seed: u64,
) -> Result<FitnessItemSet> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::OutOfRange {
            what: "holdout_fraction",
            range: "(0, 1)",
            value: holdout_fraction,
        });
    }
    let ui = train.user_index(u).ok_or(Error::UnknownUser(u))?;
    let row = train.ratings_of(ui);
    if row.len() < 2 {
        return Err(Error::TooFewRatings {
            user: u,
            ratings: row.len(),
            required: 2,
        });
    }
    let count = ((row.len() as f64 * holdout_fraction).floor() as usize).max(1);

    let mut entries: Vec<(ItemId, f64)> = row
        .iter()
        .map(|&(ii, r)| (train.item_id(ii), r))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u, 0));
    let (chosen, _) = entries.partial_shuffle(&mut rng, count);
    let mut items = chosen.to_vec();
    items.sort_unstable_by_key(|&(i, _)| i);
    Ok(FitnessItemSet { target: u, items })
}

/// Importance-weighted average of neighbor ratings for `item`, clamped to
/// the rating scale. Only neighbors that rated the item contribute; returns
/// `None` when none did, or when their weights sum to zero (the item is not
/// in the matrix counts as "no neighbor rated it"). Callers apply fallback.
pub fn weighted_prediction(
    train: &RatingMatrix,
    neighbors: &[UserId],
    weights: &[f64],
    item: ItemId,
) -> Result<Option<f64>> {
    if neighbors.len() != weights.len() {
        return Err(Error::WeightMismatch {
            weights: weights.len(),
            neighbors: neighbors.len(),
        });
    }
    let Some(ii) = train.item_index(item) else {
        return Ok(None);
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &w) in neighbors.iter().zip(weights) {
        if let Some(vi) = train.user_index(v) {
            if let Some(r) = train.rating_by_index(vi, ii) {
                num += w * r;
                den += w;
            }
        }
    }
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some((num / den).clamp(train.scale_min(), train.scale_max())))
}

/// [`weighted_prediction`] through a fitted model.
pub fn predict_rating(train: &RatingMatrix, model: &UserModel, item: ItemId) -> Result<Option<f64>> {
    let ids = model.neighbor_set.user_ids();
    weighted_prediction(train, &ids, &model.weights, item)
}

/// Tiered estimate used when the weighted average abstains:
/// user mean, then item mean, then global mean, clamped to the scale.
pub fn fallback_prediction(train: &RatingMatrix, u: UserId, i: ItemId) -> Result<f64> {
    let clamp = |x: f64| x.clamp(train.scale_min(), train.scale_max());
    if let Some(ui) = train.user_index(u) {
        if let Some(m) = train.user_mean_by_index(ui) {
            return Ok(clamp(m));
        }
    }
    if let Some(ii) = train.item_index(i) {
        if let Some(m) = train.item_mean_by_index(ii) {
            return Ok(clamp(m));
        }
    }
    train.global_mean().map(clamp).ok_or(Error::EmptyMatrix)
}

/// Mean absolute error of the candidate weights over the fitness item set.
/// Items the weighted average cannot predict contribute the fallback
/// prediction's error instead of being skipped, so zeroing out coverage is
/// never rewarded.
pub fn fitness_mae(
    matrix: &RatingMatrix,
    neighbor_set: &NeighborSet,
    weights: &[f64],
    fitness_set: &FitnessItemSet,
) -> Result<f64> {
    if fitness_set.items.is_empty() {
        return Err(Error::EmptyFitnessSet(fitness_set.target));
    }
    if weights.len() != neighbor_set.len() {
        return Err(Error::WeightMismatch {
            weights: weights.len(),
            neighbors: neighbor_set.len(),
        });
    }
    let ids = neighbor_set.user_ids();
    let mut sum = 0.0;
    for &(item, truth) in &fitness_set.items {
        let predicted = match weighted_prediction(matrix, &ids, weights, item)? {
            Some(p) => p,
            None => fallback_prediction(matrix, fitness_set.target, item)?,
        };
        sum += (predicted - truth).abs();
    }
    Ok(sum / fitness_set.items.len() as f64)
}

/// Fits the importance weights of one target user.
///
/// Builds the fitness item set, masks it from the target's profile, selects
/// the important users on the masked matrix and minimizes the held-out MAE
/// over weight vectors in `[0, 1]^|IU|`. The all-ones vector is pinned into
/// the initial population, so the fitted model never scores worse than
/// unweighted averaging on the fitness set. Returns a fallback-only model
/// when no user clears the selection threshold.
///
/// `seed` is the global experiment seed; per-user streams are derived from
/// it, so fits of distinct users are order-independent.
pub fn fit_user_weights(
    train: &RatingMatrix,
    u: UserId,
    sim_params: &SimilarityParams,
    iwo_params: &IwoParams,
    holdout_fraction: f64,
    seed: u64,
) -> Result<UserModel> {
    fit_user_weights_with_trace(train, u, sim_params, iwo_params, holdout_fraction, seed)
        .map(|(model, _)| model)
}

/// [`fit_user_weights`], also returning the optimizer's convergence trace
/// (`None` for fallback-only models, which never run the optimizer).
pub fn fit_user_weights_with_trace(
    train: &RatingMatrix,
    u: UserId,
    sim_params: &SimilarityParams,
    iwo_params: &IwoParams,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(UserModel, Option<IwoTrace>)> {
    sim_params.validate()?;
    iwo_params.validate()?;

    let fitness_set = build_fitness_set(train, u, holdout_fraction, seed)?;
    let masked_items: Vec<ItemId> = fitness_set.items.iter().map(|&(i, _)| i).collect();
    let masked = train.without_user_items(u, &masked_items)?;

    let neighbor_set = select_important_users(&masked, u, sim_params)?;
    if neighbor_set.is_empty() {
        return Ok((
            UserModel {
                target: u,
                neighbor_set,
                weights: Vec::new(),
                fitness_achieved: None,
            },
            None,
        ));
    }

    let dim = neighbor_set.len();
    let objective = fitness_objective(&masked, &neighbor_set, &fitness_set)?;
    let (best, trace) = iwo::optimize_with_initial(
        objective,
        dim,
        iwo_params,
        derive_seed(seed, u, 1),
        &[vec![1.0; dim]],
    )?;

    Ok((
        UserModel {
            target: u,
            neighbor_set,
            weights: best.position,
            fitness_achieved: best.fitness,
        },
        Some(trace),
    ))
}

/// Precomputed form of [`fitness_mae`] for the optimizer's hot loop: per
/// fitness item, the neighbor ratings that exist and the constant fallback
/// value. Must agree with [`fitness_mae`] exactly; a property test holds
/// the two routes together.
fn fitness_objective(
    masked: &RatingMatrix,
    neighbor_set: &NeighborSet,
    fitness_set: &FitnessItemSet,
) -> Result<impl Fn(&[f64]) -> f64> {
    struct ItemTerm {
        truth: f64,
        fallback: f64,
        raters: Vec<(usize, f64)>,
    }

    let neighbor_indices: Vec<usize> = neighbor_set
        .neighbors
        .iter()
        .map(|n| masked.user_index(n.user).expect("neighbor from this matrix"))
        .collect();

    let mut terms = Vec::with_capacity(fitness_set.items.len());
    for &(item, truth) in &fitness_set.items {
        let fallback = fallback_prediction(masked, fitness_set.target, item)?;
        let raters = match masked.item_index(item) {
            Some(ii) => neighbor_indices
                .iter()
                .enumerate()
                .filter_map(|(k, &vi)| masked.rating_by_index(vi, ii).map(|r| (k, r)))
                .collect(),
            None => Vec::new(),
        };
        terms.push(ItemTerm {
            truth,
            fallback,
            raters,
        });
    }

    let lo = masked.scale_min();
    let hi = masked.scale_max();
    let count = terms.len() as f64;
    Ok(move |weights: &[f64]| {
        let mut sum = 0.0;
        for term in &terms {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(k, r) in &term.raters {
                num += weights[k] * r;
                den += weights[k];
            }
            let predicted = if den == 0.0 {
                term.fallback
            } else {
                (num / den).clamp(lo, hi)
            };
            sum += (predicted - term.truth).abs();
        }
        sum / count
    })
}

/// Deterministic per-user stream derivation from the global seed; a
/// fixed-point mix rather than the standard hasher, which is randomized
/// per process.
pub fn derive_seed(global: u64, user: UserId, stream: u64) -> u64 {
    let mut x = splitmix64(global);
    x = splitmix64(x ^ user.0);
    splitmix64(x ^ stream)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
