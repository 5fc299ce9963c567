//! Phase 1: confidence-fused user similarity and important-user selection.
//!
//! The weight of a candidate neighbor `v` for a target `u` fuses two
//! signals: the Pearson correlation of the ratings both users gave to
//! their common items, and a confidence factor measuring how much of the
//! target's profile the candidate covers. Candidates whose fused weight
//! exceeds a threshold form the target's important-user set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{RatingMatrix, UserId};

/// Parameters of the similarity phase.
///
/// `k` scales the confidence when correlation is absent; `theta` is the
/// strict selection threshold for important users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    pub k: f64,
    pub theta: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams { k: 0.2, theta: 0.6 }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k < 1.0) || !self.k.is_finite() {
            return Err(Error::OutOfRange {
                what: "k",
                range: "(0, 1)",
                value: self.k,
            });
        }
        if !(self.theta >= 0.0 && self.theta < 1.0) || !self.theta.is_finite() {
            return Err(Error::OutOfRange {
                what: "theta",
                range: "[0, 1)",
                value: self.theta,
            });
        }
        Ok(())
    }
}

/// One selected neighbor with the components of its fused weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub user: UserId,
    pub sim: f64,
    pub conf: f64,
    pub weight: f64,
}

/// A target user's important users, ordered by descending fused weight
/// (ties broken by ascending user id). Possibly empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub target: UserId,
    pub neighbors: Vec<Neighbor>,
    pub theta_used: f64,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn user_ids(&self) -> Vec<UserId> {
        self.neighbors.iter().map(|n| n.user).collect()
    }

    /// Debug dump as `neighbor,sim,conf,weight_w` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neighbor,sim,conf,weight_w\n");
        for n in &self.neighbors {
            out.push_str(&format!("{},{},{},{}\n", n.user, n.sim, n.conf, n.weight));
        }
        out
    }
}

/// Pearson correlation over the users' common items, clamped to `[0, 1]`.
///
/// Deviations are taken from each user's full-profile mean. Returns 0 when
/// fewer than two common items exist or either user's common-item ratings
/// have zero variance (the coefficient is undefined there), and clamps
/// negative correlations to 0: uncorrelated and anti-correlated users carry
/// no similarity signal.
pub fn pearson_sim(train: &RatingMatrix, u: UserId, v: UserId) -> Result<f64> {
    if u == v {
        return Err(Error::SelfSimilarity(u));
    }
    let ui = train.user_index(u).ok_or(Error::UnknownUser(u))?;
    let vi = train.user_index(v).ok_or(Error::UnknownUser(v))?;
    let pairs = train.common_ratings(ui, vi);
    let mean_u = train.user_mean_by_index(ui).unwrap_or(0.0);
    let mean_v = train.user_mean_by_index(vi).unwrap_or(0.0);
    Ok(pearson_from_pairs(&pairs, mean_u, mean_v))
}

pub(crate) fn pearson_from_pairs(pairs: &[(usize, f64, f64)], mean_u: f64, mean_v: f64) -> f64 {
    if pairs.len() < 2 {
        return 0.0;
    }
    let mut num = 0.0;
    let mut den_u = 0.0;
    let mut den_v = 0.0;
    for &(_, ru, rv) in pairs {
        let du = ru - mean_u;
        let dv = rv - mean_v;
        num += du * dv;
        den_u += du * du;
        den_v += dv * dv;
    }
    if den_u == 0.0 || den_v == 0.0 {
        return 0.0;
    }
    (num / (den_u.sqrt() * den_v.sqrt())).clamp(0.0, 1.0)
}

/// Confidence of `v` as a neighbor of `u`: the smoothed fraction of `u`'s
/// rated items that `v` also rated. Strictly inside `(0, 1)` and
/// asymmetric in general.
pub fn confidence(train: &RatingMatrix, u: UserId, v: UserId) -> Result<f64> {
    let ui = train.user_index(u).ok_or(Error::UnknownUser(u))?;
    let vi = train.user_index(v).ok_or(Error::UnknownUser(v))?;
    let common = if ui == vi {
        train.ratings_of(ui).len()
    } else {
        train.common_ratings(ui, vi).len()
    };
    Ok(confidence_from_counts(common, train.ratings_of(ui).len()))
}

/// `(common + 1) / (target items + 2)`.
pub fn confidence_from_counts(common_items: usize, target_items: usize) -> f64 {
    (common_items as f64 + 1.0) / (target_items as f64 + 2.0)
}

/// Fuses similarity and confidence into the combined weight:
/// the harmonic mean when both are positive, `k * conf` when only
/// confidence is, and 0 otherwise.
///
/// `sim != 0 && conf == 0` cannot arise from [`confidence`] (it is strictly
/// positive); the branch is kept total and returns 0.
pub fn combined_weight(sim: f64, conf: f64, params: &SimilarityParams) -> Result<f64> {
    params.validate()?;
    for (what, value) in [("sim", sim), ("conf", conf)] {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange {
                what,
                range: "[0, 1]",
                value,
            });
        }
    }
    Ok(fuse(sim, conf, params.k))
}

fn fuse(sim: f64, conf: f64, k: f64) -> f64 {
    if sim != 0.0 && conf != 0.0 {
        2.0 * sim * conf / (sim + conf)
    } else if sim == 0.0 && conf != 0.0 {
        k * conf
    } else {
        0.0
    }
}

/// Scans every other user and keeps those whose combined weight strictly
/// exceeds `theta`, ordered by descending weight then ascending user id.
pub fn select_important_users(
    train: &RatingMatrix,
    u: UserId,
    params: &SimilarityParams,
) -> Result<NeighborSet> {
    params.validate()?;
    let ui = train.user_index(u).ok_or(Error::UnknownUser(u))?;
    let target_items = train.ratings_of(ui).len();
    let mean_u = train.user_mean_by_index(ui).unwrap_or(0.0);

    let mut neighbors = Vec::new();
    for vi in 0..train.n_users() {
        if vi == ui {
            continue;
        }
        let pairs = train.common_ratings(ui, vi);
        let mean_v = train.user_mean_by_index(vi).unwrap_or(0.0);
        let sim = pearson_from_pairs(&pairs, mean_u, mean_v);
        let conf = confidence_from_counts(pairs.len(), target_items);
        let weight = fuse(sim, conf, params.k);
        if weight > params.theta {
            neighbors.push(Neighbor {
                user: train.user_id(vi),
                sim,
                conf,
                weight,
            });
        }
    }
    neighbors.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.user.cmp(&b.user)));

    Ok(NeighborSet {
        target: u,
        neighbors,
        theta_used: params.theta,
    })
}
