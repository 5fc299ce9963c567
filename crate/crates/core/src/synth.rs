//! Deterministic synthetic rating data for tests and demos.
//!
//! Users belong to latent taste clusters; a rating mixes the cluster's
//! affinity for the item, an item-level bias, a user-level bias and noise,
//! then snaps to the dataset's rating grid. Item popularity is Zipf
//! distributed and per-user profile sizes are log-normal, so heavy raters
//! that cover much of a light user's profile exist, as they do in real
//! rating data. Same seed, same matrix, bit for bit.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ratings::{ItemId, RatingMatrix, UserId};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub target_ratings: usize,
    pub clusters: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Rating grid step (0.5 for half-star scales, 1.0 for integer scales).
    pub step: f64,
    /// Zipf exponent of item popularity.
    pub zipf_exponent: f64,
    /// Log-std of per-user profile sizes.
    pub count_log_std: f64,
    pub affinity_std: f64,
    pub item_bias_std: f64,
    pub user_bias_std: f64,
    pub noise_std: f64,
    /// Guarantee every catalog item receives at least one rating.
    pub cover_all_items: bool,
}

impl SynthConfig {
    /// Shape of the FilmTrust dataset: 1508 users, 2071 items, about 35.5k
    /// ratings on the half-star 0.5..4.0 scale.
    pub fn filmtrust() -> Self {
        SynthConfig {
            users: 1508,
            items: 2071,
            target_ratings: 35_497,
            clusters: 12,
            scale_min: 0.5,
            scale_max: 4.0,
            step: 0.5,
            zipf_exponent: 1.1,
            count_log_std: 1.2,
            affinity_std: 0.6,
            item_bias_std: 0.45,
            user_bias_std: 0.5,
            noise_std: 0.25,
            cover_all_items: true,
        }
    }

    /// Shape of the Epinions dataset: 40163 users, 139738 items, about
    /// 665k ratings on the integer 1..5 scale.
    pub fn epinions() -> Self {
        SynthConfig {
            users: 40_163,
            items: 139_738,
            target_ratings: 664_824,
            clusters: 8,
            scale_min: 1.0,
            scale_max: 5.0,
            step: 1.0,
            zipf_exponent: 1.28,
            count_log_std: 1.5,
            affinity_std: 0.5,
            item_bias_std: 0.75,
            user_bias_std: 0.65,
            noise_std: 0.35,
            cover_all_items: false,
        }
    }
}

pub fn filmtrust_like(seed: u64) -> RatingMatrix {
    generate(&SynthConfig::filmtrust(), seed)
}

pub fn epinions_like(seed: u64) -> RatingMatrix {
    generate(&SynthConfig::epinions(), seed)
}

pub fn generate(cfg: &SynthConfig, seed: u64) -> RatingMatrix {
    assert!(cfg.users > 0 && cfg.items > 0 && cfg.clusters > 0);
    assert!(cfg.scale_max > cfg.scale_min && cfg.step > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_normal = Normal::new(0.0, 1.0).unwrap();

    // profile sizes: log-normal, scaled toward the target rating count
    let mean_per_user = cfg.target_ratings as f64 / cfg.users as f64;
    let median = mean_per_user / (cfg.count_log_std * cfg.count_log_std / 2.0).exp();
    let mut counts: Vec<usize> = (0..cfg.users)
        .map(|_| {
            let z: f64 = unit_normal.sample(&mut rng);
            let raw = median * (cfg.count_log_std * z).exp();
            (raw.round() as usize).clamp(1, cfg.items)
        })
        .collect();
    let total: usize = counts.iter().sum();
    let scale = cfg.target_ratings as f64 / total as f64;
    for c in counts.iter_mut() {
        *c = ((*c as f64 * scale).round() as usize).clamp(1, cfg.items);
    }

    let cluster_of: Vec<usize> = (0..cfg.users).map(|_| rng.random_range(0..cfg.clusters)).collect();
    let user_bias: Vec<f64> = (0..cfg.users)
        .map(|_| cfg.user_bias_std * unit_normal.sample(&mut rng))
        .collect();
    let item_bias: Vec<f64> = (0..cfg.items)
        .map(|_| cfg.item_bias_std * unit_normal.sample(&mut rng))
        .collect();
    let affinity: Vec<Vec<f64>> = (0..cfg.clusters)
        .map(|_| {
            (0..cfg.items)
                .map(|_| cfg.affinity_std * unit_normal.sample(&mut rng))
                .collect()
        })
        .collect();

    // Zipf popularity: inverse-CDF table over item indices
    let mut cumulative = Vec::with_capacity(cfg.items);
    let mut acc = 0.0;
    for rank in 0..cfg.items {
        acc += 1.0 / ((rank + 1) as f64).powf(cfg.zipf_exponent);
        cumulative.push(acc);
    }
    let mass = acc;
    let draw_item = |rng: &mut ChaCha8Rng| -> usize {
        let x: f64 = rng.random::<f64>() * mass;
        cumulative.partition_point(|&c| c < x).min(cfg.items - 1)
    };

    // item assignment
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); cfg.users];
    let mut member: Vec<HashSet<usize>> = vec![HashSet::new(); cfg.users];
    if cfg.cover_all_items {
        let mut item_order: Vec<usize> = (0..cfg.items).collect();
        item_order.shuffle(&mut rng);
        let mut user_order: Vec<usize> = (0..cfg.users).collect();
        user_order.shuffle(&mut rng);
        let mut cursor = 0usize;
        for &item in &item_order {
            let mut scanned = 0;
            while scanned < cfg.users {
                let u = user_order[cursor % cfg.users];
                cursor += 1;
                scanned += 1;
                if chosen[u].len() < counts[u] && !member[u].contains(&item) {
                    chosen[u].push(item);
                    member[u].insert(item);
                    break;
                }
            }
            if scanned == cfg.users {
                break; // no capacity left anywhere
            }
        }
    }
    for u in 0..cfg.users {
        let mut stall = 0;
        while chosen[u].len() < counts[u] {
            let item = draw_item(&mut rng);
            if member[u].insert(item) {
                chosen[u].push(item);
                stall = 0;
            } else {
                stall += 1;
                if stall > 200 {
                    // dense profile: sweep for the next unused item
                    let start = item;
                    let mut found = None;
                    for off in 1..cfg.items {
                        let cand = (start + off) % cfg.items;
                        if !member[u].contains(&cand) {
                            found = Some(cand);
                            break;
                        }
                    }
                    match found {
                        Some(cand) => {
                            member[u].insert(cand);
                            chosen[u].push(cand);
                            stall = 0;
                        }
                        None => break, // user rated everything
                    }
                }
            }
        }
    }

    // rating values
    let midpoint = (cfg.scale_min + cfg.scale_max) / 2.0;
    let steps_max = ((cfg.scale_max - cfg.scale_min) / cfg.step).round();
    let mut triples = Vec::with_capacity(counts.iter().sum());
    for u in 0..cfg.users {
        let c = cluster_of[u];
        for &item in &chosen[u] {
            let raw = midpoint
                + item_bias[item]
                + affinity[c][item]
                + user_bias[u]
                + cfg.noise_std * unit_normal.sample(&mut rng);
            let clamped = raw.clamp(cfg.scale_min, cfg.scale_max);
            let snapped = cfg.scale_min
                + (((clamped - cfg.scale_min) / cfg.step).round()).clamp(0.0, steps_max) * cfg.step;
            triples.push((UserId(u as u64 + 1), ItemId(item as u64 + 1), snapped));
        }
    }

    RatingMatrix::from_triples(&triples, cfg.scale_min, cfg.scale_max)
        .expect("generated ratings are in scale")
}
