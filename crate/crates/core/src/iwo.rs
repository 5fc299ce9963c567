//! Invasive weed optimization: an objective-agnostic minimizer over
//! box-constrained continuous vectors in `[0, 1]^dim`.
//!
//! Each candidate solution ("weed") spawns a number of children ("seeds")
//! proportional to its relative fitness; children are scattered around the
//! parent with normally distributed steps whose standard deviation shrinks
//! over iterations, moving the search from exploration to exploitation.
//! When the merged population exceeds a cap, the worst weeds are discarded.
//! Sort-and-truncate of the merged parent+child population never discards
//! the incumbent best, so the best fitness is non-increasing across
//! iterations.
//!
//! All stochastic draws flow from one seeded generator per [`optimize`]
//! call, in a fixed order (initial positions, then per-iteration dispersal
//! in population order), so runs are reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwoParams {
    /// Seeds granted to the worst weed.
    pub min_seeds: u32,
    /// Seeds granted to the best weed.
    pub max_seeds: u32,
    /// Dispersal standard deviation at iteration 0.
    pub sigma_initial: f64,
    /// Dispersal standard deviation at the final iteration.
    pub sigma_final: f64,
    /// Nonlinear modulation index of the sigma schedule.
    pub modulation_index: f64,
    /// Number of iterations.
    pub max_iterations: u32,
    /// Size of the random initial population.
    pub initial_population: u32,
    /// Population cap enforced by truncation.
    pub max_population: u32,
}

impl Default for IwoParams {
    fn default() -> Self {
        IwoParams {
            min_seeds: 0,
            max_seeds: 7,
            sigma_initial: 1.0,
            sigma_final: 0.001,
            modulation_index: 5.0,
            max_iterations: 300,
            initial_population: 10,
            max_population: 200,
        }
    }
}

impl IwoParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_seeds > self.max_seeds {
            return Err(Error::InvalidParams(format!(
                "min_seeds {} exceeds max_seeds {}",
                self.min_seeds, self.max_seeds
            )));
        }
        if !self.sigma_initial.is_finite()
            || !self.sigma_final.is_finite()
            || self.sigma_final < 0.0
            || self.sigma_final > self.sigma_initial
        {
            return Err(Error::InvalidParams(format!(
                "sigma schedule requires 0 <= sigma_final <= sigma_initial, got {} and {}",
                self.sigma_final, self.sigma_initial
            )));
        }
        if !(self.modulation_index.is_finite() && self.modulation_index > 0.0) {
            return Err(Error::InvalidParams(format!(
                "modulation index must be positive, got {}",
                self.modulation_index
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
        }
        if self.initial_population < 1 || self.initial_population > self.max_population {
            return Err(Error::InvalidParams(format!(
                "population requires 1 <= initial ({}) <= max ({})",
                self.initial_population, self.max_population
            )));
        }
        Ok(())
    }
}

/// One candidate solution. `fitness` is `None` until evaluated; the
/// optimizer only ever holds evaluated, finite-fitness weeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Weed {
    pub position: Vec<f64>,
    pub fitness: Option<f64>,
    /// Creation order, used to break fitness ties deterministically.
    pub id: u64,
}

/// Per-iteration convergence record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u32,
    pub best_fitness: f64,
    pub worst_fitness: f64,
    pub population: usize,
    pub sigma: f64,
}

/// Full convergence trace of one [`optimize`] call. `points[0]` describes
/// the initial population; one point follows per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwoTrace {
    pub points: Vec<TracePoint>,
    pub evaluations: u64,
}

impl IwoTrace {
    /// Export as `t,best,worst,pop,sigma` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,best,worst,pop,sigma\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.iteration, p.best_fitness, p.worst_fitness, p.population, p.sigma
            ));
        }
        out
    }
}

/// Number of child seeds for a weed with objective value `f`, given the
/// current population extremes: a linear ramp from `min_seeds` at the worst
/// weed to `max_seeds` at the best, floored. A flat population (all values
/// equal) grants every weed `max_seeds` to keep exploration alive.
pub fn seed_count(f: f64, f_best: f64, f_worst: f64, params: &IwoParams) -> Result<u32> {
    if f_best > f_worst {
        return Err(Error::InvalidParams(format!(
            "fitness extremes inverted: best {f_best} > worst {f_worst}"
        )));
    }
    if f < f_best || f > f_worst {
        return Err(Error::OutOfRange {
            what: "f",
            range: "[f_best, f_worst]",
            value: f,
        });
    }
    let ratio = if f_best == f_worst {
        1.0
    } else {
        (f_worst - f) / (f_worst - f_best)
    };
    let span = (params.max_seeds - params.min_seeds) as f64;
    Ok((params.min_seeds as f64 + span * ratio).floor() as u32)
}

/// Dispersal standard deviation at iteration `t` of `max_iterations`:
/// `((T - t) / T)^n * (sigma_initial - sigma_final) + sigma_final`.
pub fn sigma_at(t: u32, params: &IwoParams) -> f64 {
    let t_max = params.max_iterations;
    debug_assert!(t <= t_max);
    let frac = (t_max.saturating_sub(t)) as f64 / t_max as f64;
    frac.powf(params.modulation_index) * (params.sigma_initial - params.sigma_final)
        + params.sigma_final
}

/// Scatters one child around the parent: each coordinate receives an
/// independent `N(0, sigma^2)` step and is clamped back into `[0, 1]`.
/// The child is unevaluated; the optimizer assigns its id.
pub fn disperse<R: Rng + ?Sized>(parent: &Weed, sigma: f64, rng: &mut R) -> Weed {
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let position = parent
        .position
        .iter()
        .map(|&x| (x + normal.sample(rng)).clamp(0.0, 1.0))
        .collect();
    Weed {
        position,
        fitness: None,
        id: 0,
    }
}

/// Keeps the `max_population` lowest-fitness weeds (ties broken by
/// ascending id, so earlier-created weeds survive); identity when the
/// population is within the cap. All weeds must be evaluated.
pub fn truncate(mut population: Vec<Weed>, params: &IwoParams) -> Vec<Weed> {
    let cap = params.max_population as usize;
    if population.len() <= cap {
        return population;
    }
    population.sort_by(|a, b| {
        let fa = a.fitness.expect("truncate requires evaluated weeds");
        let fb = b.fitness.expect("truncate requires evaluated weeds");
        fa.total_cmp(&fb).then(a.id.cmp(&b.id))
    });
    population.truncate(cap);
    population
}

/// Minimizes `objective` over `[0, 1]^dim` with a fully random initial
/// population. Returns the best weed ever evaluated and the full trace.
pub fn optimize<F>(objective: F, dim: usize, params: &IwoParams, seed: u64) -> Result<(Weed, IwoTrace)>
where
    F: Fn(&[f64]) -> f64,
{
    optimize_with_initial(objective, dim, params, seed, &[])
}

/// Like [`optimize`], but the first members of the initial population take
/// the given positions (clamped into the box); the rest are uniform random.
/// Callers use this to pin known-good candidates such as the all-ones
/// vector.
pub fn optimize_with_initial<F>(
    objective: F,
    dim: usize,
    params: &IwoParams,
    seed: u64,
    initial: &[Vec<f64>],
) -> Result<(Weed, IwoTrace)>
where
    F: Fn(&[f64]) -> f64,
{
    params.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParams("dimension must be >= 1".into()));
    }
    if initial.len() > params.initial_population as usize {
        return Err(Error::InvalidParams(format!(
            "{} pinned positions exceed the initial population of {}",
            initial.len(),
            params.initial_population
        )));
    }
    for p in initial {
        if p.len() != dim {
            return Err(Error::InvalidParams(format!(
                "pinned position has dimension {}, expected {dim}",
                p.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_id: u64 = 0;
    let mut evaluations: u64 = 0;

    let evaluate = |position: &[f64], evaluations: &mut u64| -> Result<f64> {
        let value = objective(position);
        *evaluations += 1;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                value,
                position: position.to_vec(),
            });
        }
        Ok(value)
    };

    let mut population: Vec<Weed> = Vec::with_capacity(params.max_population as usize);
    for pinned in initial {
        let position: Vec<f64> = pinned.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
        let fitness = evaluate(&position, &mut evaluations)?;
        population.push(Weed {
            position,
            fitness: Some(fitness),
            id: next_id,
        });
        next_id += 1;
    }
    while population.len() < params.initial_population as usize {
        let position: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let fitness = evaluate(&position, &mut evaluations)?;
        population.push(Weed {
            position,
            fitness: Some(fitness),
            id: next_id,
        });
        next_id += 1;
    }

    let mut best = best_of(&population).clone();
    let mut trace = IwoTrace {
        points: Vec::with_capacity(params.max_iterations as usize + 1),
        evaluations: 0,
    };
    record(&mut trace, 0, &population, sigma_at(0, params));

    for t in 1..=params.max_iterations {
        let (f_best, f_worst) = extremes(&population);
        let sigma = sigma_at(t, params);

        let mut children = Vec::new();
        for parent in &population {
            let f = parent.fitness.expect("population is always evaluated");
            let seeds = seed_count(f, f_best, f_worst, params)?;
            for _ in 0..seeds {
                let mut child = disperse(parent, sigma, &mut rng);
                child.id = next_id;
                next_id += 1;
                child.fitness = Some(evaluate(&child.position, &mut evaluations)?);
                children.push(child);
            }
        }
        population.extend(children);
        population = truncate(population, params);

        let incumbent = best_of(&population);
        if incumbent.fitness < best.fitness {
            best = incumbent.clone();
        }
        debug_assert_eq!(best.fitness, incumbent.fitness, "truncation kept the best");
        record(&mut trace, t, &population, sigma);
    }

    trace.evaluations = evaluations;
    Ok((best, trace))
}

fn best_of(population: &[Weed]) -> &Weed {
    population
        .iter()
        .min_by(|a, b| {
            a.fitness
                .expect("evaluated")
                .total_cmp(&b.fitness.expect("evaluated"))
                .then(a.id.cmp(&b.id))
        })
        .expect("population is never empty")
}

fn extremes(population: &[Weed]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for w in population {
        let f = w.fitness.expect("evaluated");
        lo = lo.min(f);
        hi = hi.max(f);
    }
    (lo, hi)
}

fn record(trace: &mut IwoTrace, t: u32, population: &[Weed], sigma: f64) {
    let (best, worst) = extremes(population);
    trace.points.push(TracePoint {
        iteration: t,
        best_fitness: best,
        worst_fitness: worst,
        population: population.len(),
        sigma,
    });
}
