//! Run configuration: defaults, flat key = value config files, and the
//! merge order (defaults, then file, then the seed env var, then flags).

use std::path::PathBuf;

use weedrec_core::eval::{Baseline, ExperimentConfig, SplitConfig};
use weedrec_core::iwo::IwoParams;
use weedrec_core::ratings::RatingFormat;
use weedrec_core::similarity::SimilarityParams;

/// Environment variable overriding the global seed.
pub const SEED_ENV_VAR: &str = "WEEDREC_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub format: RatingFormat,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub k: f64,
    pub theta: f64,
    pub s_min: u32,
    pub s_max: u32,
    pub sigma_initial: f64,
    pub sigma_final: f64,
    pub n: f64,
    pub iterations: u32,
    pub pop_initial: u32,
    pub pop_max: u32,
    pub fitness_holdout: f64,
    pub sample_users: Option<usize>,
    pub baseline: Baseline,
    pub out_json: PathBuf,
    pub out_csv: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimilarityParams::default();
        let iwo = IwoParams::default();
        RunConfig {
            dataset: None,
            format: RatingFormat::GenericTriples,
            test_fraction: 0.2,
            split_seed: 42,
            k: sim.k,
            theta: sim.theta,
            s_min: iwo.min_seeds,
            s_max: iwo.max_seeds,
            sigma_initial: iwo.sigma_initial,
            sigma_final: iwo.sigma_final,
            n: iwo.modulation_index,
            iterations: iwo.max_iterations,
            pop_initial: iwo.initial_population,
            pop_max: iwo.max_population,
            fitness_holdout: 0.25,
            sample_users: None,
            baseline: Baseline::Proposed,
            out_json: PathBuf::from("report.json"),
            out_csv: PathBuf::from("pairs.csv"),
            seed: 42,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn sim_params(&self) -> SimilarityParams {
        SimilarityParams {
            k: self.k,
            theta: self.theta,
        }
    }

    pub fn iwo_params(&self) -> IwoParams {
        IwoParams {
            min_seeds: self.s_min,
            max_seeds: self.s_max,
            sigma_initial: self.sigma_initial,
            sigma_final: self.sigma_final,
            modulation_index: self.n,
            max_iterations: self.iterations,
            initial_population: self.pop_initial,
            max_population: self.pop_max,
        }
    }

    pub fn experiment_config(&self, dataset_name: String) -> ExperimentConfig {
        ExperimentConfig {
            dataset_name,
            baseline: self.baseline,
            split: SplitConfig {
                test_fraction: self.test_fraction,
                seed: self.split_seed,
            },
            sim: self.sim_params(),
            iwo: self.iwo_params(),
            fitness_holdout_fraction: self.fitness_holdout,
            sample_users: self.sample_users,
            global_seed: self.seed,
            workers: self.workers,
        }
    }

    /// Applies one `key = value` pair from a config file. Keys are the
    /// long flag names without the leading dashes.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for key `{key}`"))
        }
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "format" => {
                self.format = value
                    .parse::<RatingFormat>()
                    .map_err(|e| e.to_string())?
            }
            "test-fraction" => self.test_fraction = parse(key, value)?,
            "split-seed" => self.split_seed = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "s-min" => self.s_min = parse(key, value)?,
            "s-max" => self.s_max = parse(key, value)?,
            "sigma-initial" => self.sigma_initial = parse(key, value)?,
            "sigma-final" => self.sigma_final = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "pop-initial" => self.pop_initial = parse(key, value)?,
            "pop-max" => self.pop_max = parse(key, value)?,
            "fitness-holdout" => self.fitness_holdout = parse(key, value)?,
            "sample-users" => self.sample_users = Some(parse(key, value)?),
            "baseline" => self.baseline = value.parse::<Baseline>().map_err(|e| e.to_string())?,
            "out-json" => self.out_json = PathBuf::from(value),
            "out-csv" => self.out_csv = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    /// Parses a flat config file: `key = value` lines, `#` comments.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", lineno + 1))?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| format!("config line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self) -> Result<(), String> {
        if let Ok(value) = std::env::var(SEED_ENV_VAR) {
            self.seed = value
                .parse()
                .map_err(|_| format!("invalid {SEED_ENV_VAR} value `{value}`"))?;
        }
        Ok(())
    }

    /// Serializes the effective configuration back into the flat file
    /// format; re-running with this file reproduces the run.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        if let Some(dataset) = &self.dataset {
            out.push_str(&format!("dataset = {}\n", dataset.display()));
        }
        out.push_str(&format!("format = {}\n", self.format));
        out.push_str(&format!("test-fraction = {}\n", self.test_fraction));
        out.push_str(&format!("split-seed = {}\n", self.split_seed));
        out.push_str(&format!("k = {}\n", self.k));
        out.push_str(&format!("theta = {}\n", self.theta));
        out.push_str(&format!("s-min = {}\n", self.s_min));
        out.push_str(&format!("s-max = {}\n", self.s_max));
        out.push_str(&format!("sigma-initial = {}\n", self.sigma_initial));
        out.push_str(&format!("sigma-final = {}\n", self.sigma_final));
        out.push_str(&format!("n = {}\n", self.n));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out.push_str(&format!("pop-initial = {}\n", self.pop_initial));
        out.push_str(&format!("pop-max = {}\n", self.pop_max));
        out.push_str(&format!("fitness-holdout = {}\n", self.fitness_holdout));
        if let Some(n) = self.sample_users {
            out.push_str(&format!("sample-users = {n}\n"));
        }
        out.push_str(&format!("baseline = {}\n", self.baseline));
        out.push_str(&format!("out-json = {}\n", self.out_json.display()));
        out.push_str(&format!("out-csv = {}\n", self.out_csv.display()));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("workers = {}\n", self.workers));
        out
    }
}
