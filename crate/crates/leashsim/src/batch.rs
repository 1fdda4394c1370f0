//! Seeded batch runner: paired guided/unguided episodes, per-episode CSV
//! rows, and per-condition summary statistics.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{run_episode, EpisodeResult};
use crate::error::Result;
use crate::scenario::{Condition, Scenario};

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub runs: usize,
    /// Episode i uses seed `base_seed.wrapping_add(i)`, identical across
    /// conditions so rows pair up.
    pub base_seed: u64,
    pub conditions: Vec<Condition>,
    pub parallel: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            runs: 50,
            base_seed: 1,
            conditions: vec![Condition::Guided, Condition::Unguided],
            parallel: true,
        }
    }
}

/// Mean and population standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

fn stat(values: impl Iterator<Item = f64> + Clone) -> Stat {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return Stat { mean: 0.0, std: 0.0 };
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stat {
        mean,
        std: var.sqrt(),
    }
}

/// Aggregate metrics for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub episodes: usize,
    pub bips: Stat,
    pub completion_rate: f64,
    pub completion_time: Stat,
    pub mean_rc_error: Stat,
    pub max_rc_error: Stat,
    pub physical_path_length: Stat,
    pub virtual_path_length: Stat,
}

impl ConditionSummary {
    fn from_rows(condition: Condition, rows: &[EpisodeResult]) -> Self {
        let of = |f: fn(&EpisodeResult) -> f64| stat(rows.iter().map(f));
        ConditionSummary {
            condition,
            episodes: rows.len(),
            bips: of(|r| r.bips as f64),
            completion_rate: rows.iter().filter(|r| r.completed).count() as f64
                / rows.len().max(1) as f64,
            completion_time: of(|r| r.completion_time),
            mean_rc_error: of(|r| r.mean_rc_error),
            max_rc_error: of(|r| r.max_rc_error),
            physical_path_length: of(|r| r.physical_path_length),
            virtual_path_length: of(|r| r.virtual_path_length),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    /// Per-episode rows ordered by (condition order given, seed index).
    pub rows: Vec<EpisodeResult>,
    pub summaries: Vec<ConditionSummary>,
}

impl BatchOutput {
    pub fn summary_for(&self, condition: Condition) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.condition == condition)
    }

    /// The `summary.csv` payload, byte-stable for a given batch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed,condition,bips,completed,completion_time,mean_rc_error,max_rc_error,physical_path_length,virtual_path_length\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.seed,
                r.condition.as_str(),
                r.bips,
                r.completed,
                r.completion_time,
                r.mean_rc_error,
                r.max_rc_error,
                r.physical_path_length,
                r.virtual_path_length
            ));
        }
        out
    }
}

/// Run `cfg.runs` seeded episodes per condition.
///
/// Episodes share no state, so the parallel path hands them to rayon and
/// collects in index order; serial and parallel runs emit identical rows.
pub fn run_batch(scenario: &Scenario, cfg: &BatchConfig) -> Result<BatchOutput> {
    use crate::error::SimError;
    scenario.validate()?;
    if cfg.runs == 0 {
        return Err(SimError::InvalidScenario("batch needs at least one run".into()));
    }
    let mut rows = Vec::with_capacity(cfg.runs * cfg.conditions.len());
    for &condition in &cfg.conditions {
        let conditioned = scenario.with_condition(condition);
        let seeds: Vec<u64> = (0..cfg.runs)
            .map(|i| cfg.base_seed.wrapping_add(i as u64))
            .collect();
        let mut results: Vec<EpisodeResult> = if cfg.parallel {
            seeds
                .par_iter()
                .map(|&seed| run_episode(&conditioned, seed))
                .collect()
        } else {
            seeds
                .iter()
                .map(|&seed| run_episode(&conditioned, seed))
                .collect()
        };
        rows.append(&mut results);
    }
    let summaries = cfg
        .conditions
        .iter()
        .map(|&c| {
            let of_c: Vec<EpisodeResult> = rows
                .iter()
                .filter(|r| r.condition == c)
                .cloned()
                .collect();
            ConditionSummary::from_rows(c, &of_c)
        })
        .collect();
    Ok(BatchOutput { rows, summaries })
}

/// Write `summary.csv` into `out_dir` (created if missing).
pub fn write_summary_csv(out_dir: &Path, output: &BatchOutput) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut file = fs::File::create(out_dir.join("summary.csv"))?;
    file.write_all(output.to_csv().as_bytes())?;
    Ok(())
}

/// Fail fast on an unwritable output directory before simulating anything.
pub fn prepare_out_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let probe = out_dir.join(".write_probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}
