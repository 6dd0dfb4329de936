//! Many trials, several policies, summary statistics.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_trial_logged, Policy, RunConfig, RunMetrics};
use super::task::{SyntheticTask, TaskDistribution};
use crate::error::{Error, Result};
use crate::ledger;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub seed: u64,
    pub policies: Vec<Policy>,
    pub tasks: TaskDistribution,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 1000,
            seed: 20_240_601,
            policies: Policy::ALL.to_vec(),
            tasks: TaskDistribution::default(),
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub policy: Policy,
    pub metrics: RunMetrics,
}

/// Sample mean with a normal-approximation 95% interval half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Option<MeanCi> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        Some(MeanCi { n, mean, half_width })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: Policy,
    pub trials: usize,
    pub steps_to_commit: MeanCi,
    /// Steps among trials whose committed actions were all correct.
    pub matched_steps: Option<MeanCi>,
    pub inappropriate_commits: MeanCi,
    pub inappropriate_overrides: MeanCi,
    pub relitigated_premises: MeanCi,
    pub suppressed_conflict_commits: MeanCi,
    pub correct_rate: f64,
}

impl PolicySummary {
    fn of(policy: Policy, records: &[&TrialRecord]) -> PolicySummary {
        let col = |f: fn(&RunMetrics) -> u32| -> MeanCi {
            let v: Vec<f64> = records.iter().map(|r| f64::from(f(&r.metrics))).collect();
            MeanCi::of(&v).expect("at least one trial")
        };
        let matched: Vec<f64> = records
            .iter()
            .filter(|r| r.metrics.correct)
            .map(|r| f64::from(r.metrics.steps_to_commit))
            .collect();
        let correct = records.iter().filter(|r| r.metrics.correct).count();
        PolicySummary {
            policy,
            trials: records.len(),
            steps_to_commit: col(|m| m.steps_to_commit),
            matched_steps: MeanCi::of(&matched),
            inappropriate_commits: col(|m| m.inappropriate_commits),
            inappropriate_overrides: col(|m| m.inappropriate_overrides),
            relitigated_premises: col(|m| m.relitigated_premises),
            suppressed_conflict_commits: col(|m| m.suppressed_conflict_commits),
            correct_rate: correct as f64 / records.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<PolicySummary>,
}

impl ExperimentReport {
    pub fn policy(&self, policy: Policy) -> Option<&PolicySummary> {
        self.summary.iter().find(|s| s.policy == policy)
    }

    /// One row per policy: metric means and interval half-widths.
    pub fn write_summary(&self, out: impl Write, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
        let metrics = [
            "steps_to_commit",
            "matched_steps",
            "inappropriate_commits",
            "inappropriate_overrides",
            "relitigated_premises",
            "suppressed_conflict_commits",
        ];
        let mut header = vec!["policy".to_string(), "trials".to_string()];
        for m in metrics {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_ci95"));
        }
        header.push("correct_rate".into());
        w.write_record(&header).map_err(csv_error)?;
        for s in &self.summary {
            let mut row = vec![s.policy.to_string(), s.trials.to_string()];
            let cols = [
                Some(s.steps_to_commit),
                s.matched_steps,
                Some(s.inappropriate_commits),
                Some(s.inappropriate_overrides),
                Some(s.relitigated_premises),
                Some(s.suppressed_conflict_commits),
            ];
            for c in cols {
                match c {
                    Some(c) => {
                        row.push(format!("{:.4}", c.mean));
                        row.push(format!("{:.4}", c.half_width));
                    }
                    None => row.extend(["".into(), "".into()]),
                }
            }
            row.push(format!("{:.4}", s.correct_rate));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per (trial, policy).
    pub fn write_trials(&self, out: impl Write, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
        w.write_record([
            "trial",
            "seed",
            "policy",
            "steps_to_commit",
            "inappropriate_commits",
            "inappropriate_overrides",
            "relitigated_premises",
            "suppressed_conflict_commits",
            "probes_run",
            "correct",
        ])
        .map_err(csv_error)?;
        for r in &self.records {
            let m = &r.metrics;
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.policy.to_string(),
                m.steps_to_commit.to_string(),
                m.inappropriate_commits.to_string(),
                m.inappropriate_overrides.to_string(),
                m.relitigated_premises.to_string(),
                m.suppressed_conflict_commits.to_string(),
                m.probes_run.to_string(),
                m.correct.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `summary.tsv` and `trials.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_summary(fs::File::create(dir.join("summary.tsv"))?, b'\t')?;
        self.write_trials(fs::File::create(dir.join("trials.csv"))?, b',')?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Storage(e.to_string())
}

/// Seed of trial `k` under a master seed.
pub fn trial_seed(master: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k as u64);
    rng.random()
}

/// Runs every policy on the same `config.trials` tasks. When `log_dir` is
/// given, each trial's event logs are written there for audit.
pub fn run_experiment(config: &ExperimentConfig, log_dir: Option<&Path>) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::NoTrials);
    }
    if config.policies.is_empty() {
        return Err(Error::BadConfig("no policies selected".into()));
    }
    config.tasks.validate()?;
    config.run.policy.validate()?;
    if let Some(d) = log_dir {
        fs::create_dir_all(d)?;
    }
    let per_trial: Vec<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let seed = trial_seed(config.seed, k);
            let task = SyntheticTask::generate(seed, &config.tasks)?;
            config
                .policies
                .iter()
                .map(|&policy| {
                    let out = run_trial_logged(&task, policy, &config.run, None)?;
                    if let Some(d) = log_dir {
                        for (i, log) in out.logs.iter().enumerate() {
                            let name = format!("trial-{k:05}-{policy}-{i}.jsonl");
                            fs::write(d.join(name), ledger::write_log(log))?;
                        }
                    }
                    Ok(TrialRecord { trial: k, seed, policy, metrics: out.metrics })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summary = config
        .policies
        .iter()
        .map(|&p| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.policy == p).collect();
            PolicySummary::of(p, &rows)
        })
        .collect();
    Ok(ExperimentReport { config: config.clone(), records, summary })
}
