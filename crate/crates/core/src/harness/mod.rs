//! Scripted-agent simulation on synthetic decision tasks.
//!
//! Each trial drives a fresh basis through the [`Gateway`](crate::Gateway)
//! only. Hidden truth reaches a policy solely as noisy probe or expert
//! readings.

mod experiment;
mod run;
mod task;

pub use experiment::{
    run_experiment, trial_seed, ExperimentConfig, ExperimentReport, MeanCi, PolicySummary, TrialRecord,
};
pub use run::{run_trial, run_trial_logged, Policy, RunConfig, RunMetrics, TrialOutcome};
pub use task::{Choice, SyntheticTask, TaskAction, TaskDistribution, TaskPremise};
