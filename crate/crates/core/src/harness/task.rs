//! Synthetic decision tasks with hidden ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, Stakes};

/// Knobs for drawing random tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskDistribution {
    pub false_rate: f64,
    pub cost_range: [f64; 2],
    pub discrimination_range: [f64; 2],
    pub utility_range: [f64; 2],
    pub min_premises: usize,
    pub max_premises: usize,
    pub high_stakes_rate: f64,
    pub sessions: u8,
}

impl Default for TaskDistribution {
    fn default() -> Self {
        TaskDistribution {
            false_rate: 0.3,
            cost_range: [0.1, 0.5],
            discrimination_range: [0.6, 1.0],
            utility_range: [0.0, 1.0],
            min_premises: 1,
            max_premises: 3,
            high_stakes_rate: 0.5,
            sessions: 1,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], unit: bool) -> Result<()> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && (!unit || (r[0] >= 0.0 && r[1] <= 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::BadConfig(format!("{name} {r:?} is not a valid range")))
    }
}

impl TaskDistribution {
    pub fn validate(&self) -> Result<()> {
        check_range("false_rate", [self.false_rate, self.false_rate], true)?;
        check_range("high_stakes_rate", [self.high_stakes_rate, self.high_stakes_rate], true)?;
        check_range("cost_range", self.cost_range, false)?;
        if self.cost_range[0] < 0.0 {
            return Err(Error::BadConfig("cost_range must be non-negative".into()));
        }
        check_range("discrimination_range", self.discrimination_range, true)?;
        check_range("utility_range", self.utility_range, false)?;
        if self.min_premises == 0 || self.min_premises > self.max_premises {
            return Err(Error::BadConfig(format!(
                "premise count range {}..={} is empty or zero",
                self.min_premises, self.max_premises
            )));
        }
        if !matches!(self.sessions, 1 | 2) {
            return Err(Error::BadConfig(format!("sessions must be 1 or 2, got {}", self.sessions)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPremise {
    pub statement: String,
    pub axis: Axis,
    pub stakes: Stakes,
    /// Discrimination of the probe that can test this premise. The scripted
    /// expert is right with the same probability.
    pub discrimination: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAction {
    pub description: String,
    pub utility: f64,
}

/// Which of the two candidate actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    /// Rests on every premise. Preferred by the assistant.
    Primary,
    /// Rests on nothing; the safe fallback.
    Alternative,
}

/// A task: premises the primary action rests on, and the truth about them.
/// The truth is private; policies only see it through [`SyntheticTask::sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub seed: u64,
    pub premises: Vec<TaskPremise>,
    pub primary: TaskAction,
    pub alternative: TaskAction,
    pub sessions: u8,
    truths: Vec<bool>,
}

impl SyntheticTask {
    pub fn new(
        seed: u64,
        premises: Vec<TaskPremise>,
        primary: TaskAction,
        alternative: TaskAction,
        sessions: u8,
        truths: Vec<bool>,
    ) -> Result<SyntheticTask> {
        if premises.is_empty() || premises.len() != truths.len() {
            return Err(Error::BadConfig("one truth value per premise, at least one premise".into()));
        }
        if !matches!(sessions, 1 | 2) {
            return Err(Error::BadConfig(format!("sessions must be 1 or 2, got {sessions}")));
        }
        for p in &premises {
            crate::error::require_unit("discrimination", p.discrimination)?;
            crate::error::require_finite("cost", p.cost)?;
        }
        Ok(SyntheticTask { seed, premises, primary, alternative, sessions, truths })
    }

    pub fn generate(seed: u64, dist: &TaskDistribution) -> Result<SyntheticTask> {
        dist.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(dist.min_premises..=dist.max_premises);
        let draw = |rng: &mut ChaCha8Rng, r: [f64; 2]| {
            if r[0] == r[1] { r[0] } else { rng.random_range(r[0]..=r[1]) }
        };
        let mut premises = Vec::with_capacity(n);
        let mut truths = Vec::with_capacity(n);
        for i in 0..n {
            let axis = if rng.random_bool(0.8) { Axis::Epistemic } else { Axis::Procedural };
            let stakes = if rng.random_bool(dist.high_stakes_rate) { Stakes::High } else { Stakes::Low };
            premises.push(TaskPremise {
                statement: format!("premise {} of task {seed:016x}", i + 1),
                axis,
                stakes,
                discrimination: draw(&mut rng, dist.discrimination_range),
                cost: draw(&mut rng, dist.cost_range),
            });
            truths.push(!rng.random_bool(dist.false_rate));
        }
        let a = draw(&mut rng, dist.utility_range);
        let b = draw(&mut rng, dist.utility_range);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        SyntheticTask::new(
            seed,
            premises,
            TaskAction { description: "proceed with the preferred plan".into(), utility: hi },
            TaskAction { description: "fall back to the conservative plan".into(), utility: lo },
            dist.sessions,
            truths,
        )
    }

    /// The action that hidden truth favours.
    pub fn correct(&self) -> Choice {
        if self.truths.iter().all(|&t| t) { Choice::Primary } else { Choice::Alternative }
    }

    /// A noisy reading of premise `i`: right with probability equal to its
    /// discrimination.
    pub fn sample(&self, i: usize, rng: &mut impl Rng) -> bool {
        let truth = self.truths[i];
        if rng.random_bool(self.premises[i].discrimination) { truth } else { !truth }
    }

    /// Scoring only. Policies must not call this.
    pub(super) fn is_true(&self, i: usize) -> bool {
        self.truths[i]
    }

    pub fn false_count(&self) -> usize {
        self.truths.iter().filter(|t| !**t).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_is_deterministic() {
        let d = TaskDistribution::default();
        assert_eq!(SyntheticTask::generate(9, &d).unwrap(), SyntheticTask::generate(9, &d).unwrap());
    }

    #[test]
    fn generated_values_respect_ranges() {
        let d = TaskDistribution::default();
        for s in 0..200 {
            let t = SyntheticTask::generate(s, &d).unwrap();
            assert!((1..=3).contains(&t.premises.len()));
            assert!(t.primary.utility >= t.alternative.utility);
            for p in &t.premises {
                assert!((0.6..=1.0).contains(&p.discrimination));
                assert!((0.1..=0.5).contains(&p.cost));
            }
        }
    }

    #[test]
    fn bad_distribution_is_rejected() {
        let d = TaskDistribution { sessions: 3, ..Default::default() };
        assert_eq!(SyntheticTask::generate(1, &d).unwrap_err().code(), "bad-config");
        let d = TaskDistribution { false_rate: 1.5, ..Default::default() };
        assert!(d.validate().is_err());
    }

    #[test]
    fn perfect_probe_reads_truth() {
        let t = SyntheticTask::new(
            0,
            vec![TaskPremise {
                statement: "x".into(),
                axis: Axis::Epistemic,
                stakes: Stakes::High,
                discrimination: 1.0,
                cost: 0.1,
            }],
            TaskAction { description: "a".into(), utility: 1.0 },
            TaskAction { description: "b".into(), utility: 0.0 },
            1,
            vec![false],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..50).all(|_| !t.sample(0, &mut rng)));
        assert_eq!(t.correct(), Choice::Alternative);
    }
}
