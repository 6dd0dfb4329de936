//! Scripted negotiation between an assistant policy and an expert.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::{Choice, SyntheticTask};
use crate::engine::{Engine, StepClock};
use crate::error::{Error, Result};
use crate::gateway::{ApiError, Envelope, Gateway, GatewayConfig, Reply, Request};
use crate::graph::GateIntent;
use crate::ids::{ActionId, PremiseId, ProbeId};
use crate::ledger::LedgerEvent;
use crate::model::{Direction, EvidenceSource, LinkKind, PremiseStatus, Role};
use crate::policy::{EpistemicAction, PolicyConfig};

const EXPERT: &str = "expert";
const ASSISTANT: &str = "assistant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Full engine, basis persisted across sessions.
    Governed,
    /// Full engine, fresh basis every session.
    GovernedStateless,
    /// Commits the preferred action at once.
    AnswerCentric,
    /// Full detection, but a failed probe is overruled in favour of the
    /// expert's opening position.
    Sycophantic,
}

impl Policy {
    pub const ALL: [Policy; 4] =
        [Policy::Governed, Policy::GovernedStateless, Policy::AnswerCentric, Policy::Sycophantic];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Governed => "governed",
            Policy::GovernedStateless => "governed-stateless",
            Policy::AnswerCentric => "answer-centric",
            Policy::Sycophantic => "sycophantic",
        }
    }

    fn persistent(self) -> bool {
        self == Policy::Governed
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Policy> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidPolicy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub policy: PolicyConfig,
    /// Epistemic steps allowed per session before the expert overrides.
    pub max_steps: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { policy: PolicyConfig::default(), max_steps: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Expert-facing interactions until every session committed.
    pub steps_to_commit: u32,
    pub inappropriate_commits: u32,
    pub inappropriate_overrides: u32,
    pub relitigated_premises: u32,
    pub suppressed_conflict_commits: u32,
    pub probes_run: u32,
    /// Every session committed the action hidden truth favours.
    pub correct: bool,
}

/// Metrics plus the event log of each basis the trial used.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub metrics: RunMetrics,
    pub logs: Vec<Vec<LedgerEvent>>,
}

pub fn run_trial(task: &SyntheticTask, policy: Policy, config: &RunConfig) -> Result<RunMetrics> {
    Ok(run_trial_logged(task, policy, config, None)?.metrics)
}

/// Runs one trial. `dir` is the private basis directory used when the
/// policy persists across sessions; a temporary one is made if absent.
pub fn run_trial_logged(
    task: &SyntheticTask,
    policy: Policy,
    config: &RunConfig,
    dir: Option<&Path>,
) -> Result<TrialOutcome> {
    config.policy.validate()?;
    let mut tmp = None;
    let dir: Option<PathBuf> = if policy.persistent() && task.sessions == 2 {
        Some(match dir {
            Some(d) => d.to_path_buf(),
            None => {
                let t = tempfile::tempdir()?;
                let p = t.path().to_path_buf();
                tmp = Some(t);
                p
            }
        })
    } else {
        None
    };
    let mut trial = Trial {
        task,
        policy,
        config,
        rng: ChaCha8Rng::seed_from_u64(task.seed ^ 0x5eed),
        metrics: RunMetrics { correct: true, ..Default::default() },
        logs: Vec::new(),
        resolved: BTreeSet::new(),
        suppressed: BTreeSet::new(),
        committed_s1: BTreeSet::new(),
    };
    let mut persisted: Option<(Vec<PremiseId>, Vec<ProbeId>, BTreeSet<ProbeId>)> = None;
    for session in 0..task.sessions {
        let engine = match (&dir, session) {
            (Some(d), 0) => Engine::create(d, Box::new(StepClock::new(1, 1)))?,
            (Some(d), _) => Engine::open(d, Box::new(StepClock::new(1_000_000, 1)))?,
            (None, _) => Engine::with_clock(Box::new(StepClock::new(1 + 1_000_000 * session as u64, 1))),
        };
        let gw = Gateway::new(engine, GatewayConfig { policy: config.policy, ..Default::default() });
        let mut s = Session { gw, session, premises: Vec::new(), probes: Vec::new(), used: BTreeSet::new() };
        let carried = persisted.take();
        let fresh = carried.is_none();
        if let Some((premises, probes, used)) = carried {
            s.premises = premises;
            s.probes = probes;
            s.used = used;
        } else {
            // a stateless assistant forgets what was settled last time
            trial.resolved.clear();
            trial.suppressed.clear();
        }
        trial.run_session(&mut s, fresh)?;
        if dir.is_some() {
            persisted = Some((s.premises.clone(), s.probes.clone(), s.used.clone()));
        }
        trial.logs.push(s.gw.into_engine().events().to_vec());
    }
    if dir.is_some() {
        // one basis across both sessions: keep only its final log
        let last = trial.logs.pop().unwrap_or_default();
        trial.logs = vec![last];
    }
    drop(tmp);
    Ok(TrialOutcome { metrics: trial.metrics, logs: trial.logs })
}

struct Session {
    gw: Gateway,
    session: u8,
    premises: Vec<PremiseId>,
    probes: Vec<ProbeId>,
    used: BTreeSet<ProbeId>,
}

impl Session {
    fn call(&mut self, role: Role, request: Request) -> Result<Reply> {
        let actor = if role == Role::Expert { EXPERT } else { ASSISTANT };
        self.gw
            .handle(Envelope::new(request).actor(actor).role(role))
            .map(|r| r.result)
            .map_err(api_error)
    }

    fn index_of(&self, p: PremiseId) -> usize {
        self.premises.iter().position(|&q| q == p).expect("premise belongs to this task")
    }
}

fn api_error(e: ApiError) -> Error {
    Error::BadRequest(format!("{}: {}", e.code, e.message))
}

fn unexpected(reply: Reply) -> Error {
    Error::BadRequest(format!("unexpected reply {reply:?}"))
}

struct Trial<'t> {
    task: &'t SyntheticTask,
    policy: Policy,
    config: &'t RunConfig,
    rng: ChaCha8Rng,
    metrics: RunMetrics,
    logs: Vec<Vec<LedgerEvent>>,
    /// Premises settled by a probe or by the expert in the current basis.
    resolved: BTreeSet<usize>,
    suppressed: BTreeSet<usize>,
    committed_s1: BTreeSet<usize>,
}

impl Trial<'_> {
    fn run_session(&mut self, s: &mut Session, fresh: bool) -> Result<()> {
        s.call(Role::Expert, Request::OpenSession {})?;
        if fresh {
            let threshold = if self.policy == Policy::AnswerCentric { 0.0 } else { 1.0 };
            for p in &self.task.premises {
                let reply = s.call(
                    Role::Assistant,
                    Request::CreatePremise {
                        axis: p.axis,
                        statement: p.statement.clone(),
                        evidence_threshold: threshold,
                        stakes: p.stakes,
                        predecessor: None,
                    },
                )?;
                let Reply::Premise(premise) = reply else { return Err(unexpected(reply)) };
                s.premises.push(premise.id);
                let reply = s.call(
                    Role::Assistant,
                    Request::RegisterProbe {
                        premise: premise.id,
                        description: format!("check {}", p.statement),
                        discrimination: p.discrimination,
                        cost: p.cost,
                    },
                )?;
                let Reply::Probe(probe) = reply else { return Err(unexpected(reply)) };
                s.probes.push(probe.id);
            }
        }
        let suffix = if s.session == 0 { "" } else { " (follow-up)" };
        let primary = self.propose(s, &self.task.primary.description, self.task.primary.utility, suffix)?;
        let alternative =
            self.propose(s, &self.task.alternative.description, self.task.alternative.utility, suffix)?;
        for &p in &s.premises.clone() {
            s.call(Role::Assistant, Request::AddLink { from: p.into(), to: primary.into(), kind: LinkKind::Supports })?;
        }

        let choice = match self.policy {
            Policy::AnswerCentric => self.answer_centric(s, primary)?,
            _ => self.governed(s, primary, alternative)?,
        };
        if choice != self.task.correct() {
            self.metrics.correct = false;
        }
        if s.session == 0 && choice == Choice::Primary {
            self.committed_s1 = (0..s.premises.len()).collect();
        } else if s.session == 0 {
            let statuses = self.statuses(s, primary)?;
            self.committed_s1 = (0..s.premises.len())
                .filter(|&i| !statuses.iter().any(|(p, _)| s.index_of(*p) == i))
                .collect();
        }
        s.call(Role::Expert, Request::CloseSession {})?;
        Ok(())
    }

    fn propose(&self, s: &mut Session, description: &str, utility: f64, suffix: &str) -> Result<ActionId> {
        let reply = s.call(
            Role::Assistant,
            Request::ProposeAction { description: format!("{description}{suffix}"), utility, consequential: true },
        )?;
        let Reply::Action(a) = reply else { return Err(unexpected(reply)) };
        Ok(a.id)
    }

    /// Non-committed load-bearing premises of `action`, with status.
    fn statuses(&self, s: &mut Session, action: ActionId) -> Result<Vec<(PremiseId, PremiseStatus)>> {
        let reply = s.call(Role::Assistant, Request::Gate { action, intent: GateIntent::Check })?;
        let Reply::Gate(g) = reply else { return Err(unexpected(reply)) };
        Ok(g.blocking_premises.iter().map(|b| (b.premise, b.status)).collect())
    }

    fn answer_centric(&mut self, s: &mut Session, primary: ActionId) -> Result<Choice> {
        for &p in &s.premises.clone() {
            s.call(Role::Assistant, Request::ProposeTransition { premise: p, to: PremiseStatus::Committed })?;
        }
        self.commit(s, primary, Choice::Primary)
    }

    fn governed(&mut self, s: &mut Session, primary: ActionId, alternative: ActionId) -> Result<Choice> {
        for _ in 0..self.config.max_steps {
            let blocking = self.statuses(s, primary)?;
            if blocking.iter().any(|(_, st)| *st == PremiseStatus::Rejected) {
                return self.commit(s, alternative, Choice::Alternative);
            }
            let open: BTreeSet<PremiseId> = blocking.iter().map(|(p, _)| *p).collect();
            let probes: Vec<ProbeId> = s
                .probes
                .iter()
                .zip(&s.premises)
                .filter(|(q, p)| open.contains(p) && !s.used.contains(q))
                .map(|(q, _)| *q)
                .collect();
            let reply = s.call(Role::Assistant, Request::Decide { action: primary, probes: Some(probes) })?;
            let Reply::Decision(d) = reply else { return Err(unexpected(reply)) };
            match d.action {
                EpistemicAction::Commit => return self.commit(s, primary, Choice::Primary),
                EpistemicAction::Probe => {
                    let probe = d.chosen_probe.as_ref().and_then(|o| o.probe.as_ref()).and_then(|p| p.probe);
                    let Some(q) = probe else {
                        return Err(Error::BadRequest("probe decision without a registered probe".into()));
                    };
                    self.metrics.steps_to_commit += 1;
                    self.run_probe(s, q)?;
                }
                EpistemicAction::Escalate | EpistemicAction::Defer => {
                    self.metrics.steps_to_commit += 1;
                    match blocking.first() {
                        Some(&(p, _)) => self.adjudicate(s, p)?,
                        None => return self.commit(s, primary, Choice::Primary),
                    }
                }
            }
        }
        if self.statuses(s, primary)?.is_empty() {
            return self.commit(s, primary, Choice::Primary);
        }
        self.override_commit(s, primary)
    }

    fn run_probe(&mut self, s: &mut Session, q: ProbeId) -> Result<()> {
        let i = s.probes.iter().position(|&x| x == q).expect("probe belongs to this task");
        let passed = self.task.sample(i, &mut self.rng);
        s.used.insert(q);
        self.metrics.probes_run += 1;
        s.call(Role::Expert, Request::RecordProbeResult { probe: q, passed, weight: 1.0 })?;
        if !passed && self.policy == Policy::Sycophantic {
            // the conflict is smoothed over: the expert's opening view wins
            for _ in 0..2 {
                s.call(
                    Role::Assistant,
                    Request::AttachEvidence {
                        premise: s.premises[i],
                        payload: "expert's initial position stands".into(),
                        direction: Direction::Supports,
                        weight: 1.0,
                        source: EvidenceSource::ExpertAssertion,
                    },
                )?;
            }
            return self.settle(s, i, true, true);
        }
        self.settle(s, i, passed, false)
    }

    fn adjudicate(&mut self, s: &mut Session, p: PremiseId) -> Result<()> {
        let i = s.index_of(p);
        let holds = self.task.sample(i, &mut self.rng);
        s.call(
            Role::Expert,
            Request::AttachEvidence {
                premise: p,
                payload: if holds { "expert confirms".into() } else { "expert disputes".into() },
                direction: if holds { Direction::Supports } else { Direction::Refutes },
                weight: 1.0,
                source: EvidenceSource::ExpertAssertion,
            },
        )?;
        self.settle(s, i, holds, false)
    }

    fn settle(&mut self, s: &mut Session, i: usize, holds: bool, suppressed: bool) -> Result<()> {
        if s.session == 1 && self.committed_s1.contains(&i) {
            self.metrics.relitigated_premises += 1;
        }
        self.resolved.insert(i);
        if suppressed {
            self.suppressed.insert(i);
        }
        let to = if holds { PremiseStatus::Committed } else { PremiseStatus::Rejected };
        let reply = s.call(Role::Expert, Request::ProposeTransition { premise: s.premises[i], to })?;
        match reply {
            Reply::Transition(t) if t.result.is_applied() => Ok(()),
            other => Err(unexpected(other)),
        }
    }

    fn score_primary(&mut self, s: &Session, overridden: bool) {
        let unsettled_false =
            (0..s.premises.len()).any(|i| !self.task.is_true(i) && !self.resolved.contains(&i));
        let any_false = (0..s.premises.len()).any(|i| !self.task.is_true(i));
        if overridden {
            if any_false {
                self.metrics.inappropriate_overrides += 1;
            }
        } else if unsettled_false {
            self.metrics.inappropriate_commits += 1;
        }
        if !self.suppressed.is_empty() {
            self.metrics.suppressed_conflict_commits += 1;
        }
    }

    fn commit(&mut self, s: &mut Session, action: ActionId, choice: Choice) -> Result<Choice> {
        self.metrics.steps_to_commit += 1;
        s.call(Role::Assistant, Request::CommitAction { action })?;
        if choice == Choice::Primary {
            self.score_primary(s, false);
        }
        Ok(choice)
    }

    fn override_commit(&mut self, s: &mut Session, action: ActionId) -> Result<Choice> {
        self.metrics.steps_to_commit += 1;
        s.call(
            Role::Expert,
            Request::OverrideCommit { action, risk_note: "step budget exhausted; expert accepts the risk".into() },
        )?;
        self.score_primary(s, true);
        Ok(Choice::Primary)
    }
}
