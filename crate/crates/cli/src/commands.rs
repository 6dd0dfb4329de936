//! Command-line grammar and its mapping onto gateway requests.

use std::collections::BTreeMap;
use std::path::PathBuf;

use basis_core::gateway::Request;
use basis_core::harness::Policy;
use basis_core::{
    ActionId, Axis, DiscrepancyId, Direction, EvidenceId, EvidenceSource, FrameworkId, FrameworkKind, GateIntent,
    LinkKind, ObjectId, Predicate, PremiseId, PremiseStatus, ProbeId, Stakes,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "basis", version, about = "Keep a governed decision basis: premises, gates, discrepancies, audit log")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Basis directory
    #[arg(long, global = true, env = "BASIS_DIR")]
    pub dir: Option<PathBuf>,
    /// TOML config file
    #[arg(long, global = true, env = "BASIS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Actor recorded on events
    #[arg(long, global = true, env = "BASIS_ACTOR")]
    pub actor: Option<String>,
    /// Act in the expert role (trusted mode)
    #[arg(long, global = true)]
    pub expert: bool,
    /// Expert token (token mode)
    #[arg(long, global = true, env = "BASIS_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Session to act in; defaults to the latest open one
    #[arg(long, global = true)]
    pub session: Option<basis_core::SessionId>,
    /// Print machine-readable JSON
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty basis in --dir
    Init,
    #[command(subcommand)]
    Session(SessionCmd),
    #[command(subcommand)]
    Framework(FrameworkCmd),
    #[command(subcommand)]
    Premise(PremiseCmd),
    #[command(subcommand)]
    Action(ActionCmd),
    #[command(subcommand)]
    Expectation(ExpectationCmd),
    #[command(subcommand)]
    Evidence(EvidenceCmd),
    #[command(subcommand)]
    Probe(ProbeCmd),
    #[command(subcommand)]
    Link(LinkCmd),
    /// Record an observation and detect discrepancies
    Observe {
        variable: String,
        value: f64,
        #[arg(long)]
        anomalous: bool,
    },
    #[command(subcommand)]
    Discrepancy(DiscrepancyCmd),
    /// Challenge a premise
    Challenge { premise: PremiseId, rationale: String },
    /// Premises an action rests on
    LoadBearing { action: ActionId },
    /// Evaluate the commitment gate of an action
    Gate {
        action: ActionId,
        #[arg(long, default_value = "check")]
        intent: GateIntent,
    },
    /// Compile the decision slice for an action
    Slice {
        action: ActionId,
        #[arg(long)]
        max_items: Option<usize>,
    },
    /// Best candidate action under the current statuses
    Recommend {
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<ActionId>>,
    },
    /// Whether flipping a premise changes the recommendation
    Sensitivity {
        premise: PremiseId,
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<ActionId>>,
    },
    /// Value of information of a hypothetical probe
    Voi {
        premise: PremiseId,
        #[arg(long)]
        discrimination: f64,
        #[arg(long)]
        cost: f64,
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<ActionId>>,
    },
    /// Choose probe, defer, escalate or commit for an action
    Decide {
        action: ActionId,
        #[arg(long, value_delimiter = ',')]
        probes: Option<Vec<ProbeId>>,
    },
    /// Commit a blocked action under a logged risk note (expert only)
    Override {
        action: ActionId,
        #[arg(long)]
        risk_note: String,
    },
    #[command(subcommand)]
    Log(LogCmd),
    /// Write the snapshot cache and print the basis
    Snapshot,
    /// Run the negotiation harness
    Simulate(SimulateArgs),
    /// Serve the HTTP/JSON API
    Serve {
        /// Address to listen on
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SessionCmd {
    /// Open a session for --actor
    Open,
    Close,
}

#[derive(Debug, Subcommand)]
pub enum FrameworkCmd {
    /// Add a framework object, or revise one with --id
    Set {
        kind: FrameworkKind,
        statement: String,
        #[arg(long)]
        id: Option<FrameworkId>,
        /// key=value, repeatable
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PremiseCmd {
    Add {
        statement: String,
        #[arg(long)]
        axis: Axis,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long, default_value = "low")]
        stakes: Stakes,
        /// Rejected premise this one replaces
        #[arg(long)]
        predecessor: Option<PremiseId>,
    },
    List,
    /// Evidence score against the threshold
    Score { premise: PremiseId },
    Credence { premise: PremiseId, credence: f64 },
    /// Propose a status change
    Transition { premise: PremiseId, to: PremiseStatus },
    /// Provenance chain of any object
    Why { object: ObjectId },
}

#[derive(Debug, Subcommand)]
pub enum LinkCmd {
    /// Add a dependency link
    Add {
        from: ObjectId,
        to: ObjectId,
        #[arg(long, default_value = "supports")]
        kind: LinkKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum ActionCmd {
    /// Propose a pending action
    Add {
        description: String,
        #[arg(long)]
        utility: f64,
        /// Advisory actions may commit over a blocked gate
        #[arg(long)]
        advisory: bool,
    },
    Withdraw { action: ActionId },
    /// Commit through the gate
    Commit { action: ActionId },
}

#[derive(Debug, Subcommand)]
pub enum ExpectationCmd {
    /// Predicate: at-least:X, at-most:X, equals:X or in-range:LO:HI
    Add { premise: PremiseId, variable: String, predicate: Predicate },
}

#[derive(Debug, Subcommand)]
pub enum EvidenceCmd {
    Add {
        premise: PremiseId,
        payload: String,
        #[arg(long, default_value = "supports")]
        direction: Direction,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        #[arg(long, default_value = "observation")]
        source: EvidenceSource,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProbeCmd {
    Add {
        premise: PremiseId,
        description: String,
        #[arg(long)]
        discrimination: f64,
        #[arg(long)]
        cost: f64,
    },
    Result {
        probe: ProbeId,
        outcome: ProbeOutcome,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeOutcome {
    Passed,
    Failed,
}

#[derive(Debug, Subcommand)]
pub enum DiscrepancyCmd {
    /// Anchor a discrepancy to the object it violates
    Link { discrepancy: DiscrepancyId, object: ObjectId },
    /// Inherit the axis of the violated object
    Type { discrepancy: DiscrepancyId },
    /// Repair kind for a typed discrepancy
    Route { discrepancy: DiscrepancyId },
    Resolve { discrepancy: DiscrepancyId, evidence: EvidenceId },
}

#[derive(Debug, Subcommand)]
pub enum LogCmd {
    /// Check the hash chain
    Verify,
    /// Rebuild state from the log and compare with the live basis
    Replay,
    Events {
        #[arg(long)]
        since: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Experiment config (TOML)
    #[arg(long = "experiment")]
    pub experiment: Option<PathBuf>,
    /// Directory for summary.tsv and trials.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-trial event logs
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<Policy>>,
    #[arg(long)]
    pub sessions: Option<u8>,
    #[arg(long)]
    pub false_rate: Option<f64>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

impl Command {
    /// The gateway request this command sends, if it is a plain operation.
    pub fn request(&self) -> Option<Request> {
        use Command as C;
        use Request as R;
        let r = match self {
            C::Init | C::Simulate(_) | C::Serve { .. } => return None,
            C::Session(SessionCmd::Open) => R::OpenSession {},
            C::Session(SessionCmd::Close) => R::CloseSession {},
            C::Framework(FrameworkCmd::Set { kind, statement, id, params }) => R::ReviseFramework {
                id: *id,
                kind: *kind,
                statement: statement.clone(),
                params: params.iter().cloned().collect::<BTreeMap<_, _>>(),
            },
            C::Premise(p) => match p {
                PremiseCmd::Add { statement, axis, threshold, stakes, predecessor } => R::CreatePremise {
                    axis: *axis,
                    statement: statement.clone(),
                    evidence_threshold: *threshold,
                    stakes: *stakes,
                    predecessor: *predecessor,
                },
                PremiseCmd::List => R::ListPremises {},
                PremiseCmd::Score { premise } => R::ScoreEvidence { premise: *premise },
                PremiseCmd::Credence { premise, credence } => {
                    R::ReviseCredence { premise: *premise, credence: *credence }
                }
                PremiseCmd::Transition { premise, to } => R::ProposeTransition { premise: *premise, to: *to },
                PremiseCmd::Why { object } => R::Why { object: *object },
            },
            C::Action(a) => match a {
                ActionCmd::Add { description, utility, advisory } => R::ProposeAction {
                    description: description.clone(),
                    utility: *utility,
                    consequential: !advisory,
                },
                ActionCmd::Withdraw { action } => R::WithdrawAction { action: *action },
                ActionCmd::Commit { action } => R::CommitAction { action: *action },
            },
            C::Expectation(ExpectationCmd::Add { premise, variable, predicate }) => {
                R::AddExpectation { premise: *premise, variable: variable.clone(), predicate: *predicate }
            }
            C::Evidence(EvidenceCmd::Add { premise, payload, direction, weight, source }) => R::AttachEvidence {
                premise: *premise,
                payload: payload.clone(),
                direction: *direction,
                weight: *weight,
                source: *source,
            },
            C::Probe(ProbeCmd::Add { premise, description, discrimination, cost }) => R::RegisterProbe {
                premise: *premise,
                description: description.clone(),
                discrimination: *discrimination,
                cost: *cost,
            },
            C::Probe(ProbeCmd::Result { probe, outcome, weight }) => {
                R::RecordProbeResult { probe: *probe, passed: *outcome == ProbeOutcome::Passed, weight: *weight }
            }
            C::Link(LinkCmd::Add { from, to, kind }) => R::AddLink { from: *from, to: *to, kind: *kind },
            C::Observe { variable, value, anomalous } => {
                R::IngestObservation { variable: variable.clone(), value: *value, anomalous: *anomalous }
            }
            C::Discrepancy(d) => match d {
                DiscrepancyCmd::Link { discrepancy, object } => {
                    R::LinkDiscrepancy { discrepancy: *discrepancy, violated_object: *object }
                }
                DiscrepancyCmd::Type { discrepancy } => R::TypeDiscrepancy { discrepancy: *discrepancy },
                DiscrepancyCmd::Route { discrepancy } => R::Route { discrepancy: *discrepancy },
                DiscrepancyCmd::Resolve { discrepancy, evidence } => {
                    R::ResolveDiscrepancy { discrepancy: *discrepancy, evidence: *evidence }
                }
            },
            C::Challenge { premise, rationale } => R::Challenge { premise: *premise, rationale: rationale.clone() },
            C::LoadBearing { action } => R::LoadBearing { action: *action },
            C::Gate { action, intent } => R::Gate { action: *action, intent: *intent },
            C::Slice { action, max_items } => R::CompileSlice { action: *action, max_items: *max_items },
            C::Recommend { candidates } => R::Recommend { candidates: candidates.clone() },
            C::Sensitivity { premise, candidates } => {
                R::Sensitivity { premise: *premise, candidates: candidates.clone() }
            }
            C::Voi { premise, discrimination, cost, candidates } => R::Voi {
                premise: *premise,
                discrimination: *discrimination,
                cost: *cost,
                candidates: candidates.clone(),
            },
            C::Decide { action, probes } => R::Decide { action: *action, probes: probes.clone() },
            C::Override { action, risk_note } => R::OverrideCommit { action: *action, risk_note: risk_note.clone() },
            C::Log(LogCmd::Verify) => R::VerifyChain {},
            C::Log(LogCmd::Replay) => R::Replay {},
            C::Log(LogCmd::Events { since }) => R::Events { since: *since },
            C::Snapshot => R::Snapshot {},
        };
        Some(r)
    }
}
