//! Request/response surface shared by the HTTP service and the CLI.
//!
//! A request is a JSON object whose `op` field names the operation; the
//! remaining fields are its arguments plus an optional envelope (`actor`,
//! `token`/`role`, `session`, `idempotency_key`). Every mutation reports
//! the index of the last event it appended.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::discrepancy::{self, ChallengeOutcome, ObservationOutcome, ProbeSpec, RepairKind};
use crate::engine::{Ctx, Engine, ProvenanceChain};
use crate::error::Error;
use crate::graph::{self, CommitOutcome, GateIntent, GateResult, LoadBearing};
use crate::ids::{ActionId, DiscrepancyId, EvidenceId, FrameworkId, ObjectId, PremiseId, ProbeId, SessionId};
use crate::ledger::{verify_chain, ChainStatus, Digest, LedgerEvent};
use crate::lifecycle::{self, AttachOutcome, NewEvidence, NewPremise, TransitionOutcome};
use crate::model::{
    Axis, DependencyLink, Direction, EvidenceRecord, EvidenceSource, Expectation, FrameworkKind,
    FrameworkObject, LinkKind, PendingAction, Predicate, Premise, PremiseStatus, Probe, Role, Stakes,
};
use crate::policy::{self, EpistemicDecision, PolicyConfig, VoiScore};
use crate::slice::{DecisionSlice, SliceBudget};

/// Every operation the gateway exposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    /// Opens a session for the envelope's actor, in the envelope's role.
    OpenSession {},
    CloseSession {},
    ReviseFramework {
        #[serde(default)]
        id: Option<FrameworkId>,
        kind: FrameworkKind,
        statement: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    CreatePremise {
        axis: Axis,
        statement: String,
        evidence_threshold: f64,
        stakes: Stakes,
        #[serde(default)]
        predecessor: Option<PremiseId>,
    },
    ListPremises {},
    ScoreEvidence { premise: PremiseId },
    ReviseCredence { premise: PremiseId, credence: f64 },
    AttachEvidence {
        premise: PremiseId,
        payload: String,
        direction: Direction,
        weight: f64,
        #[serde(default = "default_source")]
        source: EvidenceSource,
    },
    ProposeTransition { premise: PremiseId, to: PremiseStatus },
    ProposeAction { description: String, utility: f64, consequential: bool },
    WithdrawAction { action: ActionId },
    AddExpectation { premise: PremiseId, variable: String, predicate: Predicate },
    AddLink { from: ObjectId, to: ObjectId, #[serde(default = "default_link_kind")] kind: LinkKind },
    LoadBearing { action: ActionId },
    Gate { action: ActionId, #[serde(default = "default_intent")] intent: GateIntent },
    CommitAction { action: ActionId },
    OverrideCommit { action: ActionId, risk_note: String },
    IngestObservation { variable: String, value: f64, #[serde(default)] anomalous: bool },
    LinkDiscrepancy { discrepancy: DiscrepancyId, violated_object: ObjectId },
    TypeDiscrepancy { discrepancy: DiscrepancyId },
    Route { discrepancy: DiscrepancyId },
    ResolveDiscrepancy { discrepancy: DiscrepancyId, evidence: EvidenceId },
    Challenge { premise: PremiseId, rationale: String },
    RegisterProbe { premise: PremiseId, description: String, discrimination: f64, cost: f64 },
    RecordProbeResult { probe: ProbeId, passed: bool, weight: f64 },
    CompileSlice { action: ActionId, #[serde(default)] max_items: Option<usize> },
    Recommend { #[serde(default)] candidates: Option<Vec<ActionId>> },
    Sensitivity { premise: PremiseId, #[serde(default)] candidates: Option<Vec<ActionId>> },
    Voi {
        premise: PremiseId,
        discrimination: f64,
        cost: f64,
        #[serde(default)]
        candidates: Option<Vec<ActionId>>,
    },
    Decide { action: ActionId, #[serde(default)] probes: Option<Vec<ProbeId>> },
    Why { object: ObjectId },
    Events { #[serde(default)] since: Option<u64> },
    VerifyChain {},
    Replay {},
    Snapshot {},
}

fn default_source() -> EvidenceSource {
    EvidenceSource::Observation
}
fn default_link_kind() -> LinkKind {
    LinkKind::Supports
}
fn default_intent() -> GateIntent {
    GateIntent::Check
}

impl Request {
    /// Wire names of all operations, in declaration order.
    pub const OPS: &'static [&'static str] = &[
        "open_session",
        "close_session",
        "revise_framework",
        "create_premise",
        "list_premises",
        "score_evidence",
        "revise_credence",
        "attach_evidence",
        "propose_transition",
        "propose_action",
        "withdraw_action",
        "add_expectation",
        "add_link",
        "load_bearing",
        "gate",
        "commit_action",
        "override_commit",
        "ingest_observation",
        "link_discrepancy",
        "type_discrepancy",
        "route",
        "resolve_discrepancy",
        "challenge",
        "register_probe",
        "record_probe_result",
        "compile_slice",
        "recommend",
        "sensitivity",
        "voi",
        "decide",
        "why",
        "events",
        "verify_chain",
        "replay",
        "snapshot",
    ];

    pub fn op(&self) -> &'static str {
        use Request::*;
        match self {
            OpenSession {} => "open_session",
            CloseSession {} => "close_session",
            ReviseFramework { .. } => "revise_framework",
            CreatePremise { .. } => "create_premise",
            ListPremises {} => "list_premises",
            ScoreEvidence { .. } => "score_evidence",
            ReviseCredence { .. } => "revise_credence",
            AttachEvidence { .. } => "attach_evidence",
            ProposeTransition { .. } => "propose_transition",
            ProposeAction { .. } => "propose_action",
            WithdrawAction { .. } => "withdraw_action",
            AddExpectation { .. } => "add_expectation",
            AddLink { .. } => "add_link",
            LoadBearing { .. } => "load_bearing",
            Gate { .. } => "gate",
            CommitAction { .. } => "commit_action",
            OverrideCommit { .. } => "override_commit",
            IngestObservation { .. } => "ingest_observation",
            LinkDiscrepancy { .. } => "link_discrepancy",
            TypeDiscrepancy { .. } => "type_discrepancy",
            Route { .. } => "route",
            ResolveDiscrepancy { .. } => "resolve_discrepancy",
            Challenge { .. } => "challenge",
            RegisterProbe { .. } => "register_probe",
            RecordProbeResult { .. } => "record_probe_result",
            CompileSlice { .. } => "compile_slice",
            Recommend { .. } => "recommend",
            Sensitivity { .. } => "sensitivity",
            Voi { .. } => "voi",
            Decide { .. } => "decide",
            Why { .. } => "why",
            Events { .. } => "events",
            VerifyChain {} => "verify_chain",
            Replay {} => "replay",
            Snapshot {} => "snapshot",
        }
    }

    /// Whether the operation appends to the ledger.
    pub fn is_mutation(&self) -> bool {
        use Request::*;
        !matches!(
            self,
            ListPremises {}
                | ScoreEvidence { .. }
                | LoadBearing { .. }
                | Route { .. }
                | Recommend { .. }
                | Sensitivity { .. }
                | Voi { .. }
                | Why { .. }
                | Events { .. }
                | VerifyChain {}
                | Replay {}
                | Snapshot {}
        )
    }
}

/// A request plus who is making it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    /// Honoured only when the gateway runs in trusted mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    /// Defaults to the most recently opened session that is still open.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    #[serde(flatten)]
    pub request: Request,
}

impl Envelope {
    pub fn new(request: Request) -> Envelope {
        Envelope { actor: None, role: None, token: None, session: None, idempotency_key: None, request }
    }

    pub fn actor(mut self, actor: impl Into<String>) -> Envelope {
        self.actor = Some(actor.into());
        self
    }

    pub fn role(mut self, role: Role) -> Envelope {
        self.role = Some(role);
        self
    }

    pub fn token(mut self, token: impl Into<String>) -> Envelope {
        self.token = Some(token.into());
        self
    }

    pub fn key(mut self, key: impl Into<String>) -> Envelope {
        self.idempotency_key = Some(key.into());
        self
    }
}

/// How the expert role is established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthMode {
    /// The envelope's `role` is believed. For local, single-user use.
    Trusted,
    /// Expert role requires this static token.
    Token(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub auth: AuthMode,
    pub policy: PolicyConfig,
    pub slice: SliceBudget,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { auth: AuthMode::Trusted, policy: PolicyConfig::default(), slice: SliceBudget::default() }
    }
}

/// Error as seen by clients: a stable code from [`crate::ERROR_CODES`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocking_objects: Vec<ObjectId>,
    /// Set when the failed request still appended events (for example the
    /// gate check logged before an `override-required` refusal).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_index: Option<u64>,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> ApiError {
        ApiError { code: code.to_string(), message: message.into(), blocking_objects: Vec::new(), event_index: None }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        ApiError {
            code: err.code().to_string(),
            message: err.to_string(),
            blocking_objects: err.blocking_objects(),
            event_index: None,
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionInfo {
    pub session: SessionId,
    pub actor: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub status: ChainStatus,
    pub events: u64,
    pub head: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    /// Replayed snapshot equals the live one byte for byte.
    pub consistent: bool,
    pub events: u64,
    pub head: Digest,
}

/// Typed result of each operation; serialized without a tag.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Reply {
    Session(SessionInfo),
    SessionClosed { session: SessionId },
    Framework(FrameworkObject),
    Premise(Premise),
    Premises(Vec<Premise>),
    Score { premise: PremiseId, score: f64, threshold: f64 },
    Credence { premise: PremiseId, credence: f64 },
    Evidence(AttachOutcome),
    Transition(TransitionOutcome),
    Action(PendingAction),
    Withdrawn { action: ActionId },
    Expectation(Expectation),
    Link(DependencyLink),
    LoadBearing { action: ActionId, premises: Vec<LoadBearing> },
    Gate(GateResult),
    Commit(CommitOutcome),
    Observation(ObservationOutcome),
    Discrepancy(discrepancy::Discrepancy),
    Typed { discrepancy: DiscrepancyId, axis: Axis },
    Route { discrepancy: DiscrepancyId, axis: Axis, kind: RepairKind },
    Challenge(ChallengeOutcome),
    Probe(Probe),
    ProbeResult(EvidenceRecord),
    Slice(DecisionSlice),
    Recommendation { candidates: Vec<ActionId>, action: Option<ActionId> },
    Sensitivity { premise: PremiseId, sensitive: bool },
    Voi(VoiScore),
    Decision(EpistemicDecision),
    Provenance(ProvenanceChain),
    Events { events: Vec<LedgerEvent> },
    Chain(ChainReport),
    Replay(ReplayReport),
    Snapshot(Box<Basis>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Response {
    /// Index of the last event this request appended.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_index: Option<u64>,
    pub result: Reply,
}

const IDEMPOTENCY_CAPACITY: usize = 4096;

/// Single-writer front door to one basis.
#[derive(Debug)]
pub struct Gateway {
    engine: Engine,
    config: GatewayConfig,
    seen: HashMap<String, (Envelope, std::result::Result<Response, ApiError>)>,
    seen_order: VecDeque<String>,
}

impl Gateway {
    pub fn new(engine: Engine, config: GatewayConfig) -> Gateway {
        Gateway { engine, config, seen: HashMap::new(), seen_order: VecDeque::new() }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn into_engine(self) -> Engine {
        self.engine
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Handles one request. A repeated idempotency key with an identical
    /// request returns the recorded outcome without touching the ledger.
    pub fn handle(&mut self, env: Envelope) -> std::result::Result<Response, ApiError> {
        let key = env.idempotency_key.clone().filter(|_| env.request.is_mutation());
        if let Some(k) = &key {
            if let Some((prior, outcome)) = self.seen.get(k) {
                if prior.request != env.request {
                    return Err(ApiError::new(
                        "bad-request",
                        format!("idempotency key `{k}` was already used for a different request"),
                    ));
                }
                return outcome.clone();
            }
        }
        let before = self.engine.last_index();
        let outcome = self.dispatch(&env).map_err(ApiError::from);
        let after = self.engine.last_index();
        let appended = if after != before { after } else { None };
        let outcome = match outcome {
            Ok(result) => Ok(Response { event_index: appended, result }),
            Err(mut e) => {
                e.event_index = appended;
                Err(e)
            }
        };
        if let Some(k) = key {
            if self.seen_order.len() == IDEMPOTENCY_CAPACITY {
                if let Some(old) = self.seen_order.pop_front() {
                    self.seen.remove(&old);
                }
            }
            self.seen_order.push_back(k.clone());
            self.seen.insert(k, (env, outcome.clone()));
        }
        outcome
    }

    fn role(&self, env: &Envelope) -> Role {
        match &self.config.auth {
            AuthMode::Trusted => env.role.unwrap_or(Role::Assistant),
            AuthMode::Token(t) => {
                if env.token.as_deref() == Some(t.as_str()) {
                    Role::Expert
                } else {
                    Role::Assistant
                }
            }
        }
    }

    fn ctx(&self, env: &Envelope) -> crate::Result<Ctx> {
        let basis = self.engine.basis();
        let session = match env.session {
            Some(id) => basis.session(id).filter(|s| s.open).ok_or(Error::SessionNotOpen(Some(id)))?,
            None => basis.latest_open_session().ok_or(Error::SessionNotOpen(None))?,
        };
        let actor = env.actor.clone().unwrap_or_else(|| session.actor.clone());
        Ok(Ctx::new(actor, self.role(env), session.id))
    }

    fn candidates(&self, given: &Option<Vec<ActionId>>) -> Vec<ActionId> {
        given.clone().unwrap_or_else(|| policy::pending_candidates(self.engine.basis()))
    }

    fn dispatch(&mut self, env: &Envelope) -> crate::Result<Reply> {
        use Request as R;
        let policy = self.config.policy;
        // Reads first: they need no session.
        let basis = self.engine.basis();
        match &env.request {
            R::ListPremises {} => return Ok(Reply::Premises(basis.premises().cloned().collect())),
            R::ScoreEvidence { premise } => {
                return Ok(Reply::Score {
                    premise: *premise,
                    score: lifecycle::score_evidence(basis, *premise)?,
                    threshold: basis.premise(*premise)?.evidence_threshold,
                })
            }
            R::LoadBearing { action } => {
                return Ok(Reply::LoadBearing { action: *action, premises: graph::load_bearing(basis, *action)? })
            }
            R::Route { discrepancy } => {
                let kind = discrepancy::route(basis, *discrepancy)?;
                let axis = basis.discrepancy(*discrepancy)?.axis.ok_or(Error::UntypedDiscrepancy(*discrepancy))?;
                return Ok(Reply::Route { discrepancy: *discrepancy, axis, kind });
            }
            R::Recommend { candidates } => {
                let candidates = self.candidates(candidates);
                let action = policy::recommend(basis, &candidates, None)?;
                return Ok(Reply::Recommendation { candidates, action });
            }
            R::Sensitivity { premise, candidates } => {
                let candidates = self.candidates(candidates);
                let sensitive = policy::sensitivity(basis, *premise, &candidates)?;
                return Ok(Reply::Sensitivity { premise: *premise, sensitive });
            }
            R::Voi { premise, discrimination, cost, candidates } => {
                let candidates = self.candidates(candidates);
                let spec = ProbeSpec {
                    probe: None,
                    description: String::new(),
                    discrimination: *discrimination,
                    cost: *cost,
                };
                return Ok(Reply::Voi(policy::voi(basis, &spec, *premise, &candidates, &policy)?));
            }
            R::Why { object } => return Ok(Reply::Provenance(self.engine.why(*object)?)),
            R::Events { since } => {
                return Ok(Reply::Events { events: self.engine.ledger().since(*since).to_vec() })
            }
            R::VerifyChain {} => {
                return Ok(Reply::Chain(ChainReport {
                    status: verify_chain(self.engine.events()),
                    events: self.engine.events().len() as u64,
                    head: self.engine.ledger().head(),
                }))
            }
            R::Replay {} => {
                let replayed = Basis::replay(self.engine.events())?;
                return Ok(Reply::Replay(ReplayReport {
                    consistent: replayed.canonical() == basis.canonical(),
                    events: self.engine.events().len() as u64,
                    head: self.engine.ledger().head(),
                }));
            }
            R::Snapshot {} => return Ok(Reply::Snapshot(Box::new(basis.clone()))),
            R::OpenSession {} => {
                let actor = env
                    .actor
                    .clone()
                    .filter(|a| !a.trim().is_empty())
                    .ok_or_else(|| Error::BadRequest("open_session needs an actor".into()))?;
                if env.role == Some(Role::Expert) && self.role(env) != Role::Expert {
                    return Err(Error::NonExpertActor { actor });
                }
                let ctx = self.engine.open_session(actor, self.role(env))?;
                return Ok(Reply::Session(SessionInfo { session: ctx.session, actor: ctx.actor, role: ctx.role }));
            }
            _ => {}
        }

        let ctx = self.ctx(env)?;
        let e = &mut self.engine;
        Ok(match env.request.clone() {
            R::CloseSession {} => {
                e.close_session(&ctx)?;
                Reply::SessionClosed { session: ctx.session }
            }
            R::ReviseFramework { id, kind, statement, params } => {
                Reply::Framework(e.revise_framework(&ctx, id, kind, statement, params)?)
            }
            R::CreatePremise { axis, statement, evidence_threshold, stakes, predecessor } => Reply::Premise(
                e.create_premise(&ctx, NewPremise { axis, statement, evidence_threshold, stakes, predecessor })?,
            ),
            R::ReviseCredence { premise, credence } => {
                e.revise_credence(&ctx, premise, credence)?;
                Reply::Credence { premise, credence }
            }
            R::AttachEvidence { premise, payload, direction, weight, source } => Reply::Evidence(
                e.attach_evidence(&ctx, premise, NewEvidence { payload, direction, weight, source })?,
            ),
            R::ProposeTransition { premise, to } => Reply::Transition(e.propose_transition(&ctx, premise, to)?),
            R::ProposeAction { description, utility, consequential } => {
                Reply::Action(e.propose_action(&ctx, description, utility, consequential)?)
            }
            R::WithdrawAction { action } => {
                e.withdraw_action(&ctx, action)?;
                Reply::Withdrawn { action }
            }
            R::AddExpectation { premise, variable, predicate } => {
                Reply::Expectation(e.add_expectation(&ctx, premise, variable, predicate)?)
            }
            R::AddLink { from, to, kind } => Reply::Link(e.add_link(&ctx, from, to, kind)?),
            R::Gate { action, intent } => Reply::Gate(e.gate(&ctx, action, intent)?),
            R::CommitAction { action } => Reply::Commit(e.commit_action(&ctx, action)?),
            R::OverrideCommit { action, risk_note } => Reply::Commit(e.override_commit(&ctx, action, &risk_note)?),
            R::IngestObservation { variable, value, anomalous } => {
                Reply::Observation(e.ingest_observation(&ctx, &variable, value, anomalous)?)
            }
            R::LinkDiscrepancy { discrepancy, violated_object } => {
                Reply::Discrepancy(e.link_discrepancy(&ctx, discrepancy, violated_object)?)
            }
            R::TypeDiscrepancy { discrepancy } => {
                Reply::Typed { discrepancy, axis: e.type_discrepancy(&ctx, discrepancy)? }
            }
            R::ResolveDiscrepancy { discrepancy, evidence } => {
                Reply::Discrepancy(e.resolve_discrepancy(&ctx, discrepancy, evidence)?)
            }
            R::Challenge { premise, rationale } => Reply::Challenge(e.challenge(&ctx, premise, &rationale)?),
            R::RegisterProbe { premise, description, discrimination, cost } => {
                Reply::Probe(e.register_probe(&ctx, premise, description, discrimination, cost)?)
            }
            R::RecordProbeResult { probe, passed, weight } => {
                Reply::ProbeResult(e.record_probe_result(&ctx, probe, passed, weight)?)
            }
            R::CompileSlice { action, max_items } => {
                let budget = max_items.map_or(self.config.slice, |max_items| SliceBudget { max_items });
                Reply::Slice(e.compile_slice(&ctx, action, budget, &policy)?)
            }
            R::Decide { action, probes } => Reply::Decision(e.decide(&ctx, action, probes.as_deref(), &policy)?),
            other => unreachable!("read-only op {} handled above", other.op()),
        })
    }
}
