//! The single-writer engine: validates operations against the current
//! snapshot, appends events to the ledger, and folds them into the basis.
//!
//! Operations are implemented next to the module that owns their rules
//! (`lifecycle`, `graph`, `discrepancy`, `slice`, `policy`); this file holds
//! the shared plumbing.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::ids::{ObjectId, SessionId};
use crate::ledger::{EventDraft, Event, FileStore, Ledger, LedgerEvent};
use crate::model::{EvidenceRecord, Role};

/// Who is acting, in which session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctx {
    pub actor: String,
    pub role: Role,
    pub session: SessionId,
}

impl Ctx {
    pub fn new(actor: impl Into<String>, role: Role, session: SessionId) -> Ctx {
        Ctx { actor: actor.into(), role, session }
    }

    pub fn is_expert(&self) -> bool {
        self.role == Role::Expert
    }
}

/// Source of event timestamps (milliseconds). Timestamps are recorded but
/// never consulted by replay.
pub trait Clock: Send + Sync {
    fn now_millis(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_millis(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Deterministic clock: `start`, `start + step`, `start + 2*step`, ...
#[derive(Debug)]
pub struct StepClock {
    next: AtomicU64,
    step: u64,
}

impl StepClock {
    pub fn new(start: u64, step: u64) -> StepClock {
        StepClock { next: AtomicU64::new(start), step }
    }
}

impl Clock for StepClock {
    fn now_millis(&self) -> u64 {
        self.next.fetch_add(self.step, Ordering::Relaxed)
    }
}

/// Answer to "why did we decide X?": every event touching the object, in
/// log order, plus the evidence it rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceChain {
    pub object: ObjectId,
    pub events: Vec<LedgerEvent>,
    pub evidence: Vec<EvidenceRecord>,
}

pub struct Engine {
    basis: Basis,
    ledger: Ledger,
    clock: Box<dyn Clock>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("events", &self.ledger.len())
            .field("store", &self.ledger.store().map(|s| s.dir().to_path_buf()))
            .finish()
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::in_memory()
    }
}

impl Engine {
    pub fn in_memory() -> Engine {
        Engine::with_clock(Box::new(SystemClock))
    }

    pub fn with_clock(clock: Box<dyn Clock>) -> Engine {
        Engine { basis: Basis::new(), ledger: Ledger::in_memory(), clock }
    }

    /// New, empty basis persisted under `dir`.
    pub fn create(dir: impl AsRef<Path>, clock: Box<dyn Clock>) -> Result<Engine> {
        let store = FileStore::create(dir)?;
        Ok(Engine { basis: Basis::new(), ledger: Ledger::from_parts(Vec::new(), Some(store)), clock })
    }

    /// Reopens a persisted basis, replaying its log (from the snapshot
    /// cache when one is valid).
    pub fn open(dir: impl AsRef<Path>, clock: Box<dyn Clock>) -> Result<Engine> {
        let recovered = FileStore::open(dir)?;
        let basis = match recovered.snapshot {
            Some((index, mut basis)) => {
                for ev in &recovered.events[index as usize + 1..] {
                    basis.apply(ev)?;
                }
                basis
            }
            None => Basis::replay(&recovered.events)?,
        };
        Ok(Engine {
            basis,
            ledger: Ledger::from_parts(recovered.events, Some(recovered.store)),
            clock,
        })
    }

    /// In-memory engine rebuilt from an existing log.
    pub fn from_events(events: Vec<LedgerEvent>, clock: Box<dyn Clock>) -> Result<Engine> {
        let basis = Basis::replay(&events)?;
        Ok(Engine { basis, ledger: Ledger::from_parts(events, None), clock })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn events(&self) -> &[LedgerEvent] {
        self.ledger.events()
    }

    /// Index of the most recently appended event.
    pub fn last_index(&self) -> Option<u64> {
        self.ledger.next_index().checked_sub(1)
    }

    /// Writes the replay cache for a persisted basis.
    pub fn write_snapshot(&self) -> Result<()> {
        match (self.ledger.store(), self.ledger.events().last()) {
            (Some(store), Some(last)) => store.write_snapshot(last.index, last.hash, &self.basis),
            _ => Ok(()),
        }
    }

    pub(crate) fn now(&self) -> u64 {
        self.clock.now_millis()
    }

    /// Appends one event and folds it in. Returns the event index.
    pub(crate) fn emit(&mut self, ctx: &Ctx, event: Event) -> Result<u64> {
        let timestamp = self.now();
        self.emit_at(ctx, event, timestamp)
    }

    pub(crate) fn emit_at(&mut self, ctx: &Ctx, event: Event, timestamp: u64) -> Result<u64> {
        let draft = EventDraft { event, actor: ctx.actor.clone(), session: ctx.session, timestamp };
        let sealed = self.ledger.append(draft)?;
        let index = sealed.index;
        self.basis.apply(sealed)?;
        Ok(index)
    }

    pub(crate) fn check_session(&self, ctx: &Ctx) -> Result<()> {
        match self.basis.session(ctx.session) {
            Some(s) if s.open => Ok(()),
            _ => Err(Error::SessionNotOpen(Some(ctx.session))),
        }
    }

    pub(crate) fn require_expert(ctx: &Ctx) -> Result<()> {
        if ctx.is_expert() {
            Ok(())
        } else {
            Err(Error::NonExpertActor { actor: ctx.actor.clone() })
        }
    }

    /// Opens a session for `actor` and returns a context bound to it.
    pub fn open_session(&mut self, actor: impl Into<String>, role: Role) -> Result<Ctx> {
        let actor = actor.into();
        let session = self.basis.next_session_id();
        let ctx = Ctx { actor: actor.clone(), role, session };
        self.emit(&ctx, Event::SessionOpened { session, actor, role })?;
        Ok(ctx)
    }

    pub fn close_session(&mut self, ctx: &Ctx) -> Result<u64> {
        self.check_session(ctx)?;
        self.emit(ctx, Event::SessionClosed { session: ctx.session })
    }

    /// Provenance query: the ordered sub-log touching `object`, plus the
    /// evidence records involved.
    pub fn why(&self, object: ObjectId) -> Result<ProvenanceChain> {
        why(&self.basis, self.ledger.events(), object)
    }
}

pub fn why(basis: &Basis, events: &[LedgerEvent], object: ObjectId) -> Result<ProvenanceChain> {
    if !basis.contains(object) {
        return Err(Error::UnknownObject(object));
    }
    let chain: Vec<LedgerEvent> =
        events.iter().filter(|e| e.event.touches().contains(&object)).cloned().collect();
    let mut evidence_ids: Vec<_> = chain
        .iter()
        .flat_map(|e| e.event.touches())
        .filter_map(|id| match id {
            ObjectId::EvidenceId(e) => Some(e),
            _ => None,
        })
        .collect();
    if let ObjectId::PremiseId(p) = object {
        evidence_ids.extend(basis.premise(p)?.evidence_ids.iter().copied());
    }
    evidence_ids.sort();
    evidence_ids.dedup();
    let evidence =
        evidence_ids.into_iter().filter_map(|id| basis.evidence(id).ok().cloned()).collect();
    Ok(ProvenanceChain { object, events: chain, evidence })
}
