//! Append-only, hash-chained provenance ledger.
//!
//! Every state change in a basis is an [`Event`]. Events are sealed into
//! [`LedgerEvent`]s whose hash covers the canonical serialization of the
//! event and the previous hash, so any edit to history is detectable by
//! [`verify_chain`]. The basis itself is nothing but the fold of the log
//! (see [`crate::Basis::replay`]).

mod event;
mod store;

pub use event::{canonical_bytes, Digest, Event, EventDraft, LedgerEvent};
pub use store::{FileStore, EVENTS_FILE, HEAD_FILE, SNAPSHOT_FILE};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Outcome of a chain verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ChainStatus {
    Valid,
    Broken { index: u64 },
}

impl ChainStatus {
    pub fn is_valid(self) -> bool {
        matches!(self, ChainStatus::Valid)
    }
}

/// Recomputes every hash and reports the first mismatch.
pub fn verify_chain(events: &[LedgerEvent]) -> ChainStatus {
    let mut prev = Digest::ZERO;
    for (k, ev) in events.iter().enumerate() {
        let k = k as u64;
        if ev.index != k || ev.prev_hash != prev || ev.computed_hash() != ev.hash {
            return ChainStatus::Broken { index: k };
        }
        prev = ev.hash;
    }
    ChainStatus::Valid
}

/// Verifies raw `events.jsonl` content. Besides the hash chain, each line
/// must be byte-identical to its canonical re-serialization, so any single
/// byte change is caught at the line where it happened.
pub fn verify_bytes(bytes: &[u8]) -> ChainStatus {
    let mut prev = Digest::ZERO;
    for (k, line) in split_lines(bytes).enumerate() {
        let k = k as u64;
        let Ok(ev) = LedgerEvent::from_line(line) else {
            return ChainStatus::Broken { index: k };
        };
        if ev.to_line() != line
            || ev.index != k
            || ev.prev_hash != prev
            || ev.computed_hash() != ev.hash
        {
            return ChainStatus::Broken { index: k };
        }
        prev = ev.hash;
    }
    ChainStatus::Valid
}

/// Parses `events.jsonl` content into events, failing on the first bad line.
pub fn parse_log(bytes: &[u8]) -> Result<Vec<LedgerEvent>> {
    split_lines(bytes)
        .enumerate()
        .map(|(k, line)| {
            LedgerEvent::from_line(line).map_err(|e| match e {
                crate::Error::UnknownEventKind(_) => e,
                _ => crate::Error::ChainBroken(k as u64),
            })
        })
        .collect()
}

/// Serializes events in `events.jsonl` form.
pub fn write_log(events: &[LedgerEvent]) -> Vec<u8> {
    let mut out = Vec::new();
    for ev in events {
        out.extend_from_slice(&ev.to_line());
        out.push(b'\n');
    }
    out
}

fn split_lines(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    body.split(|&b| b == b'\n').filter(move |_| !bytes.is_empty())
}

/// The in-process log, optionally mirrored to disk.
#[derive(Debug, Default)]
pub struct Ledger {
    events: Vec<LedgerEvent>,
    store: Option<FileStore>,
}

impl Ledger {
    pub fn in_memory() -> Ledger {
        Ledger::default()
    }

    pub(crate) fn from_parts(events: Vec<LedgerEvent>, store: Option<FileStore>) -> Ledger {
        Ledger { events, store }
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn next_index(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn head(&self) -> Digest {
        self.events.last().map(|e| e.hash).unwrap_or(Digest::ZERO)
    }

    pub fn store(&self) -> Option<&FileStore> {
        self.store.as_ref()
    }

    /// Events with index strictly greater than `since`; all events when
    /// `since` is `None`.
    pub fn since(&self, since: Option<u64>) -> &[LedgerEvent] {
        match since {
            None => &self.events,
            Some(n) => {
                let start = (n as usize).saturating_add(1).min(self.events.len());
                &self.events[start..]
            }
        }
    }

    /// Seals the draft onto the chain. When a store is attached the event is
    /// durably written before this returns; on a storage failure nothing is
    /// appended.
    pub fn append(&mut self, draft: EventDraft) -> Result<&LedgerEvent> {
        let sealed = LedgerEvent::seal(self.next_index(), self.head(), draft);
        if let Some(store) = self.store.as_mut() {
            store.append(&sealed)?;
        }
        self.events.push(sealed);
        Ok(self.events.last().expect("just pushed"))
    }
}
