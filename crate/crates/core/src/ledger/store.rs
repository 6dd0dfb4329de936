//! On-disk layout for one basis:
//!
//! ```text
//! <dir>/events.jsonl   one canonical event per line, append-only
//! <dir>/head           hex of the last acknowledged hash, rewritten atomically
//! <dir>/snapshot.json  optional replay cache keyed by event index
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_log, verify_bytes, ChainStatus, Digest, LedgerEvent};
use crate::basis::Basis;
use crate::error::{Error, Result};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const HEAD_FILE: &str = "head";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    file: File,
    len: u64,
}

#[derive(Serialize, Deserialize)]
struct SnapshotCache {
    index: u64,
    hash: Digest,
    basis: Basis,
}

/// What [`FileStore::open`] recovered from disk.
#[derive(Debug)]
pub struct Recovered {
    pub store: FileStore,
    pub events: Vec<LedgerEvent>,
    /// A cached snapshot valid for the prefix `events[..=index]`.
    pub snapshot: Option<(u64, Basis)>,
}

impl FileStore {
    /// Creates an empty basis directory. Fails if it already holds events.
    pub fn create(dir: impl AsRef<Path>) -> Result<FileStore> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let events = dir.join(EVENTS_FILE);
        if events.exists() && fs::metadata(&events)?.len() > 0 {
            return Err(Error::Storage(format!("{} already holds a basis", dir.display())));
        }
        let file = OpenOptions::new().create(true).append(true).open(&events)?;
        let store = FileStore { dir, file, len: 0 };
        store.write_head(&Digest::ZERO)?;
        Ok(store)
    }

    /// Opens an existing basis directory, recovering from an interrupted
    /// append: a trailing partial line is dropped, and a tail the head file
    /// never acknowledged is kept only if it chains correctly. A head that
    /// matches no event means the log was truncated.
    pub fn open(dir: impl AsRef<Path>) -> Result<Recovered> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(EVENTS_FILE);
        if !path.exists() {
            return Err(Error::Storage(format!("no basis at {}", dir.display())));
        }
        let mut bytes = fs::read(&path)?;
        if let Some(last_nl) = bytes.iter().rposition(|&b| b == b'\n') {
            bytes.truncate(last_nl + 1);
        } else {
            bytes.clear();
        }
        if let ChainStatus::Broken { index } = verify_bytes(&bytes) {
            return Err(Error::ChainBroken(index));
        }
        let events = parse_log(&bytes)?;
        let file = OpenOptions::new().write(true).open(&path)?;
        file.set_len(bytes.len() as u64)?;
        drop(file);

        let head_path = dir.join(HEAD_FILE);
        let last = events.last().map(|e| e.hash).unwrap_or(Digest::ZERO);
        if head_path.exists() {
            let head = Digest::from_hex(&fs::read_to_string(&head_path)?)?;
            let known = head == Digest::ZERO || events.iter().any(|e| e.hash == head);
            if !known {
                return Err(Error::HeadMismatch(format!(
                    "head {head} matches no event; log truncated or replaced"
                )));
            }
        }

        let file = OpenOptions::new().append(true).open(&path)?;
        let store = FileStore { dir, file, len: bytes.len() as u64 };
        store.write_head(&last)?;
        let snapshot = store.read_snapshot(&events);
        Ok(Recovered { store, events, snapshot })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub(crate) fn append(&mut self, event: &LedgerEvent) -> Result<()> {
        let mut line = event.to_line();
        line.push(b'\n');
        let result = self.file.write_all(&line).and_then(|_| self.file.sync_data());
        if let Err(err) = result {
            // Roll back whatever part of the line made it out.
            let _ = self.file.set_len(self.len);
            return Err(err.into());
        }
        self.len += line.len() as u64;
        self.write_head(&event.hash)
    }

    fn write_head(&self, hash: &Digest) -> Result<()> {
        let tmp = self.dir.join(format!("{HEAD_FILE}.tmp"));
        fs::write(&tmp, hash.to_hex())?;
        fs::rename(&tmp, self.dir.join(HEAD_FILE))?;
        Ok(())
    }

    /// Caches `basis` as the state after event `index`.
    pub fn write_snapshot(&self, index: u64, hash: Digest, basis: &Basis) -> Result<()> {
        let cache = SnapshotCache { index, hash, basis: basis.clone() };
        let bytes = serde_json::to_vec(&cache).map_err(|e| Error::Storage(e.to_string()))?;
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    fn read_snapshot(&self, events: &[LedgerEvent]) -> Option<(u64, Basis)> {
        let bytes = fs::read(self.dir.join(SNAPSHOT_FILE)).ok()?;
        let cache: SnapshotCache = serde_json::from_slice(&bytes).ok()?;
        let ev = events.get(cache.index as usize)?;
        (ev.hash == cache.hash).then_some((cache.index, cache.basis))
    }
}
