//! One session per directory: `session.json` (checksummed canonical state),
//! `events.ndjson` (append-only log) and `exports/`. Writers hold an
//! exclusive `.lock` file.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::canonical::{self, sha256_hex};
use super::{EventRecord, Session, SessionState};

pub const FORMAT: &str = "empnet-session";
pub const VERSION: u32 = 1;
pub const STATE_FILE: &str = "session.json";
pub const EVENTS_FILE: &str = "events.ndjson";
pub const EXPORTS_DIR: &str = "exports";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no session at {0}")]
    NotFound(PathBuf),
    #[error("a session already exists at {0}")]
    Exists(PathBuf),
    #[error("session at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("corrupt session file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("unsupported session version {found} (expected {expected})")]
    Version { found: u64, expected: u32 },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: impl ToString) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), reason: reason.to_string() }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    checksum: String,
    format: String,
    state: Value,
    version: u64,
}

/// Exclusive writer lock; released on drop.
#[derive(Debug)]
pub struct SessionLock {
    path: PathBuf,
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Verifies and decodes the contents of `session.json`.
pub fn decode_state(bytes: &[u8]) -> Result<SessionState, StoreError> {
    let path = Path::new(STATE_FILE);
    let env: Envelope = serde_json::from_slice(bytes).map_err(|e| corrupt(path, e))?;
    if env.format != FORMAT {
        return Err(corrupt(path, format!("unknown format {:?}", env.format)));
    }
    if env.version != VERSION as u64 {
        return Err(StoreError::Version { found: env.version, expected: VERSION });
    }
    if sha256_hex(&canonical::value_bytes(&env.state)) != env.checksum {
        return Err(corrupt(path, "checksum mismatch"));
    }
    let state: SessionState = serde_json::from_value(env.state).map_err(|e| corrupt(path, e))?;
    state.check_shape().map_err(|e| corrupt(path, e))?;
    Ok(state)
}

/// Decodes one line of `events.ndjson`.
pub fn decode_event(line: &str) -> serde_json::Result<EventRecord> {
    serde_json::from_str(line)
}

/// Canonical bytes of a state, as written inside `session.json`.
pub fn state_bytes(state: &SessionState) -> Result<Vec<u8>, StoreError> {
    canonical::to_bytes(state).map_err(|e| corrupt(Path::new(STATE_FILE), e))
}

#[derive(Clone, Debug)]
pub struct SessionDir {
    root: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub phase: super::Phase,
    pub n: usize,
    pub m: usize,
    pub events: u64,
}

impl SessionDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn state_path(&self) -> PathBuf {
        self.root.join(STATE_FILE)
    }

    pub fn events_path(&self) -> PathBuf {
        self.root.join(EVENTS_FILE)
    }

    pub fn exports_dir(&self) -> PathBuf {
        self.root.join(EXPORTS_DIR)
    }

    pub fn exists(&self) -> bool {
        self.state_path().is_file()
    }

    pub fn lock(&self) -> Result<SessionLock, StoreError> {
        fs::create_dir_all(&self.root).map_err(io(&self.root))?;
        let path = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(SessionLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(StoreError::Locked(self.root.clone())),
            Err(e) => Err(StoreError::Io { path, source: e }),
        }
    }

    /// Writes a brand-new session; fails if one already exists here.
    pub fn create(&self, session: &mut Session, _lock: &SessionLock) -> Result<(), StoreError> {
        if self.exists() {
            return Err(StoreError::Exists(self.root.clone()));
        }
        fs::create_dir_all(self.exports_dir()).map_err(io(&self.root))?;
        File::create(self.events_path()).map_err(io(&self.events_path()))?;
        self.save(session, _lock)
    }

    /// Appends pending events, then atomically replaces `session.json`.
    pub fn save(&self, session: &mut Session, _lock: &SessionLock) -> Result<(), StoreError> {
        let events = self.events_path();
        let mut log = OpenOptions::new().create(true).append(true).open(&events).map_err(io(&events))?;
        for rec in session.take_pending() {
            let line = canonical::to_bytes(&rec).map_err(|e| corrupt(&events, e))?;
            log.write_all(&line).and_then(|_| log.write_all(b"\n")).map_err(io(&events))?;
        }
        log.sync_all().map_err(io(&events))?;

        let state = canonical::to_value(&session.state).map_err(|e| corrupt(&self.state_path(), e))?;
        let checksum = sha256_hex(&canonical::value_bytes(&state));
        let env = Envelope { checksum, format: FORMAT.into(), state, version: VERSION as u64 };
        let mut bytes = canonical::to_bytes(&env).map_err(|e| corrupt(&self.state_path(), e))?;
        bytes.push(b'\n');
        let tmp = self.root.join(format!("{STATE_FILE}.tmp"));
        fs::write(&tmp, &bytes).map_err(io(&tmp))?;
        fs::rename(&tmp, self.state_path()).map_err(io(&self.state_path()))
    }

    /// Reads and verifies `session.json`. No lock needed for reading.
    pub fn load(&self) -> Result<Session, StoreError> {
        let path = self.state_path();
        if !path.is_file() {
            return Err(StoreError::NotFound(self.root.clone()));
        }
        let bytes = fs::read(&path).map_err(io(&path))?;
        decode_state(&bytes).map(Session::from_state).map_err(|e| match e {
            StoreError::Corrupt { reason, .. } => corrupt(&path, reason),
            other => other,
        })
    }

    pub fn events(&self) -> Result<Vec<EventRecord>, StoreError> {
        let path = self.events_path();
        let f = File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StoreError::NotFound(self.root.clone()),
            _ => StoreError::Io { path: path.clone(), source: e },
        })?;
        let mut out = Vec::new();
        for (k, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(io(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(decode_event(&line).map_err(|e| corrupt(&path, format!("line {}: {e}", k + 1)))?);
        }
        Ok(out)
    }

    /// Rebuilds the state from the event log alone.
    pub fn replay(&self) -> Result<SessionState, StoreError> {
        let events = self.events()?;
        SessionState::replay(&events).map_err(|e| corrupt(&self.events_path(), e))
    }

    pub fn write_export(&self, name: &str, contents: &[u8]) -> Result<PathBuf, StoreError> {
        let dir = self.exports_dir();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io(&path))?;
        Ok(path)
    }
}

/// Sessions stored as subdirectories of one root, named by id.
#[derive(Clone, Debug)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Directory for `id`; ids are restricted to `[A-Za-z0-9_-]`.
    pub fn dir(&self, id: &str) -> Result<SessionDir, StoreError> {
        let ok = !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(StoreError::NotFound(self.root.join(id)));
        }
        Ok(SessionDir::new(self.root.join(id)))
    }

    pub fn list(&self) -> Result<Vec<SessionSummary>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io(&self.root))? {
            let entry = entry.map_err(io(&self.root))?;
            let dir = SessionDir::new(entry.path());
            if !dir.exists() {
                continue;
            }
            if let Ok(s) = dir.load() {
                out.push(s.summary());
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}
