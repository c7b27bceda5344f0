use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};

use tokio::sync::Mutex;

use crate::model::{Event, WheelSession};
use crate::SessionError;

pub type SessionHandle = Arc<Mutex<WheelSession>>;

/// Sessions in memory, optionally mirrored to one directory per session
/// holding `events.jsonl` (append-only) and `snapshot.json`.
#[derive(Debug, Default)]
pub struct SessionStore {
    root: Option<PathBuf>,
    sessions: StdMutex<BTreeMap<String, SessionHandle>>,
    counter: StdMutex<u64>,
}

fn id_number(id: &str) -> Option<u64> {
    id.strip_prefix("session-")?.parse().ok()
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `root`, replaying every session found there.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| SessionError::io(&root, e))?;
        let mut sessions = BTreeMap::new();
        let mut max = 0;
        let entries = fs::read_dir(&root).map_err(|e| SessionError::io(&root, e))?;
        for entry in entries {
            let dir = entry.map_err(|e| SessionError::io(&root, e))?.path();
            let log = dir.join("events.jsonl");
            if !log.is_file() {
                continue;
            }
            let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let text = fs::read_to_string(&log).map_err(|e| SessionError::io(&log, e))?;
            let events = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| {
                    serde_json::from_str::<Event>(l).map_err(|e| SessionError::io(&log, format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let session = WheelSession::replay(&id, &events)?;
            max = max.max(id_number(&id).unwrap_or(0));
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(Self {
            root: Some(root),
            sessions: StdMutex::new(sessions),
            counter: StdMutex::new(max),
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn next_id(&self) -> String {
        let mut c = self.counter.lock().expect("counter lock");
        *c += 1;
        format!("session-{:04}", *c)
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, SessionError> {
        self.sessions
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.lock().expect("store lock").keys().cloned().collect()
    }

    /// Adds a new session and writes its whole log.
    pub fn insert(&self, session: WheelSession) -> Result<SessionHandle, SessionError> {
        let id = session.session_id.clone();
        {
            let map = self.sessions.lock().expect("store lock");
            if map.contains_key(&id) {
                return Err(SessionError::Conflict(id));
            }
        }
        if let Some(n) = id_number(&id) {
            let mut c = self.counter.lock().expect("counter lock");
            *c = (*c).max(n);
        }
        self.persist(&session, 0)?;
        let handle = Arc::new(Mutex::new(session));
        let mut map = self.sessions.lock().expect("store lock");
        if map.contains_key(&id) {
            return Err(SessionError::Conflict(id));
        }
        map.insert(id, handle.clone());
        Ok(handle)
    }

    /// Appends events from index `from` and rewrites the snapshot.
    pub fn persist(&self, session: &WheelSession, from: usize) -> Result<(), SessionError> {
        let Some(root) = &self.root else { return Ok(()) };
        let dir = root.join(&session.session_id);
        fs::create_dir_all(&dir).map_err(|e| SessionError::io(&dir, e))?;
        let log = dir.join("events.jsonl");
        let mut lines = String::new();
        for e in &session.events[from..] {
            lines.push_str(&serde_json::to_string(e).expect("events serialize"));
            lines.push('\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log)
            .map_err(|e| SessionError::io(&log, e))?;
        f.write_all(lines.as_bytes()).map_err(|e| SessionError::io(&log, e))?;

        let snap = dir.join("snapshot.json");
        let tmp = dir.join("snapshot.json.tmp");
        let body = serde_json::to_string_pretty(&session.to_document()).expect("documents serialize");
        fs::write(&tmp, body).map_err(|e| SessionError::io(&tmp, e))?;
        fs::rename(&tmp, &snap).map_err(|e| SessionError::io(&snap, e))
    }
}
