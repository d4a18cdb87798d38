//! Session registry. Each session has a single writer (a mutex around the
//! authoritative copy) and a published snapshot that readers load without
//! locking. With a data directory every accepted event is appended to
//! `<dir>/<id>.jsonl` before it becomes visible.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use arc_swap::ArcSwap;
use tokio::io::AsyncWriteExt;
use tokio::sync::Mutex;

use crate::session::{Event, Mode, Session, SessionError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no session {0}")]
    NotFound(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("storage failure: {0}")]
    Io(#[from] std::io::Error),
}

struct Entry {
    writer: Mutex<Session>,
    snapshot: ArcSwap<Session>,
}

pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
}

impl Store {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        Store { dir: None, sessions: RwLock::new(HashMap::new()) }
    }

    /// Opens `dir`, replaying every session log found there.
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            match load_log(&path) {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(entry_for(s)));
                }
                Err(e) => eprintln!("skipping {}: {e}", path.display()),
            }
        }
        Ok(Store { dir: Some(dir), sessions: RwLock::new(sessions) })
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Latest published state of a session.
    pub fn snapshot(&self, id: &str) -> Result<Arc<Session>, StoreError> {
        Ok(self.entry(id)?.snapshot.load_full())
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, StoreError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub async fn create(
        &self,
        m: usize,
        n: usize,
        mode: Mode,
        window: Option<usize>,
        seed: u64,
    ) -> Result<Arc<Session>, StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (session, event) = Session::new(id.clone(), m, n, mode, window, seed)?;
        self.append(&id, &event).await?;
        let entry = Arc::new(entry_for(session));
        let snap = entry.snapshot.load_full();
        self.sessions.write().expect("session map poisoned").insert(id, entry);
        Ok(snap)
    }

    /// Applies `f` to a working copy of the session. The change is logged and
    /// published only if `f` succeeds; otherwise the session is untouched.
    pub async fn update<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<(Event, T), SessionError>,
    ) -> Result<T, StoreError> {
        let entry = self.entry(id)?;
        let mut current = entry.writer.lock().await;
        let mut next = current.clone();
        let (event, out) = f(&mut next)?;
        self.append(id, &event).await?;
        entry.snapshot.store(Arc::new(next.clone()));
        *current = next;
        Ok(out)
    }

    async fn append(&self, id: &str, event: &Event) -> std::io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut line = serde_json::to_vec(event).map_err(std::io::Error::other)?;
        line.push(b'\n');
        let mut file = tokio::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path(dir, id))
            .await?;
        file.write_all(&line).await?;
        file.flush().await
    }

    pub fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_deref().map(|d| log_path(d, id))
    }
}

fn entry_for(session: Session) -> Entry {
    Entry { snapshot: ArcSwap::from_pointee(session.clone()), writer: Mutex::new(session) }
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

/// Parses and replays one session log.
pub fn load_log(path: &Path) -> Result<Session, StoreError> {
    let text = std::fs::read_to_string(path)?;
    let events = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Event>(l).map_err(|e| SessionError::Log(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Session::replay(&events)?)
}
