use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use ntrl::sim::{BatchMetrics, Encounter, Party};
use serde::{Deserialize, Serialize};

pub const SESSIONS_FILE: &str = "sessions.jsonl";
pub const SUBMISSIONS_FILE: &str = "submissions.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub party: Party,
    pub hp_variation: bool,
    /// Threshold drawn when `hp_variation` is on.
    pub hp_threshold: Option<f64>,
    /// Seed the party (and its HP draw) was generated from.
    pub party_seed: u64,
    /// Unix seconds.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionResult {
    pub encounter: Encounter,
    pub adjusted_xp: u64,
    pub metrics: BatchMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub session: String,
    pub party: Party,
    pub budget: u32,
    /// Server-assigned; every encounter is simulated with it.
    pub seed: u64,
    pub sims: u32,
    pub results: Vec<SubmissionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nickname: Option<String>,
    pub created_at: u64,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Sessions and submissions as append-only JSON lines under `dir`, or in
/// memory only when no directory is given. One writer lock per file.
#[derive(Debug)]
pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Session>>,
    session_log: Mutex<Option<File>>,
    submission_log: Mutex<Option<File>>,
}

fn append_handle(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> std::io::Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    BufReader::new(File::open(path)?)
        .lines()
        .filter(|l| !l.as_ref().is_ok_and(|l| l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(std::io::Error::other))
        .collect()
}

fn append_line<T: Serialize>(file: &mut Option<File>, value: &T) -> std::io::Result<()> {
    if let Some(f) = file {
        let mut line = serde_json::to_vec(value).map_err(std::io::Error::other)?;
        line.push(b'\n');
        f.write_all(&line)?;
        f.flush()?;
    }
    Ok(())
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            sessions: RwLock::default(),
            session_log: Mutex::new(None),
            submission_log: Mutex::new(None),
        }
    }

    /// Reloads earlier sessions so their ids stay valid across restarts.
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let sessions_path = dir.join(SESSIONS_FILE);
        let sessions = read_lines::<Session>(&sessions_path)?
            .into_iter()
            .map(|s| (s.id.clone(), s))
            .collect();
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            sessions: RwLock::new(sessions),
            session_log: Mutex::new(Some(append_handle(&sessions_path)?)),
            submission_log: Mutex::new(Some(append_handle(&dir.join(SUBMISSIONS_FILE))?)),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn insert_session(&self, session: Session) -> std::io::Result<()> {
        append_line(&mut self.session_log.lock().unwrap(), &session)?;
        self.sessions.write().unwrap().insert(session.id.clone(), session);
        Ok(())
    }

    pub fn session(&self, id: &str) -> Option<Session> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn append_submission(&self, submission: &Submission) -> std::io::Result<()> {
        append_line(&mut self.submission_log.lock().unwrap(), submission)
    }

    pub fn submissions(&self) -> std::io::Result<Vec<Submission>> {
        match &self.dir {
            Some(dir) => read_lines(&dir.join(SUBMISSIONS_FILE)),
            None => Ok(Vec::new()),
        }
    }
}
