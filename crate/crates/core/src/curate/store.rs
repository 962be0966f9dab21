//! On-disk session logs: one JSONL file per document.
//!
//! The first line is the header, every following line an event or a state
//! snapshot. Snapshots are written every [`SNAPSHOT_INTERVAL`] events and are
//! checked against the replayed prefix on load, so a tampered log is caught.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{replay, Action, CurateError, CurationSession, Event, SessionHeader, SessionState, Status};

pub const SNAPSHOT_INTERVAL: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub(crate) enum LogLine {
    Header(SessionHeader),
    Event(Event),
    Snapshot(SessionState),
}

pub(crate) fn parse_log(text: &str, origin: &str) -> Result<CurationSession, CurateError> {
    let mut header = None;
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(line)
            .map_err(|e| CurateError::CorruptLog(format!("{origin}:{}: {e}", n + 1)))?;
        match (parsed, header.is_some()) {
            (LogLine::Header(h), false) => header = Some(h),
            (LogLine::Header(_), true) => {
                return Err(CurateError::CorruptLog(format!("{origin}:{}: second header", n + 1)))
            }
            (_, false) => return Err(CurateError::CorruptLog(format!("{origin}: missing header"))),
            (LogLine::Event(e), true) => events.push(e),
            (LogLine::Snapshot(s), true) => snapshots.push((events.len(), s)),
        }
    }
    let header = header.ok_or_else(|| CurateError::CorruptLog(format!("{origin}: missing header")))?;
    for (prefix, snapshot) in snapshots {
        if replay(&header, &events[..prefix])? != snapshot {
            return Err(CurateError::CorruptLog(format!(
                "{origin}: snapshot at sequence {} disagrees with replay",
                snapshot.sequence
            )));
        }
    }
    CurationSession::from_log(header, events)
}

/// Per-year progress: how many labels machines proposed vs. what curation kept.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct YearOverview {
    pub year: Option<i32>,
    pub documents: usize,
    pub machine_labels: usize,
    pub curated_labels: usize,
    pub status: BTreeMap<Status, usize>,
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> CurateError {
    CurateError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn valid_doc_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CurateError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, doc_id: &str) -> Result<PathBuf, CurateError> {
        if !valid_doc_id(doc_id) {
            return Err(CurateError::UnknownSession(doc_id.to_string()));
        }
        Ok(self.dir.join(format!("{doc_id}.jsonl")))
    }

    pub fn create(&self, header: SessionHeader) -> Result<CurationSession, CurateError> {
        let path = self.path(&header.doc_id)?;
        if path.exists() {
            return Err(CurateError::SessionExists(header.doc_id));
        }
        let session = CurationSession::new(header)?;
        fs::write(&path, session.to_jsonl()).map_err(|e| io_err(&path, e))?;
        Ok(session)
    }

    pub fn load(&self, doc_id: &str) -> Result<CurationSession, CurateError> {
        let path = self.path(doc_id)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CurateError::UnknownSession(doc_id.to_string()))
            }
            Err(e) => return Err(io_err(&path, e)),
        };
        parse_log(&text, &path.display().to_string())
    }

    /// Validates `action` against the stored session and appends it.
    pub fn append(
        &self,
        doc_id: &str,
        actor: &str,
        action: Action,
        expected_sequence: Option<u64>,
    ) -> Result<(Event, CurationSession), CurateError> {
        let mut session = self.load(doc_id)?;
        let event = session.record(actor, action, expected_sequence)?;
        self.write_event(&session, &event)?;
        Ok((event, session))
    }

    /// Appends the inverse of the edit at `sequence`.
    pub fn undo(
        &self,
        doc_id: &str,
        actor: &str,
        sequence: u64,
        expected_sequence: Option<u64>,
    ) -> Result<(Event, CurationSession), CurateError> {
        let mut session = self.load(doc_id)?;
        let (page_id, op) = session.inverse_of(sequence)?;
        let event = session.record(actor, Action::Edit { page_id, op }, expected_sequence)?;
        self.write_event(&session, &event)?;
        Ok((event, session))
    }

    fn write_event(&self, session: &CurationSession, event: &Event) -> Result<(), CurateError> {
        let path = self.path(session.doc_id())?;
        let mut text = serde_json::to_string(&LogLine::Event(event.clone())).expect("serializes");
        text.push('\n');
        if event.sequence % SNAPSHOT_INTERVAL == 0 {
            text.push_str(&serde_json::to_string(&LogLine::Snapshot(session.state().clone())).expect("serializes"));
            text.push('\n');
        }
        let mut file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))
    }

    /// Sorted document ids.
    pub fn list(&self) -> Result<Vec<String>, CurateError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(|e| io_err(&self.dir, e))? {
            let path = entry.map_err(|e| io_err(&self.dir, e))?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load_all(&self) -> Result<Vec<CurationSession>, CurateError> {
        self.list()?.iter().map(|id| self.load(id)).collect()
    }

    pub fn overview(&self) -> Result<Vec<YearOverview>, CurateError> {
        Ok(year_overview(&self.load_all()?))
    }
}

pub fn year_overview(sessions: &[CurationSession]) -> Vec<YearOverview> {
    let mut by_year: BTreeMap<Option<i32>, YearOverview> = BTreeMap::new();
    for s in sessions {
        let year = s.header().year;
        let o = by_year.entry(year).or_insert_with(|| YearOverview {
            year,
            ..Default::default()
        });
        o.documents += 1;
        o.machine_labels += s.header().pages.iter().map(|p| p.labels.len()).sum::<usize>();
        o.curated_labels += s.state().labels.values().map(Vec::len).sum::<usize>();
        *o.status.entry(s.status()).or_default() += 1;
    }
    by_year.into_values().collect()
}
