//! Human curation of machine labels as an append-only edit log.
//!
//! A [`CurationSession`] holds the machine labels of one document and every
//! edit and review-status change applied since. The curated labels are always
//! the left fold of the log over the base labels; [`CurationSession::replay`]
//! recomputes that fold from scratch.

mod diff;
mod store;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::labels::{LabelClass, RegionLabel, Source};

pub use diff::{diff_page, diff_pages, session_stats, DiffBucket, DiffEntry, ErrorBreakdown, SessionStats};
pub use store::{year_overview, SessionStore, YearOverview, SNAPSHOT_INTERVAL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurateError {
    #[error("session locked")]
    SessionLocked,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("unknown page {0:?}")]
    UnknownPage(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("bbox out of bounds")]
    OutOfBounds,
    #[error("stale sequence: expected {expected}, session is at {actual}")]
    StaleSequence { expected: u64, actual: u64 },
    #[error("invalid status transition {from} -> {to}")]
    InvalidTransition { from: Status, to: Status },
    #[error("verification requires an actor other than {0:?}")]
    SecondActorRequired(String),
    #[error("corrupted log: {0}")]
    CorruptLog(String),
    #[error("nothing to undo at sequence {0}")]
    NothingToUndo(u64),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} already exists")]
    SessionExists(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CurateError {
    pub fn is_io(&self) -> bool {
        matches!(self, CurateError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unreviewed,
    Pass1Done,
    Verified,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Unreviewed => "unreviewed",
            Status::Pass1Done => "pass1_done",
            Status::Verified => "verified",
        })
    }
}

/// One correction to a page's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Add { label: RegionLabel },
    Remove { label_id: String },
    Move { label_id: String, dx: f64, dy: f64 },
    Resize { label_id: String, bbox: BBox },
    Relabel { label_id: String, class: LabelClass },
}

impl EditOp {
    pub fn kind(&self) -> &'static str {
        match self {
            EditOp::Add { .. } => "add",
            EditOp::Remove { .. } => "remove",
            EditOp::Move { .. } => "move",
            EditOp::Resize { .. } => "resize",
            EditOp::Relabel { .. } => "relabel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Edit { page_id: String, op: EditOp },
    Transition { status: Status },
}

/// A logged action with its position in the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub sequence: u64,
    pub actor: String,
    pub action: Action,
}

/// A page's size and its machine labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageBase {
    pub page_id: String,
    pub width: f64,
    pub height: f64,
    pub labels: Vec<RegionLabel>,
}

/// Everything about a session that is fixed at creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub pages: Vec<PageBase>,
}

/// Result of folding a log over the base labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub sequence: u64,
    pub status: Status,
    pub pass1_actor: Option<String>,
    pub labels: BTreeMap<String, Vec<RegionLabel>>,
}

impl SessionState {
    fn initial(header: &SessionHeader) -> Self {
        SessionState {
            sequence: 0,
            status: Status::Unreviewed,
            pass1_actor: None,
            labels: header
                .pages
                .iter()
                .map(|p| (p.page_id.clone(), p.labels.clone()))
                .collect(),
        }
    }

    /// Applies one event, leaving `self` untouched on error.
    fn apply(&mut self, header: &SessionHeader, event: &Event) -> Result<(), CurateError> {
        if event.sequence <= self.sequence {
            return Err(CurateError::CorruptLog(format!(
                "sequence {} does not follow {}",
                event.sequence, self.sequence
            )));
        }
        match &event.action {
            Action::Transition { status } => self.transition(&event.actor, *status)?,
            Action::Edit { page_id, op } => {
                if self.status == Status::Verified {
                    return Err(CurateError::SessionLocked);
                }
                let page = header
                    .pages
                    .iter()
                    .find(|p| &p.page_id == page_id)
                    .ok_or_else(|| CurateError::UnknownPage(page_id.clone()))?;
                let labels = self.labels.get_mut(page_id).expect("state covers every page");
                apply_op(labels, op, page.width, page.height)?;
            }
        }
        self.sequence = event.sequence;
        Ok(())
    }

    fn transition(&mut self, actor: &str, to: Status) -> Result<(), CurateError> {
        match (self.status, to) {
            (Status::Unreviewed, Status::Pass1Done) => {
                self.pass1_actor = Some(actor.to_string());
            }
            (Status::Pass1Done, Status::Verified) => {
                let first = self.pass1_actor.as_deref().unwrap_or_default();
                if first == actor {
                    return Err(CurateError::SecondActorRequired(first.to_string()));
                }
            }
            (from, to) => return Err(CurateError::InvalidTransition { from, to }),
        }
        self.status = to;
        Ok(())
    }
}

fn in_page(b: &BBox, width: f64, height: f64) -> bool {
    b.within_page(width, height)
}

fn apply_op(labels: &mut Vec<RegionLabel>, op: &EditOp, width: f64, height: f64) -> Result<(), CurateError> {
    let position = |labels: &[RegionLabel], id: &str| {
        labels
            .iter()
            .position(|l| l.label_id == id)
            .ok_or_else(|| CurateError::UnknownLabel(id.to_string()))
    };
    match op {
        EditOp::Add { label } => {
            if labels.iter().any(|l| l.label_id == label.label_id) {
                return Err(CurateError::DuplicateLabel(label.label_id.clone()));
            }
            if !in_page(&label.bbox, width, height) {
                return Err(CurateError::OutOfBounds);
            }
            labels.push(label.clone());
        }
        EditOp::Remove { label_id } => {
            let i = position(labels, label_id)?;
            labels.remove(i);
        }
        EditOp::Move { label_id, dx, dy } => {
            let i = position(labels, label_id)?;
            let moved = labels[i]
                .bbox
                .translated(*dx, *dy)
                .map_err(|_| CurateError::OutOfBounds)?;
            if !in_page(&moved, width, height) {
                return Err(CurateError::OutOfBounds);
            }
            labels[i].bbox = moved;
            labels[i].source = Source::Human;
        }
        EditOp::Resize { label_id, bbox } => {
            let i = position(labels, label_id)?;
            if !in_page(bbox, width, height) {
                return Err(CurateError::OutOfBounds);
            }
            labels[i].bbox = *bbox;
            labels[i].source = Source::Human;
        }
        EditOp::Relabel { label_id, class } => {
            let i = position(labels, label_id)?;
            labels[i].class = *class;
            labels[i].source = Source::Human;
        }
    }
    Ok(())
}

/// Folds `log` over the header's base labels.
pub fn replay(header: &SessionHeader, log: &[Event]) -> Result<SessionState, CurateError> {
    let mut state = SessionState::initial(header);
    for event in log {
        state.apply(header, event).map_err(|e| match e {
            CurateError::CorruptLog(_) => e,
            other => CurateError::CorruptLog(format!("event {}: {other}", event.sequence)),
        })?;
    }
    Ok(state)
}

/// One document under curation.
#[derive(Debug, Clone, PartialEq)]
pub struct CurationSession {
    header: SessionHeader,
    log: Vec<Event>,
    state: SessionState,
}

impl CurationSession {
    pub fn new(header: SessionHeader) -> Result<Self, CurateError> {
        for page in &header.pages {
            let mut seen = std::collections::BTreeSet::new();
            for l in &page.labels {
                if !seen.insert(&l.label_id) {
                    return Err(CurateError::DuplicateLabel(l.label_id.clone()));
                }
                if !in_page(&l.bbox, page.width, page.height) {
                    return Err(CurateError::OutOfBounds);
                }
            }
        }
        let state = SessionState::initial(&header);
        Ok(CurationSession {
            header,
            log: Vec::new(),
            state,
        })
    }

    /// Rebuilds a session from a stored header and log.
    pub fn from_log(header: SessionHeader, log: Vec<Event>) -> Result<Self, CurateError> {
        let mut session = CurationSession::new(header)?;
        session.state = replay(&session.header, &log)?;
        session.log = log;
        Ok(session)
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }
    pub fn doc_id(&self) -> &str {
        &self.header.doc_id
    }
    pub fn log(&self) -> &[Event] {
        &self.log
    }
    pub fn state(&self) -> &SessionState {
        &self.state
    }
    pub fn status(&self) -> Status {
        self.state.status
    }
    pub fn sequence(&self) -> u64 {
        self.state.sequence
    }

    pub fn page(&self, page_id: &str) -> Option<&PageBase> {
        self.header.pages.iter().find(|p| p.page_id == page_id)
    }

    /// Current curated labels of a page.
    pub fn labels(&self, page_id: &str) -> Option<&[RegionLabel]> {
        self.state.labels.get(page_id).map(Vec::as_slice)
    }

    pub fn base_labels(&self) -> BTreeMap<String, Vec<RegionLabel>> {
        self.header
            .pages
            .iter()
            .map(|p| (p.page_id.clone(), p.labels.clone()))
            .collect()
    }

    fn check_sequence(&self, expected: Option<u64>) -> Result<(), CurateError> {
        match expected {
            Some(e) if e != self.state.sequence => Err(CurateError::StaleSequence {
                expected: e,
                actual: self.state.sequence,
            }),
            _ => Ok(()),
        }
    }

    /// Validates and appends an action; returns its sequence number.
    ///
    /// `expected_sequence`, when given, must equal the session's current
    /// sequence (optimistic concurrency).
    pub fn record(&mut self, actor: &str, action: Action, expected_sequence: Option<u64>) -> Result<Event, CurateError> {
        self.check_sequence(expected_sequence)?;
        let event = Event {
            sequence: self.state.sequence + 1,
            actor: actor.to_string(),
            action,
        };
        let mut next = self.state.clone();
        next.apply(&self.header, &event)?;
        self.state = next;
        self.log.push(event.clone());
        Ok(event)
    }

    pub fn apply_edit(
        &mut self,
        actor: &str,
        page_id: &str,
        op: EditOp,
        expected_sequence: Option<u64>,
    ) -> Result<u64, CurateError> {
        let action = Action::Edit {
            page_id: page_id.to_string(),
            op,
        };
        Ok(self.record(actor, action, expected_sequence)?.sequence)
    }

    pub fn transition(&mut self, actor: &str, status: Status, expected_sequence: Option<u64>) -> Result<u64, CurateError> {
        Ok(self.record(actor, Action::Transition { status }, expected_sequence)?.sequence)
    }

    /// The op that reverts the edit logged at `sequence`, computed against
    /// the state just before it.
    pub fn inverse_of(&self, sequence: u64) -> Result<(String, EditOp), CurateError> {
        let idx = self
            .log
            .iter()
            .position(|e| e.sequence == sequence)
            .ok_or(CurateError::NothingToUndo(sequence))?;
        let Action::Edit { page_id, op } = &self.log[idx].action else {
            return Err(CurateError::NothingToUndo(sequence));
        };
        let before = replay(&self.header, &self.log[..idx])?;
        let labels = &before.labels[page_id];
        let find = |id: &str| {
            labels
                .iter()
                .find(|l| l.label_id == id)
                .cloned()
                .ok_or_else(|| CurateError::UnknownLabel(id.to_string()))
        };
        let inverse = match op {
            EditOp::Add { label } => EditOp::Remove {
                label_id: label.label_id.clone(),
            },
            EditOp::Remove { label_id } => EditOp::Add { label: find(label_id)? },
            EditOp::Move { label_id, dx, dy } => EditOp::Move {
                label_id: label_id.clone(),
                dx: -dx,
                dy: -dy,
            },
            EditOp::Resize { label_id, .. } => EditOp::Resize {
                label_id: label_id.clone(),
                bbox: find(label_id)?.bbox,
            },
            EditOp::Relabel { label_id, .. } => EditOp::Relabel {
                label_id: label_id.clone(),
                class: find(label_id)?.class,
            },
        };
        Ok((page_id.clone(), inverse))
    }

    /// Appends the inverse of the edit at `sequence`. The log is never truncated.
    pub fn undo(&mut self, actor: &str, sequence: u64, expected_sequence: Option<u64>) -> Result<u64, CurateError> {
        let (page_id, op) = self.inverse_of(sequence)?;
        self.apply_edit(actor, &page_id, op, expected_sequence)
    }

    /// Recomputes the curated state from the base labels and the log.
    pub fn replay(&self) -> Result<SessionState, CurateError> {
        replay(&self.header, &self.log)
    }

    /// Header line followed by one line per event.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&store::LogLine::Header(self.header.clone())).expect("serializes"));
        out.push('\n');
        for e in &self.log {
            out.push_str(&serde_json::to_string(&store::LogLine::Event(e.clone())).expect("serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CurateError> {
        store::parse_log(text, "<memory>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(id: &str, x0: f64, y0: f64, x1: f64, y1: f64, class: LabelClass) -> RegionLabel {
        RegionLabel::new(id, BBox::new(x0, y0, x1, y1).unwrap(), class, Source::Machine)
    }

    pub(crate) fn session() -> CurationSession {
        CurationSession::new(SessionHeader {
            doc_id: "doc".into(),
            year: Some(2001),
            pages: vec![PageBase {
                page_id: "p1".into(),
                width: 500.0,
                height: 400.0,
                labels: vec![
                    label("a", 10.0, 10.0, 110.0, 110.0, LabelClass::Figure),
                    label("b", 200.0, 10.0, 300.0, 60.0, LabelClass::Table),
                ],
            }],
        })
        .unwrap()
    }

    #[test]
    fn add_then_remove_restores_base() {
        let mut s = session();
        let base = s.labels("p1").unwrap().to_vec();
        let mut new = label("c", 10.0, 200.0, 50.0, 250.0, LabelClass::Figure);
        new.source = Source::Human;
        s.apply_edit("ann", "p1", EditOp::Add { label: new }, None).unwrap();
        assert_eq!(s.labels("p1").unwrap().len(), 3);
        s.apply_edit("ann", "p1", EditOp::Remove { label_id: "c".into() }, None).unwrap();
        assert_eq!(s.labels("p1").unwrap(), base);
    }

    #[test]
    fn move_there_and_back() {
        let mut s = session();
        let before = s.labels("p1").unwrap()[0].bbox;
        s.apply_edit("ann", "p1", EditOp::Move { label_id: "a".into(), dx: 5.0, dy: -3.0 }, None)
            .unwrap();
        assert_eq!(s.labels("p1").unwrap()[0].bbox, before.translated(5.0, -3.0).unwrap());
        s.apply_edit("ann", "p1", EditOp::Move { label_id: "a".into(), dx: -5.0, dy: 3.0 }, None)
            .unwrap();
        assert_eq!(s.labels("p1").unwrap()[0].bbox, before);
    }

    #[test]
    fn relabel_keeps_box() {
        let mut s = session();
        let before = s.labels("p1").unwrap()[0].clone();
        s.apply_edit("ann", "p1", EditOp::Relabel { label_id: "a".into(), class: LabelClass::Table }, None)
            .unwrap();
        let after = &s.labels("p1").unwrap()[0];
        assert_eq!(after.class, LabelClass::Table);
        assert_eq!(after.bbox, before.bbox);
        assert_eq!(after.source, Source::Human);
    }

    #[test]
    fn error_paths() {
        let mut s = session();
        let err = s
            .apply_edit("ann", "p1", EditOp::Remove { label_id: "zz".into() }, None)
            .unwrap_err();
        assert_eq!(err.to_string(), "unknown label \"zz\"");
        let err = s
            .apply_edit("ann", "p1", EditOp::Move { label_id: "a".into(), dx: 450.0, dy: 0.0 }, None)
            .unwrap_err();
        assert_eq!(err.to_string(), "bbox out of bounds");
        let err = s
            .apply_edit("ann", "p1", EditOp::Move { label_id: "a".into(), dx: -50.0, dy: 0.0 }, None)
            .unwrap_err();
        assert_eq!(err, CurateError::OutOfBounds);
        let err = s
            .apply_edit(
                "ann",
                "p1",
                EditOp::Resize { label_id: "a".into(), bbox: BBox::new(0.0, 0.0, 600.0, 10.0).unwrap() },
                None,
            )
            .unwrap_err();
        assert_eq!(err, CurateError::OutOfBounds);
        let err = s
            .apply_edit("ann", "p9", EditOp::Remove { label_id: "a".into() }, None)
            .unwrap_err();
        assert!(matches!(err, CurateError::UnknownPage(_)));
        let dup = label("a", 1.0, 1.0, 2.0, 2.0, LabelClass::Figure);
        assert!(matches!(
            s.apply_edit("ann", "p1", EditOp::Add { label: dup }, None),
            Err(CurateError::DuplicateLabel(_))
        ));
        // failed edits leave no trace
        assert!(s.log().is_empty());
        assert_eq!(s.sequence(), 0);
    }

    #[test]
    fn status_machine() {
        let mut s = session();
        assert!(matches!(
            s.transition("ann", Status::Verified, None),
            Err(CurateError::InvalidTransition { .. })
        ));
        s.transition("ann", Status::Pass1Done, None).unwrap();
        assert!(matches!(
            s.transition("ann", Status::Verified, None),
            Err(CurateError::SecondActorRequired(_))
        ));
        // verifier may still correct before locking
        s.apply_edit("bob", "p1", EditOp::Remove { label_id: "b".into() }, None).unwrap();
        s.transition("bob", Status::Verified, None).unwrap();
        assert_eq!(s.status(), Status::Verified);
        let err = s
            .apply_edit("bob", "p1", EditOp::Remove { label_id: "a".into() }, None)
            .unwrap_err();
        assert_eq!(err.to_string(), "session locked");
        assert!(matches!(
            s.transition("cat", Status::Pass1Done, None),
            Err(CurateError::InvalidTransition { .. })
        ));
    }

    #[test]
    fn stale_sequence_rejected() {
        let mut s = session();
        let seq = s
            .apply_edit("ann", "p1", EditOp::Remove { label_id: "b".into() }, Some(0))
            .unwrap();
        assert_eq!(seq, 1);
        let err = s
            .apply_edit("ann", "p1", EditOp::Remove { label_id: "a".into() }, Some(0))
            .unwrap_err();
        assert_eq!(err, CurateError::StaleSequence { expected: 0, actual: 1 });
    }

    #[test]
    fn undo_appends_inverse() {
        let mut s = session();
        let base = s.labels("p1").unwrap().to_vec();
        let s1 = s
            .apply_edit(
                "ann",
                "p1",
                EditOp::Resize { label_id: "a".into(), bbox: BBox::new(0.0, 0.0, 50.0, 50.0).unwrap() },
                None,
            )
            .unwrap();
        let s2 = s.apply_edit("ann", "p1", EditOp::Remove { label_id: "b".into() }, None).unwrap();
        s.undo("ann", s2, None).unwrap();
        s.undo("ann", s1, None).unwrap();
        assert_eq!(s.log().len(), 4);
        let restored = s.labels("p1").unwrap();
        assert_eq!(restored.len(), 2);
        for l in &base {
            let r = restored.iter().find(|r| r.label_id == l.label_id).unwrap();
            assert_eq!((r.bbox, r.class), (l.bbox, l.class));
        }
        let t = s.transition("ann", Status::Pass1Done, None).unwrap();
        assert!(matches!(s.undo("ann", t, None), Err(CurateError::NothingToUndo(_))));
    }

    #[test]
    fn empty_log_replays_to_base() {
        let s = session();
        let state = s.replay().unwrap();
        assert_eq!(state.labels, s.base_labels());
        assert_eq!(state.status, Status::Unreviewed);
    }

    #[test]
    fn non_monotone_log_is_corrupt() {
        let mut s = session();
        s.apply_edit("ann", "p1", EditOp::Remove { label_id: "b".into() }, None).unwrap();
        s.apply_edit("ann", "p1", EditOp::Remove { label_id: "a".into() }, None).unwrap();
        let mut log = s.log().to_vec();
        log.swap(0, 1);
        let err = replay(s.header(), &log).unwrap_err();
        assert!(matches!(err, CurateError::CorruptLog(_)));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut s = session();
        s.apply_edit("ann", "p1", EditOp::Move { label_id: "a".into(), dx: 0.5, dy: 1.25 }, None)
            .unwrap();
        s.transition("ann", Status::Pass1Done, None).unwrap();
        let text = s.to_jsonl();
        let back = CurationSession::from_jsonl(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_jsonl(), text);
    }
}
