//! Persistence for everything the pipeline and the annotators produce. The
//! JSONL event log is the only source of truth; the in-memory views and the
//! snapshot file are both derived from it.

mod server;
mod views;

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::corpus::Problem;
use crate::formalize::{Candidate, EnsembleSummary};
use crate::leanrun::ValidationResult;
use crate::prover::ProofAttempt;

pub use server::{bind, router, serve, AppState};
pub use views::{Annotation, AnnotationStatus, BaseCandidate, CompileJob, ProblemDetail, ProblemSummary, Views};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 200;

#[derive(Debug, thiserror::Error)]
pub enum HubError {
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("event log line {line} is unreadable: {detail}")]
    Corrupt { line: usize, detail: String },
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewAnnotation {
    pub problem_id: String,
    pub final_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_candidate: Option<BaseCandidate>,
    pub editor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    ProblemAdded(Problem),
    CandidateAdded(Candidate),
    SummaryAdded(EnsembleSummary),
    AttemptAdded(ProofAttempt),
    AnnotationSaved(NewAnnotation),
    AnnotationVerified { annotation_id: u64, editor: String },
    CompileRequested { request_id: String, problem_id: String, code: String },
    CompileCompleted { request_id: String, result: ValidationResult },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
    pub at: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    views: Views,
}

/// Single writer, many readers. Appends are serialized by `log`; readers
/// only take the views lock.
pub struct HubStore {
    dir: PathBuf,
    log: Mutex<File>,
    views: RwLock<Views>,
    snapshot_every: u64,
}

impl HubStore {
    /// Opens (or creates) a store directory, loading the snapshot and
    /// replaying whatever the log holds beyond it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, HubError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let base = match std::fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => match serde_json::from_slice::<Snapshot>(&bytes) {
                Ok(s) => s.views,
                Err(e) => {
                    tracing::warn!(error = %e, "ignoring unreadable snapshot, replaying the full log");
                    Views::default()
                }
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Views::default(),
            Err(e) => return Err(e.into()),
        };
        let path = dir.join(EVENTS_FILE);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let views = replay(&mut file, base)?;
        Ok(HubStore {
            dir,
            log: Mutex::new(file),
            views: RwLock::new(views),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        })
    }

    pub fn with_snapshot_every(mut self, n: u64) -> Self {
        self.snapshot_every = n.max(1);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Validates and durably appends one event, returning its sequence
    /// number.
    pub fn append(&self, event: Event) -> Result<u64, HubError> {
        let mut log = self.log.lock();
        let seq = {
            let views = self.views.read();
            views.admit(&event).map_err(HubError::Rejected)?;
            views.last_seq + 1
        };
        let record = EventRecord {
            seq,
            event,
            at: Utc::now(),
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        let before = log.metadata()?.len();
        if let Err(e) = log.write_all(line.as_bytes()).and_then(|_| log.sync_data()) {
            // leave no torn line behind for the next append to follow
            let _ = log.set_len(before);
            return Err(e.into());
        }
        let mut views = self.views.write();
        views.apply(&record);
        if seq % self.snapshot_every == 0 {
            if let Err(e) = self.write_snapshot(&views) {
                tracing::warn!(error = %e, "snapshot failed; the log is still authoritative");
            }
        }
        Ok(seq)
    }

    fn write_snapshot(&self, views: &Views) -> Result<(), HubError> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, &Snapshot { views: views.clone() })?;
        tmp.as_file().sync_data()?;
        tmp.persist(self.dir.join(SNAPSHOT_FILE)).map_err(|e| e.error)?;
        Ok(())
    }

    /// Records the problem unless an identical one is already stored.
    pub fn ensure_problem(&self, problem: &Problem) -> Result<Option<u64>, HubError> {
        match self.problem(&problem.id) {
            Some(p) if &p == problem => Ok(None),
            Some(_) => Err(HubError::Rejected(format!("problem {} is already stored with different content", problem.id))),
            None => self.append(Event::ProblemAdded(problem.clone())).map(Some),
        }
    }

    /// A copy of the current views.
    pub fn views(&self) -> Views {
        self.views.read().clone()
    }

    pub fn last_seq(&self) -> u64 {
        self.views.read().last_seq
    }

    pub fn problems(&self) -> Vec<ProblemSummary> {
        self.views.read().problem_summaries()
    }

    pub fn problem(&self, id: &str) -> Option<Problem> {
        self.views.read().problems.get(id).cloned()
    }

    pub fn problem_detail(&self, id: &str) -> Option<ProblemDetail> {
        self.views.read().problem_detail(id)
    }

    pub fn candidates(&self, problem_id: &str) -> Vec<Candidate> {
        self.views.read().candidates.get(problem_id).cloned().unwrap_or_default()
    }

    pub fn summary(&self, problem_id: &str) -> Option<EnsembleSummary> {
        self.views.read().summaries.get(problem_id).cloned()
    }

    pub fn attempts(&self, task_id: &str) -> Vec<ProofAttempt> {
        self.views.read().attempts.get(task_id).cloned().unwrap_or_default()
    }

    pub fn annotation(&self, id: u64) -> Option<Annotation> {
        self.views.read().annotations.get(&id).cloned()
    }

    pub fn annotations_for(&self, problem_id: &str) -> Vec<Annotation> {
        self.views.read().annotations_for(problem_id)
    }

    pub fn compile(&self, request_id: &str) -> Option<CompileJob> {
        self.views.read().compiles.get(request_id).cloned()
    }

    /// Saves an annotation; its id is the sequence number of the event.
    pub fn save_annotation(&self, new: NewAnnotation) -> Result<Annotation, HubError> {
        let seq = self.append(Event::AnnotationSaved(new))?;
        Ok(self.annotation(seq).expect("applied"))
    }

    pub fn verify_annotation(&self, id: u64, editor: &str) -> Result<Annotation, HubError> {
        if self.annotation(id).is_none() {
            return Err(HubError::NotFound(format!("annotation {id}")));
        }
        self.append(Event::AnnotationVerified {
            annotation_id: id,
            editor: editor.to_string(),
        })?;
        Ok(self.annotation(id).expect("exists"))
    }

    /// Annotations signed off by two editors, one JSON object per line.
    pub fn export_verified(&self) -> String {
        self.views
            .read()
            .annotations
            .values()
            .filter(|a| a.status == AnnotationStatus::VerifiedTwice)
            .map(|a| serde_json::to_string(a).expect("annotation serializes") + "\n")
            .collect()
    }
}

/// Rebuilds the views from the log alone, ignoring any snapshot.
pub fn replay_from_log(dir: impl AsRef<Path>) -> Result<Views, HubError> {
    let mut file = File::open(dir.as_ref().join(EVENTS_FILE))?;
    replay_records(&mut file, Views::default(), false)
}

fn replay(file: &mut File, base: Views) -> Result<Views, HubError> {
    replay_records(file, base, true)
}

/// Applies every record past `views.last_seq`. A final line without its
/// newline is a write cut short by a crash: it is dropped (and, when
/// `repair` is set, truncated away).
fn replay_records(file: &mut File, mut views: Views, repair: bool) -> Result<Views, HubError> {
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(&mut *file);
    let mut offset: u64 = 0;
    let mut line_no = 0;
    let mut buf = String::new();
    let mut expected = 1;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if !buf.ends_with('\n') {
            tracing::warn!(line = line_no, "dropping a partially written event");
            if repair {
                drop(reader);
                file.set_len(offset)?;
            }
            break;
        }
        offset += n as u64;
        if buf.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&buf).map_err(|e| HubError::Corrupt {
            line: line_no,
            detail: e.to_string(),
        })?;
        if record.seq != expected {
            return Err(HubError::Corrupt {
                line: line_no,
                detail: format!("expected seq {expected}, found {}", record.seq),
            });
        }
        expected += 1;
        if record.seq > views.last_seq {
            views.apply(&record);
        }
    }
    if expected - 1 < views.last_seq {
        return Err(HubError::Corrupt {
            line: line_no,
            detail: format!("snapshot is at seq {} but the log ends at {}", views.last_seq, expected - 1),
        });
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, ProblemKind};
    use crate::formalize::{FinalStatus, IterationRecord, RankEntry};
    use std::sync::Arc;

    pub(crate) fn problem(id: &str) -> Problem {
        Problem {
            id: id.into(),
            source: "test".into(),
            statement_nl: "Show that 2 is even.".into(),
            kind: ProblemKind::Prove,
            answer: None,
            category: Some(Category::NumberTheory),
            informal_proof: None,
        }
    }

    pub(crate) fn candidate(pid: &str, model: &str, valid: bool) -> Candidate {
        let log = if valid { String::new() } else { "Main.lean:1:0: error: x".into() };
        Candidate {
            problem_id: pid.into(),
            model: model.into(),
            iterations: vec![IterationRecord {
                index: 1,
                code: format!("theorem {model} : True := sorry"),
                validation: ValidationResult::from_log("", log, 0.0),
                feedback: String::new(),
            }],
            final_status: if valid { FinalStatus::Valid } else { FinalStatus::Invalid },
            final_code: format!("theorem {model} : True := sorry"),
        }
    }

    fn note(pid: &str, editor: &str) -> NewAnnotation {
        NewAnnotation {
            problem_id: pid.into(),
            final_code: "theorem t : True := sorry".into(),
            base_candidate: Some(BaseCandidate {
                model: "a".into(),
                iteration: 1,
            }),
            editor: editor.into(),
        }
    }

    fn seeded(dir: &Path) -> HubStore {
        let store = HubStore::open(dir).unwrap();
        store.ensure_problem(&problem("p1")).unwrap();
        store.append(Event::CandidateAdded(candidate("p1", "a", true))).unwrap();
        store.append(Event::CandidateAdded(candidate("p1", "b", false))).unwrap();
        store
    }

    #[test]
    fn record_wire_shape() {
        let r = EventRecord {
            seq: 3,
            event: Event::AnnotationVerified {
                annotation_id: 2,
                editor: "ana".into(),
            },
            at: Utc::now(),
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["kind"], "annotation_verified");
        assert_eq!(v["payload"]["editor"], "ana");
        assert_eq!(serde_json::from_value::<EventRecord>(v).unwrap(), r);
    }

    #[test]
    fn first_event_is_seq_one() {
        let dir = tempfile::tempdir().unwrap();
        let store = HubStore::open(dir.path()).unwrap();
        assert_eq!(store.ensure_problem(&problem("p1")).unwrap(), Some(1));
        assert_eq!(store.ensure_problem(&problem("p1")).unwrap(), None);
        let mut other = problem("p1");
        other.statement_nl = "changed".into();
        assert!(matches!(store.ensure_problem(&other), Err(HubError::Rejected(_))));
    }

    #[test]
    fn candidates_and_summaries_are_immutable() {
        let dir = tempfile::tempdir().unwrap();
        let store = seeded(dir.path());
        assert!(matches!(store.append(Event::CandidateAdded(candidate("p1", "a", false))), Err(HubError::Rejected(_))));
        assert!(matches!(store.append(Event::CandidateAdded(candidate("nope", "a", false))), Err(HubError::Rejected(_))));
        let summary = |models: &[&str]| EnsembleSummary {
            problem_id: "p1".into(),
            ranking: models
                .iter()
                .enumerate()
                .map(|(i, m)| RankEntry {
                    model: m.to_string(),
                    rank: i + 1,
                    notes: String::new(),
                })
                .collect(),
            common_errors: String::new(),
            missing_conditions: String::new(),
            raw: String::new(),
        };
        assert!(matches!(store.append(Event::SummaryAdded(summary(&["a"]))), Err(HubError::Rejected(_))));
        store.append(Event::SummaryAdded(summary(&["b", "a"]))).unwrap();
        assert!(matches!(store.append(Event::SummaryAdded(summary(&["a", "b"]))), Err(HubError::Rejected(_))));
        assert_eq!(store.summary("p1").unwrap().ranking[0].model, "b");
    }

    #[test]
    fn two_distinct_editors_verify_twice() {
        let dir = tempfile::tempdir().unwrap();
        let store = seeded(dir.path());
        let a = store.save_annotation(note("p1", "ana")).unwrap();
        assert_eq!(a.status, AnnotationStatus::Draft);
        assert_eq!(store.verify_annotation(a.id, "ana").unwrap().status, AnnotationStatus::VerifiedOnce);
        assert_eq!(store.verify_annotation(a.id, "ana").unwrap().status, AnnotationStatus::VerifiedOnce);
        assert_eq!(store.export_verified(), "");
        assert_eq!(store.verify_annotation(a.id, "ben").unwrap().status, AnnotationStatus::VerifiedTwice);
        let exported = store.export_verified();
        assert_eq!(exported.lines().count(), 1);
        let back: Annotation = serde_json::from_str(exported.trim()).unwrap();
        assert_eq!(back.verifiers, ["ana", "ben"]);
        assert!(matches!(store.verify_annotation(999, "ben"), Err(HubError::NotFound(_))));
    }

    #[test]
    fn annotation_references_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let store = seeded(dir.path());
        let mut bad = note("p1", "ana");
        bad.base_candidate = Some(BaseCandidate {
            model: "a".into(),
            iteration: 4,
        });
        assert!(matches!(store.save_annotation(bad), Err(HubError::Rejected(_))));
        let mut empty = note("p1", "ana");
        empty.final_code = "  ".into();
        assert!(store.save_annotation(empty).is_err());
        assert!(store.save_annotation(note("p2", "ana")).is_err());
        let mut anon = note("p1", "");
        anon.base_candidate = None;
        assert!(store.save_annotation(anon).is_err());
    }

    #[test]
    fn reopen_and_replay_match_live_views() {
        let dir = tempfile::tempdir().unwrap();
        let live = {
            let store = seeded(dir.path()).with_snapshot_every(3);
            let a = store.save_annotation(note("p1", "ana")).unwrap();
            store.verify_annotation(a.id, "ben").unwrap();
            store
                .append(Event::CompileRequested {
                    request_id: "r1".into(),
                    problem_id: "p1".into(),
                    code: "x".into(),
                })
                .unwrap();
            store.views()
        };
        assert!(dir.path().join(SNAPSHOT_FILE).exists());
        assert_eq!(replay_from_log(dir.path()).unwrap(), live);
        assert_eq!(HubStore::open(dir.path()).unwrap().views(), live);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let live = seeded(dir.path()).views();
        let mut f = OpenOptions::new().append(true).open(dir.path().join(EVENTS_FILE)).unwrap();
        f.write_all(b"{\"seq\":4,\"kind\":\"candid").unwrap();
        drop(f);
        let store = HubStore::open(dir.path()).unwrap();
        assert_eq!(store.views(), live);
        assert_eq!(store.append(Event::CandidateAdded(candidate("p1", "c", true))).unwrap(), 4);
        assert_eq!(HubStore::open(dir.path()).unwrap().candidates("p1").len(), 3);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        seeded(dir.path());
        let path = dir.path().join(EVENTS_FILE);
        let text = std::fs::read_to_string(&path).unwrap().replacen("\"seq\":2", "\"seq\":7", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(HubStore::open(dir.path()), Err(HubError::Corrupt { line: 2, .. })));
    }

    #[test]
    fn concurrent_appends_have_no_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(HubStore::open(dir.path()).unwrap());
        store.ensure_problem(&problem("p1")).unwrap();
        let seqs: Vec<u64> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8)
                .map(|t| {
                    let store = store.clone();
                    s.spawn(move || {
                        (0..10)
                            .map(|i| {
                                let mut n = note("p1", &format!("e{t}-{i}"));
                                n.base_candidate = None;
                                store.save_annotation(n).unwrap().id
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        let mut sorted = seqs.clone();
        sorted.sort();
        assert_eq!(sorted, (2..=81).collect::<Vec<u64>>());
        assert_eq!(replay_from_log(dir.path()).unwrap(), store.views());
    }
}
