//! Review tasks, per-annotator status and the append-only judgment log.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use conceptforge::corpus::Document;
use conceptforge::evaluation::{judgment_metrics, summarize_judgments, Judgment, JudgmentSummary, Verdict};
use conceptforge::ontology::{ConceptId, OntologyGraph, SemanticDistance};
use conceptforge::recognizer::{KeywordSet, Provenance};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("keyword set for {0} has no matching document")]
    MissingDocument(String),
    #[error("more than one keyword set for {0}")]
    DuplicateTask(String),
    #[error("empty judgment batch")]
    EmptyBatch,
    #[error("empty annotator id")]
    EmptyAnnotator,
    #[error("no review task for document {0}")]
    UnknownDocument(String),
    #[error("{verdict} verdict on {concept_id}, which was not suggested for {doc_id}")]
    NotSuggested {
        doc_id: String,
        concept_id: ConceptId,
        verdict: Verdict,
    },
    #[error("{concept_id} was suggested for {doc_id} and cannot be reported missing")]
    SuggestedAsMissing { doc_id: String, concept_id: ConceptId },
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("{annotator} left {} suggestion(s) of {doc_id} unjudged", unjudged.len())]
    Incomplete {
        doc_id: String,
        annotator: String,
        unjudged: Vec<ConceptId>,
    },
    #[error("{annotator} already judged {concept_id} on {doc_id}")]
    Duplicate {
        doc_id: String,
        concept_id: ConceptId,
        annotator: String,
    },
    #[error("judgment log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("judgment log: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Evaluation(#[from] conceptforge::evaluation::EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    InProgress,
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub concept_id: ConceptId,
    pub pref_label: String,
    pub score: f64,
    pub provenance: Provenance,
    pub hops: u32,
}

/// A task as one annotator sees it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub suggestions: Vec<Suggestion>,
    pub status: TaskStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub annotator_id: String,
    pub done: usize,
    pub in_progress: usize,
}

/// Task counts; a task counts as done once any annotator finished it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub tasks: usize,
    pub pending: usize,
    pub in_progress: usize,
    pub done: usize,
    pub annotators: Vec<AnnotatorProgress>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptHit {
    pub id: ConceptId,
    pub pref_label: String,
}

struct Task {
    document: Document,
    suggestions: KeywordSet,
    ids: BTreeSet<ConceptId>,
}

/// Frozen tasks plus the judgment log. Claims (in-progress marks) live in
/// memory only; statuses derived from judgments survive restarts.
pub struct ReviewStore {
    ontology: OntologyGraph,
    tasks: Vec<Task>,
    by_doc: HashMap<String, usize>,
    judgments: BTreeMap<usize, Vec<Judgment>>,
    keys: HashSet<(String, ConceptId, String)>,
    judged: HashMap<(usize, String), BTreeSet<ConceptId>>,
    claims: BTreeMap<String, BTreeSet<usize>>,
    log: File,
    log_path: PathBuf,
}

impl ReviewStore {
    /// Builds one task per non-empty keyword set, in input order, then
    /// replays the judgment log at `log_path` (created when absent).
    pub fn open(
        ontology: OntologyGraph,
        docs: &[Document],
        suggestions: Vec<KeywordSet>,
        log_path: impl AsRef<Path>,
    ) -> Result<Self, ReviewError> {
        let docs: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        let mut tasks = Vec::new();
        let mut by_doc = HashMap::new();
        for set in suggestions {
            let doc = *docs
                .get(set.doc_id.as_str())
                .ok_or_else(|| ReviewError::MissingDocument(set.doc_id.clone()))?;
            for k in &set.keywords {
                if !ontology.contains(k.concept_id.as_str()) {
                    return Err(ReviewError::UnknownConcept(k.concept_id.to_string()));
                }
            }
            if set.is_empty() {
                log::warn!("{}: no suggestions, no review task created", set.doc_id);
                continue;
            }
            if by_doc.insert(set.doc_id.clone(), tasks.len()).is_some() {
                return Err(ReviewError::DuplicateTask(set.doc_id));
            }
            tasks.push(Task {
                document: doc.clone(),
                ids: set.ids(),
                suggestions: set,
            });
        }

        let log_path = log_path.as_ref().to_path_buf();
        let mut log = OpenOptions::new().create(true).read(true).append(true).open(&log_path)?;
        let mut text = String::new();
        log.read_to_string(&mut text)?;
        let mut store = Self {
            ontology,
            tasks,
            by_doc,
            judgments: BTreeMap::new(),
            keys: HashSet::new(),
            judged: HashMap::new(),
            claims: BTreeMap::new(),
            log,
            log_path,
        };
        store.replay(&text)?;
        Ok(store)
    }

    fn replay(&mut self, text: &str) -> Result<(), ReviewError> {
        let complete = match text.rfind('\n') {
            Some(i) => i + 1,
            None => 0,
        };
        if complete < text.len() {
            // a write that never reached its newline was never acknowledged
            log::warn!("dropping unterminated final line of {}", self.log_path.display());
            self.log.set_len(complete as u64)?;
            self.log.seek(SeekFrom::End(0))?;
        }
        let mut replayed = 0;
        for (i, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let j: Judgment = serde_json::from_str(line).map_err(|e| ReviewError::CorruptLog {
                line: i + 1,
                message: e.to_string(),
            })?;
            let mut batch_keys = HashSet::new();
            self.check(&j, &mut batch_keys).map_err(|e| ReviewError::CorruptLog {
                line: i + 1,
                message: e.to_string(),
            })?;
            self.apply(j);
            replayed += 1;
        }
        log::info!("replayed {replayed} judgment(s) from {}", self.log_path.display());
        Ok(())
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn ontology(&self) -> &OntologyGraph {
        &self.ontology
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    fn is_done(&self, task: usize, annotator: &str) -> bool {
        self.judged
            .get(&(task, annotator.to_owned()))
            .is_some_and(|j| j.len() == self.tasks[task].ids.len())
    }

    pub fn status(&self, doc_id: &str, annotator: &str) -> Option<TaskStatus> {
        let &t = self.by_doc.get(doc_id)?;
        Some(if self.is_done(t, annotator) {
            TaskStatus::Done
        } else if self.claims.get(annotator).is_some_and(|c| c.contains(&t)) {
            TaskStatus::InProgress
        } else {
            TaskStatus::Pending
        })
    }

    fn view(&self, t: usize, status: TaskStatus) -> ReviewTask {
        let task = &self.tasks[t];
        ReviewTask {
            doc_id: task.document.doc_id.clone(),
            title: task.document.title.clone(),
            abstract_text: task.document.abstract_text.clone(),
            suggestions: task
                .suggestions
                .keywords
                .iter()
                .map(|k| Suggestion {
                    concept_id: k.concept_id.clone(),
                    pref_label: self.ontology.label(k.concept_id.as_str()).unwrap_or_default().to_owned(),
                    score: k.score,
                    provenance: k.provenance,
                    hops: k.hops,
                })
                .collect(),
            status,
        }
    }

    /// Earliest task the annotator has not finished, marked in progress.
    pub fn claim_next(&mut self, annotator: &str) -> Option<ReviewTask> {
        let t = (0..self.tasks.len()).find(|&t| !self.is_done(t, annotator))?;
        self.claims.entry(annotator.to_owned()).or_default().insert(t);
        Some(self.view(t, TaskStatus::InProgress))
    }

    fn check(&self, j: &Judgment, batch_keys: &mut HashSet<(String, ConceptId, String)>) -> Result<usize, ReviewError> {
        if j.annotator_id.trim().is_empty() {
            return Err(ReviewError::EmptyAnnotator);
        }
        let &t = self
            .by_doc
            .get(&j.doc_id)
            .ok_or_else(|| ReviewError::UnknownDocument(j.doc_id.clone()))?;
        let key = (j.doc_id.clone(), j.concept_id.clone(), j.annotator_id.clone());
        if self.keys.contains(&key) || !batch_keys.insert(key) {
            return Err(ReviewError::Duplicate {
                doc_id: j.doc_id.clone(),
                concept_id: j.concept_id.clone(),
                annotator: j.annotator_id.clone(),
            });
        }
        let suggested = self.tasks[t].ids.contains(&j.concept_id);
        match j.verdict {
            Verdict::Appropriate | Verdict::Wrong if !suggested => Err(ReviewError::NotSuggested {
                doc_id: j.doc_id.clone(),
                concept_id: j.concept_id.clone(),
                verdict: j.verdict,
            }),
            Verdict::Missing if suggested => Err(ReviewError::SuggestedAsMissing {
                doc_id: j.doc_id.clone(),
                concept_id: j.concept_id.clone(),
            }),
            Verdict::Missing if !self.ontology.contains(j.concept_id.as_str()) => {
                Err(ReviewError::UnknownConcept(j.concept_id.to_string()))
            }
            _ => Ok(t),
        }
    }

    fn apply(&mut self, j: Judgment) {
        let t = self.by_doc[&j.doc_id];
        self.keys.insert((j.doc_id.clone(), j.concept_id.clone(), j.annotator_id.clone()));
        if j.verdict != Verdict::Missing {
            self.judged
                .entry((t, j.annotator_id.clone()))
                .or_default()
                .insert(j.concept_id.clone());
        }
        self.judgments.entry(t).or_default().push(j);
    }

    /// Validates the whole batch, appends it to the log, syncs the file and
    /// only then applies it. Every (document, annotator) pair touched by the
    /// batch must end up with all suggestions judged.
    pub fn submit(&mut self, batch: Vec<Judgment>) -> Result<usize, ReviewError> {
        if batch.is_empty() {
            return Err(ReviewError::EmptyBatch);
        }
        let mut batch_keys = HashSet::new();
        let mut touched: BTreeMap<(usize, &str), BTreeSet<&ConceptId>> = BTreeMap::new();
        for j in &batch {
            let t = self.check(j, &mut batch_keys)?;
            let judged = touched.entry((t, j.annotator_id.as_str())).or_default();
            if j.verdict != Verdict::Missing {
                judged.insert(&j.concept_id);
            }
        }
        for ((t, annotator), new) in &touched {
            let before = self.judged.get(&(*t, annotator.to_string()));
            let unjudged: Vec<ConceptId> = self.tasks[*t]
                .ids
                .iter()
                .filter(|c| !new.contains(c) && !before.is_some_and(|b| b.contains(*c)))
                .cloned()
                .collect();
            if !unjudged.is_empty() {
                return Err(ReviewError::Incomplete {
                    doc_id: self.tasks[*t].document.doc_id.clone(),
                    annotator: annotator.to_string(),
                    unjudged,
                });
            }
        }

        let mut lines = String::new();
        for j in &batch {
            lines.push_str(&serde_json::to_string(j).expect("judgments serialize"));
            lines.push('\n');
        }
        self.log.write_all(lines.as_bytes())?;
        self.log.flush()?;
        self.log.sync_data()?;

        let n = batch.len();
        for j in batch {
            self.apply(j);
        }
        Ok(n)
    }

    /// Pooled, per-annotator and per-document corrected-set metrics over
    /// every finished (document, annotator) pair; `None` when nothing is
    /// finished.
    pub fn metrics(&self) -> Result<Option<JudgmentSummary>, ReviewError> {
        let mut reports = Vec::new();
        for (&t, js) in &self.judgments {
            let finished: Vec<Judgment> = js.iter().filter(|j| self.is_done(t, &j.annotator_id)).cloned().collect();
            if !finished.is_empty() {
                reports.extend(judgment_metrics(&self.tasks[t].suggestions, &finished, &self.ontology)?);
            }
        }
        Ok(summarize_judgments(reports))
    }

    pub fn progress(&self) -> Progress {
        let mut annotators: BTreeSet<&str> = self.claims.keys().map(String::as_str).collect();
        annotators.extend(self.judged.keys().map(|(_, a)| a.as_str()));
        let per: Vec<AnnotatorProgress> = annotators
            .into_iter()
            .map(|a| {
                let done = (0..self.tasks.len()).filter(|&t| self.is_done(t, a)).count();
                let in_progress = self
                    .claims
                    .get(a)
                    .map_or(0, |c| c.iter().filter(|&&t| !self.is_done(t, a)).count());
                AnnotatorProgress {
                    annotator_id: a.to_owned(),
                    done,
                    in_progress,
                }
            })
            .collect();
        let done_by_any = |t: usize| per.iter().any(|p| self.is_done(t, &p.annotator_id));
        let claimed = |t: usize| self.claims.values().any(|c| c.contains(&t));
        let done = (0..self.tasks.len()).filter(|&t| done_by_any(t)).count();
        let in_progress = (0..self.tasks.len()).filter(|&t| !done_by_any(t) && claimed(t)).count();
        Progress {
            tasks: self.tasks.len(),
            pending: self.tasks.len() - done - in_progress,
            in_progress,
            done,
            annotators: per,
        }
    }

    pub fn search_concepts(&self, prefix: &str, limit: usize) -> Vec<ConceptHit> {
        self.ontology
            .search_labels(prefix, limit)
            .into_iter()
            .map(|c| ConceptHit {
                id: c.id.clone(),
                pref_label: c.pref_label.clone(),
            })
            .collect()
    }
}
