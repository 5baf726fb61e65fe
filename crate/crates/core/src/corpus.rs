//! Document ingestion and validation (`corpus-jsonl`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptId, OntologyGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate doc_id {0}")]
    DuplicateDocId(String),
    #[error("document {0} has neither title nor abstract")]
    EmptyDocument(String),
    #[error("read error: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub gold_concepts: Vec<ConceptId>,
    #[serde(default)]
    pub gold_classes: Vec<ConceptId>,
}

impl Document {
    /// Title and abstract joined by a newline. Annotation spans index into
    /// this string (in characters).
    pub fn text(&self) -> String {
        match (self.title.is_empty(), self.abstract_text.is_empty()) {
            (false, false) => format!("{}\n{}", self.title, self.abstract_text),
            (false, true) => self.title.clone(),
            _ => self.abstract_text.clone(),
        }
    }
}

/// What to do with gold labels the ontology does not know.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownLabelPolicy {
    #[default]
    Retain,
    Drop,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    pub unknown_concepts: usize,
    pub unknown_classes: usize,
    pub dropped_labels: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearFilterReport {
    pub kept: usize,
    pub excluded_by_year: usize,
    pub missing_year: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.title.trim().is_empty() && d.abstract_text.trim().is_empty() {
                return Err(CorpusError::EmptyDocument(d.doc_id.clone()));
            }
            if index.insert(d.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateDocId(d.doc_id.clone()));
            }
        }
        Ok(Self { docs, index })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    /// One JSON object per line in corpus order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.docs {
            out.push_str(&serde_json::to_string(d).expect("documents serialize"));
            out.push('\n');
        }
        out
    }

    /// Keeps documents published after `min_year` (or in it, with
    /// `inclusive`). Documents without a year are excluded and counted.
    pub fn filter_by_year(&self, min_year: i32, inclusive: bool) -> (Corpus, YearFilterReport) {
        let mut report = YearFilterReport::default();
        let mut kept = Vec::new();
        for d in &self.docs {
            match d.year {
                None => report.missing_year += 1,
                Some(y) if y > min_year || (inclusive && y == min_year) => kept.push(d.clone()),
                Some(_) => report.excluded_by_year += 1,
            }
        }
        report.kept = kept.len();
        let corpus = Corpus::new(kept).expect("subset of a valid corpus is valid");
        (corpus, report)
    }
}

pub fn ingest<R: BufRead>(
    reader: R,
    ontology: Option<&OntologyGraph>,
    policy: UnknownLabelPolicy,
) -> Result<(Corpus, IngestReport), CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId(doc.doc_id));
        }
        if let Some(ont) = ontology {
            let before = doc.gold_concepts.len() + doc.gold_classes.len();
            report.unknown_concepts += check_labels(&mut doc.gold_concepts, |id| ont.is_concept(id), policy);
            report.unknown_classes += check_labels(&mut doc.gold_classes, |id| ont.is_class(id), policy);
            report.dropped_labels += before - doc.gold_concepts.len() - doc.gold_classes.len();
        }
        docs.push(doc);
    }
    if report.unknown_concepts + report.unknown_classes > 0 {
        log::warn!(
            "{} unknown gold concepts, {} unknown gold classes ({:?})",
            report.unknown_concepts,
            report.unknown_classes,
            policy
        );
    }
    let corpus = Corpus::new(docs)?;
    report.documents = corpus.len();
    Ok((corpus, report))
}

fn check_labels(
    labels: &mut Vec<ConceptId>,
    known: impl Fn(&str) -> bool,
    policy: UnknownLabelPolicy,
) -> usize {
    let unknown = labels.iter().filter(|l| !known(l.as_str())).count();
    if policy == UnknownLabelPolicy::Drop {
        labels.retain(|l| known(l.as_str()));
    }
    unknown
}

/// Labels of one kind across the corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Classes,
    Concepts,
}

impl LabelKind {
    pub fn labels<'a>(&self, doc: &'a Document) -> &'a [ConceptId] {
        match self {
            LabelKind::Classes => &doc.gold_classes,
            LabelKind::Concepts => &doc.gold_concepts,
        }
    }
}

impl std::str::FromStr for LabelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classes" => Ok(LabelKind::Classes),
            "concepts" => Ok(LabelKind::Concepts),
            other => Err(format!("unknown label kind {other:?}")),
        }
    }
}

/// Number of documents carrying each label.
pub fn label_document_counts(docs: &[Document], kind: LabelKind) -> BTreeMap<ConceptId, usize> {
    let mut counts = BTreeMap::new();
    for d in docs {
        let unique: std::collections::BTreeSet<&ConceptId> = kind.labels(d).iter().collect();
        for l in unique {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
    }
    counts
}
