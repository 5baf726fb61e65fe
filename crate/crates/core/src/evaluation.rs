//! Set-based precision/recall/F1, semantic set distance, expert judgment
//! metrics and label skew statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{label_document_counts, Document, LabelKind};
use crate::ontology::{ConceptId, OntologyError, SemanticDistance};
use crate::recognizer::KeywordSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("set distance needs non-empty sets")]
    EmptySet,
    #[error("no documents to aggregate")]
    NoDocuments,
    #[error("at least two expert sets required, got {0}")]
    TooFewExperts(usize),
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("annotator {annotator} left suggestions of {doc_id} unjudged: {unjudged:?}")]
    IncompleteJudgments {
        doc_id: String,
        annotator: String,
        unjudged: Vec<ConceptId>,
    },
    #[error("{verdict} verdict on {concept_id} in {doc_id}, which was not suggested")]
    NotSuggested {
        doc_id: String,
        concept_id: ConceptId,
        verdict: Verdict,
    },
    #[error("duplicate judgment ({doc_id}, {concept_id}, {annotator})")]
    DuplicateJudgment {
        doc_id: String,
        concept_id: ConceptId,
        annotator: String,
    },
    #[error("line {line}: malformed judgment: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("read error: {0}")]
    Io(String),
}

impl From<OntologyError> for EvalError {
    fn from(e: OntologyError) -> Self {
        match e {
            OntologyError::UnknownConcept(id) | OntologyError::UnknownClass(id) => EvalError::UnknownConcept(id),
            other => EvalError::UnknownConcept(other.to_string()),
        }
    }
}

/// Precision, recall and F1 with the confusion counts behind them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Prf {
    /// Both sides empty scores 1/1/1; exactly one side empty scores 0/0/0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        if tp + fp + fn_ == 0 {
            return Self {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                tp,
                fp,
                fn_,
            };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            tp,
            fp,
            fn_,
        }
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn prf<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> Prf {
    let tp = predicted.intersection(gold).count();
    Prf::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
}

/// Micro pools the counts; macro averages per-document P, R and F1 (counts
/// are summed in both modes).
pub fn aggregate(per_doc: &[Prf], mode: Averaging) -> Result<Prf, EvalError> {
    if per_doc.is_empty() {
        return Err(EvalError::NoDocuments);
    }
    let (tp, fp, fn_) = per_doc
        .iter()
        .fold((0, 0, 0), |(a, b, c), p| (a + p.tp, b + p.fp, c + p.fn_));
    Ok(match mode {
        Averaging::Micro => Prf::from_counts(tp, fp, fn_),
        Averaging::Macro => {
            let n = per_doc.len() as f64;
            Prf {
                precision: per_doc.iter().map(|p| p.precision).sum::<f64>() / n,
                recall: per_doc.iter().map(|p| p.recall).sum::<f64>() / n,
                f1: per_doc.iter().map(|p| p.f1).sum::<f64>() / n,
                tp,
                fp,
                fn_,
            }
        }
    })
}

/// `(mean_a min_b d(a,b) + mean_b min_a d(a,b)) / 2`.
pub fn set_distance<D: SemanticDistance + ?Sized>(
    a: &BTreeSet<ConceptId>,
    b: &BTreeSet<ConceptId>,
    graph: &D,
) -> Result<f64, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let mut d = vec![vec![0.0; b.len()]; a.len()];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            d[i][j] = graph.distance(x.as_str(), y.as_str())?;
        }
    }
    let a_side = d
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / a.len() as f64;
    let b_side = (0..b.len())
        .map(|j| d.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / b.len() as f64;
    Ok(0.5 * (a_side + b_side))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterExpertReport {
    /// Mean distance over all unordered expert pairs.
    pub expert_mean: f64,
    /// Mean distance between the model set and each expert set.
    pub model_mean: f64,
    /// `model_mean - expert_mean`.
    pub difference: f64,
    pub experts: usize,
}

pub fn inter_expert_report<D: SemanticDistance + ?Sized>(
    experts: &[BTreeSet<ConceptId>],
    model: &BTreeSet<ConceptId>,
    graph: &D,
) -> Result<InterExpertReport, EvalError> {
    if experts.len() < 2 {
        return Err(EvalError::TooFewExperts(experts.len()));
    }
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..experts.len() {
        for j in i + 1..experts.len() {
            pair_sum += set_distance(&experts[i], &experts[j], graph)?;
            pairs += 1;
        }
    }
    let mut model_sum = 0.0;
    for e in experts {
        model_sum += set_distance(model, e, graph)?;
    }
    let expert_mean = pair_sum / pairs as f64;
    let model_mean = model_sum / experts.len() as f64;
    Ok(InterExpertReport {
        expert_mean,
        model_mean,
        difference: model_mean - expert_mean,
        experts: experts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Appropriate,
    Wrong,
    Missing,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Appropriate => "appropriate",
            Verdict::Wrong => "wrong",
            Verdict::Missing => "missing",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub doc_id: String,
    pub concept_id: ConceptId,
    pub verdict: Verdict,
    pub annotator_id: String,
    pub timestamp: DateTime<FixedOffset>,
}

impl Judgment {
    pub fn key(&self) -> (&str, &ConceptId, &str) {
        (&self.doc_id, &self.concept_id, &self.annotator_id)
    }
}

pub fn read_judgments<R: BufRead>(reader: R) -> Result<Vec<Judgment>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Metrics of one annotator on one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocJudgmentReport {
    pub doc_id: String,
    pub annotator_id: String,
    pub prf: Prf,
    /// `None` when the suggestion or corrected set is empty.
    pub distance: Option<f64>,
    pub corrected: Vec<ConceptId>,
    pub wrong: usize,
    pub missing: usize,
}

/// Corrected-set metrics for every annotator who judged `suggested`.
/// Judgments of other documents are ignored.
pub fn judgment_metrics<D: SemanticDistance + ?Sized>(
    suggested: &KeywordSet,
    judgments: &[Judgment],
    graph: &D,
) -> Result<Vec<DocJudgmentReport>, EvalError> {
    let suggested_ids = suggested.ids();
    let mut by_annotator: BTreeMap<&str, Vec<&Judgment>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for j in judgments.iter().filter(|j| j.doc_id == suggested.doc_id) {
        if !seen.insert(j.key()) {
            return Err(EvalError::DuplicateJudgment {
                doc_id: j.doc_id.clone(),
                concept_id: j.concept_id.clone(),
                annotator: j.annotator_id.clone(),
            });
        }
        by_annotator.entry(&j.annotator_id).or_default().push(j);
    }
    let mut out = Vec::new();
    for (annotator, js) in by_annotator {
        let mut judged = BTreeSet::new();
        let mut wrong = BTreeSet::new();
        let mut missing = BTreeSet::new();
        for j in js {
            match j.verdict {
                Verdict::Appropriate | Verdict::Wrong => {
                    if !suggested_ids.contains(&j.concept_id) {
                        return Err(EvalError::NotSuggested {
                            doc_id: j.doc_id.clone(),
                            concept_id: j.concept_id.clone(),
                            verdict: j.verdict,
                        });
                    }
                    judged.insert(j.concept_id.clone());
                    if j.verdict == Verdict::Wrong {
                        wrong.insert(j.concept_id.clone());
                    }
                }
                Verdict::Missing => {
                    if !graph.contains(j.concept_id.as_str()) {
                        return Err(EvalError::UnknownConcept(j.concept_id.to_string()));
                    }
                    missing.insert(j.concept_id.clone());
                }
            }
        }
        let unjudged: Vec<ConceptId> = suggested_ids.difference(&judged).cloned().collect();
        if !unjudged.is_empty() {
            return Err(EvalError::IncompleteJudgments {
                doc_id: suggested.doc_id.clone(),
                annotator: annotator.to_owned(),
                unjudged,
            });
        }
        let corrected: BTreeSet<ConceptId> = suggested_ids.difference(&wrong).chain(&missing).cloned().collect();
        let distance = match set_distance(&suggested_ids, &corrected, graph) {
            Ok(d) => Some(d),
            Err(EvalError::EmptySet) => None,
            Err(e) => return Err(e),
        };
        out.push(DocJudgmentReport {
            doc_id: suggested.doc_id.clone(),
            annotator_id: annotator.to_owned(),
            prf: prf(&suggested_ids, &corrected),
            distance,
            corrected: corrected.into_iter().collect(),
            wrong: wrong.len(),
            missing: missing.len(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub documents: usize,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    /// Mean over documents with a defined distance.
    pub mean_distance: Option<f64>,
}

impl MetricsSummary {
    fn from_reports<'a>(reports: impl Iterator<Item = &'a DocJudgmentReport> + Clone) -> Option<Self> {
        let prfs: Vec<Prf> = reports.clone().map(|r| r.prf).collect();
        let distances: Vec<f64> = reports.filter_map(|r| r.distance).collect();
        Some(Self {
            documents: prfs.len(),
            micro: aggregate(&prfs, Averaging::Micro).ok()?,
            macro_: aggregate(&prfs, Averaging::Macro).ok()?,
            mean_distance: (!distances.is_empty()).then(|| distances.iter().sum::<f64>() / distances.len() as f64),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorSummary {
    pub annotator_id: String,
    #[serde(flatten)]
    pub metrics: MetricsSummary,
}

/// Per-annotator and pooled metrics over per-document reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgmentSummary {
    pub pooled: MetricsSummary,
    pub per_annotator: Vec<AnnotatorSummary>,
    pub per_document: Vec<DocJudgmentReport>,
}

/// `None` when there are no reports.
pub fn summarize_judgments(mut reports: Vec<DocJudgmentReport>) -> Option<JudgmentSummary> {
    reports.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id).then_with(|| a.doc_id.cmp(&b.doc_id)));
    let pooled = MetricsSummary::from_reports(reports.iter())?;
    let annotators: BTreeSet<&str> = reports.iter().map(|r| r.annotator_id.as_str()).collect();
    let per_annotator = annotators
        .into_iter()
        .map(|a| AnnotatorSummary {
            annotator_id: a.to_owned(),
            metrics: MetricsSummary::from_reports(reports.iter().filter(move |r| r.annotator_id == a))
                .expect("annotator has at least one report"),
        })
        .collect();
    Some(JudgmentSummary {
        pooled,
        per_annotator,
        per_document: reports,
    })
}

/// Per-document PRF of keyword sets against gold labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocEvaluation {
    pub doc_id: String,
    pub prf: Prf,
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldEvaluation {
    pub documents: usize,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub mean_distance: Option<f64>,
    /// Documents whose predicted or gold set was empty, so no distance.
    pub without_distance: usize,
    pub per_document: Vec<DocEvaluation>,
}

/// Compares predicted keyword sets with gold labels; documents without a
/// prediction count as empty predictions. `graph` enables set distances.
pub fn evaluate_against_gold<D: SemanticDistance + ?Sized>(
    predicted: &[KeywordSet],
    gold: &[(String, Vec<ConceptId>)],
    graph: Option<&D>,
) -> Result<GoldEvaluation, EvalError> {
    let by_doc: BTreeMap<&str, BTreeSet<ConceptId>> =
        predicted.iter().map(|k| (k.doc_id.as_str(), k.ids())).collect();
    let empty = BTreeSet::new();
    let mut per_document = Vec::with_capacity(gold.len());
    for (doc_id, labels) in gold {
        let g: BTreeSet<ConceptId> = labels.iter().cloned().collect();
        let p = by_doc.get(doc_id.as_str()).unwrap_or(&empty);
        let distance = match graph {
            Some(graph) if !p.is_empty() && !g.is_empty() => Some(set_distance(p, &g, graph)?),
            _ => None,
        };
        per_document.push(DocEvaluation {
            doc_id: doc_id.clone(),
            prf: prf(p, &g),
            distance,
        });
    }
    let prfs: Vec<Prf> = per_document.iter().map(|d| d.prf).collect();
    let distances: Vec<f64> = per_document.iter().filter_map(|d| d.distance).collect();
    Ok(GoldEvaluation {
        documents: per_document.len(),
        micro: aggregate(&prfs, Averaging::Micro)?,
        macro_: aggregate(&prfs, Averaging::Macro)?,
        mean_distance: (!distances.is_empty()).then(|| distances.iter().sum::<f64>() / distances.len() as f64),
        without_distance: per_document.len() - distances.len(),
        per_document,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: ConceptId,
    pub documents: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub kind: LabelKind,
    pub documents: usize,
    pub distinct_labels: usize,
    pub total_assignments: usize,
    /// Descending by document count, ties by label.
    pub histogram: Vec<LabelCount>,
}

pub fn class_distribution(docs: &[Document], kind: LabelKind) -> ClassDistribution {
    let mut histogram: Vec<LabelCount> = label_document_counts(docs, kind)
        .into_iter()
        .map(|(label, documents)| LabelCount { label, documents })
        .collect();
    histogram.sort_by(|a, b| b.documents.cmp(&a.documents).then_with(|| a.label.cmp(&b.label)));
    ClassDistribution {
        kind,
        documents: docs.len(),
        distinct_labels: histogram.len(),
        total_assignments: histogram.iter().map(|h| h.documents).sum(),
        histogram,
    }
}
