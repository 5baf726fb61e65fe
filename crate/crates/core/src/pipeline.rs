//! Document-level classification: label projection, feature fitting, OvR
//! training and keyword output.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{project_labels, split_indices, train_ovr, ClassifierError, LinearModel, TrainConfig};
use crate::corpus::{Document, LabelKind};
use crate::evaluation::{evaluate_against_gold, EvalError, GoldEvaluation};
use crate::features::{FeatureError, FeatureKind, FeatureModel, LldaParams};
use crate::ontology::{ConceptId, OntologyGraph};
use crate::recognizer::{Keyword, KeywordSet, Provenance};
use crate::textproc::TextConfig;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("class labels at a level need an ontology with a classification hierarchy")]
    MissingOntology,
    #[error("no training document carries a label")]
    NoLabels,
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("unsupported bundle version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSetup {
    pub label_kind: LabelKind,
    /// Projects class labels to this hierarchy level; `None` uses them as is.
    pub level: Option<u32>,
    pub features: FeatureKind,
    pub min_df: u32,
    pub text: TextConfig,
    pub llda: LldaParams,
    pub train: TrainConfig,
}

impl Default for ClassificationSetup {
    fn default() -> Self {
        Self {
            label_kind: LabelKind::Classes,
            level: Some(1),
            features: FeatureKind::Tfidf,
            min_df: 1,
            text: TextConfig::english(),
            llda: LldaParams::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Gold labels of `doc` as the setup sees them.
pub fn target_labels(
    doc: &Document,
    ontology: Option<&OntologyGraph>,
    setup: &ClassificationSetup,
) -> Result<Vec<ConceptId>, PipelineError> {
    let raw = setup.label_kind.labels(doc);
    match (setup.label_kind, setup.level) {
        (LabelKind::Classes, Some(level)) => {
            let ont = ontology.ok_or(PipelineError::MissingOntology)?;
            Ok(project_labels(raw, ont, level)?)
        }
        _ => Ok(raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierBundle {
    pub version: u32,
    pub setup: ClassificationSetup,
    pub features: FeatureModel,
    pub model: LinearModel,
}

fn doc_terms(docs: &[Document], text: &TextConfig) -> Vec<Vec<String>> {
    docs.par_iter().map(|d| text.terms(&d.text())).collect()
}

pub fn train_classifier(
    docs: &[Document],
    ontology: Option<&OntologyGraph>,
    setup: &ClassificationSetup,
) -> Result<ClassifierBundle, PipelineError> {
    setup.train.validate()?;
    let labels: Vec<Vec<ConceptId>> = docs
        .iter()
        .map(|d| target_labels(d, ontology, setup))
        .collect::<Result<_, _>>()?;
    let terms = doc_terms(docs, &setup.text);
    let features = match setup.features {
        FeatureKind::Tfidf => FeatureModel::fit_tfidf(&terms, setup.min_df)?,
        FeatureKind::Llda => {
            let names: Vec<ConceptId> = labels.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            if names.is_empty() {
                return Err(PipelineError::NoLabels);
            }
            // LLDA needs at least one label per training document.
            let keep: Vec<usize> = (0..docs.len()).filter(|&i| !labels[i].is_empty()).collect();
            let ids: Vec<String> = keep.iter().map(|&i| docs[i].doc_id.clone()).collect();
            let toks: Vec<Vec<String>> = keep.iter().map(|&i| terms[i].clone()).collect();
            let topic_ids: Vec<Vec<u32>> = keep
                .iter()
                .map(|&i| {
                    labels[i]
                        .iter()
                        .map(|l| names.binary_search(l).expect("label collected above") as u32)
                        .collect()
                })
                .collect();
            let names = names.into_iter().map(String::from).collect();
            FeatureModel::fit_llda(&ids, &toks, &topic_ids, names, setup.min_df, &setup.llda)?
        }
    };
    let xs: Vec<_> = docs
        .par_iter()
        .zip(&terms)
        .map(|(d, t)| features.extract(&d.doc_id, t))
        .collect();
    let model = train_ovr(&xs, &labels, features.dimension(), &setup.train)?;
    Ok(ClassifierBundle {
        version: BUNDLE_FORMAT_VERSION,
        setup: setup.clone(),
        features,
        model,
    })
}

impl ClassifierBundle {
    /// Predicted labels as a keyword set scored by margin.
    pub fn predict(&self, doc: &Document) -> Result<KeywordSet, PipelineError> {
        let terms = self.setup.text.terms(&doc.text());
        let x = self.features.extract(&doc.doc_id, &terms);
        let keywords = self
            .model
            .predict(&x)?
            .into_iter()
            .map(|s| Keyword {
                concept_id: s.class,
                score: s.margin,
                provenance: Provenance::Classifier,
                hops: 0,
            })
            .collect();
        Ok(KeywordSet::new(doc.doc_id.clone(), keywords))
    }

    pub fn predict_all(&self, docs: &[Document]) -> Result<Vec<KeywordSet>, PipelineError> {
        docs.par_iter().map(|d| self.predict(d)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PipelineError::Malformed(e.to_string()))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(BUNDLE_FORMAT_VERSION)) {
            return Err(PipelineError::UnsupportedVersion(version.unwrap_or(0) as u32));
        }
        let bundle: Self = serde_json::from_value(value).map_err(|e| PipelineError::Malformed(e.to_string()))?;
        bundle.model.validate()?;
        if bundle.model.dimension != bundle.features.dimension() {
            return Err(PipelineError::Malformed("model and feature dimensions differ".into()));
        }
        Ok(bundle)
    }
}

/// Outcome of one split-train-test run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRun {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub evaluation: GoldEvaluation,
}

/// Splits by `setup.train.split_ratio` and seed, trains, and scores the
/// held-out documents against their target labels.
pub fn train_and_evaluate(
    docs: &[Document],
    ontology: Option<&OntologyGraph>,
    setup: &ClassificationSetup,
) -> Result<(ClassifierBundle, SplitRun), PipelineError> {
    let (train_idx, test_idx) = split_indices(docs.len(), setup.train.split_ratio, setup.train.seed)?;
    let train: Vec<Document> = train_idx.iter().map(|&i| docs[i].clone()).collect();
    let test: Vec<Document> = test_idx.iter().map(|&i| docs[i].clone()).collect();
    let bundle = train_classifier(&train, ontology, setup)?;
    let predicted = bundle.predict_all(&test)?;
    let gold: Vec<(String, Vec<ConceptId>)> = test
        .iter()
        .map(|d| Ok((d.doc_id.clone(), target_labels(d, ontology, setup)?)))
        .collect::<Result<_, PipelineError>>()?;
    let evaluation = evaluate_against_gold::<OntologyGraph>(&predicted, &gold, None)?;
    let run = SplitRun {
        train_ids: train.into_iter().map(|d| d.doc_id).collect(),
        test_ids: test.into_iter().map(|d| d.doc_id).collect(),
        evaluation,
    };
    Ok((bundle, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::flat_corpus;

    #[test]
    fn flat_corpus_round_trip() {
        let (ont, docs) = flat_corpus(60, 3, 1);
        let setup = ClassificationSetup::default();
        let (bundle, run) = train_and_evaluate(&docs, Some(&ont), &setup).unwrap();
        assert_eq!(run.train_ids.len() + run.test_ids.len(), 60);
        assert!(run.evaluation.micro.f1 > 0.8, "{:?}", run.evaluation.micro);
        let back = ClassifierBundle::from_json(&bundle.to_json()).unwrap();
        assert_eq!(back.predict(&docs[0]).unwrap(), bundle.predict(&docs[0]).unwrap());
    }

    #[test]
    fn class_levels_need_ontology() {
        let (_, docs) = flat_corpus(4, 2, 1);
        assert_eq!(
            target_labels(&docs[0], None, &ClassificationSetup::default()).unwrap_err(),
            PipelineError::MissingOntology
        );
    }
}
