//! Merges classifier and ontology keyword sets around their intersection.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ontology::{ConceptId, OntologyError, SemanticDistance};
use crate::recognizer::{Keyword, KeywordSet, Provenance};

pub const DEFAULT_FALLBACK_N: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombineError {
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("tau {0} outside [0, 1]")]
    InvalidTau(f64),
    #[error("keyword sets belong to different documents ({0} and {1})")]
    DocumentMismatch(String, String),
}

impl From<OntologyError> for CombineError {
    fn from(e: OntologyError) -> Self {
        match e {
            OntologyError::UnknownConcept(id) | OntologyError::UnknownClass(id) => CombineError::UnknownConcept(id),
            other => CombineError::UnknownConcept(other.to_string()),
        }
    }
}

/// Keeps the intersection plus every union member within `tau` of it. With
/// an empty intersection, the top `fallback_n` of each input are kept
/// instead. Kept scores are the maximum over the inputs.
pub fn combine<D: SemanticDistance + ?Sized>(
    ml: &KeywordSet,
    onto: &KeywordSet,
    graph: &D,
    tau: f64,
    fallback_n: usize,
) -> Result<KeywordSet, CombineError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(CombineError::InvalidTau(tau));
    }
    if ml.doc_id != onto.doc_id {
        return Err(CombineError::DocumentMismatch(ml.doc_id.clone(), onto.doc_id.clone()));
    }
    let mut best: BTreeMap<&ConceptId, f64> = BTreeMap::new();
    for k in ml.keywords.iter().chain(&onto.keywords) {
        if !graph.contains(k.concept_id.as_str()) {
            return Err(CombineError::UnknownConcept(k.concept_id.to_string()));
        }
        let s = best.entry(&k.concept_id).or_insert(f64::NEG_INFINITY);
        *s = s.max(k.score);
    }
    let ml_ids: BTreeSet<&ConceptId> = ml.keywords.iter().map(|k| &k.concept_id).collect();
    let intersection: Vec<&ConceptId> = onto
        .keywords
        .iter()
        .map(|k| &k.concept_id)
        .filter(|id| ml_ids.contains(id))
        .collect();

    let kept: BTreeSet<&ConceptId> = if intersection.is_empty() {
        ml.keywords
            .iter()
            .take(fallback_n)
            .chain(onto.keywords.iter().take(fallback_n))
            .map(|k| &k.concept_id)
            .collect()
    } else {
        let core: BTreeSet<&ConceptId> = intersection.into_iter().collect();
        let mut kept = core.clone();
        for &id in best.keys() {
            if core.contains(id) {
                continue;
            }
            let mut nearest = f64::INFINITY;
            for &i in &core {
                nearest = nearest.min(graph.distance(id.as_str(), i.as_str())?);
            }
            if nearest <= tau {
                kept.insert(id);
            }
        }
        kept
    };

    let keywords = kept
        .into_iter()
        .map(|id| Keyword {
            concept_id: id.clone(),
            score: best[id],
            provenance: Provenance::Combined,
            hops: 0,
        })
        .collect();
    Ok(KeywordSet::new(ml.doc_id.clone(), keywords))
}
