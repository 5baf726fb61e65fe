//! Document features: TF-IDF vectors and Labeled LDA label distributions.

mod llda;
mod sparse;
mod tfidf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llda::{train_llda, GibbsSampler, LabeledTokens, LldaModel, LldaParams, LLDA_FORMAT_VERSION};
pub use sparse::SparseVector;
pub use tfidf::{tfidf, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("training document {0} has no labels")]
    UnlabeledDocument(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed feature data: {0}")]
    Malformed(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Tfidf,
    Llda,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Llda => "llda",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tfidf" => Ok(FeatureKind::Tfidf),
            "llda" => Ok(FeatureKind::Llda),
            other => Err(format!("unknown feature set {other:?} (expected tfidf or llda)")),
        }
    }
}

/// Derives a per-document seed from a run seed and a stable key (FNV-1a).
pub fn stable_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.rotate_left(17)
}

/// A fitted feature extractor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureModel {
    Tfidf {
        vocabulary: Vocabulary,
    },
    Llda {
        vocabulary: Vocabulary,
        model: LldaModel,
        inference_iterations: u32,
        seed: u64,
    },
}

impl FeatureModel {
    pub fn fit_tfidf(token_docs: &[Vec<String>], min_df: u32) -> Result<Self, FeatureError> {
        Ok(FeatureModel::Tfidf {
            vocabulary: Vocabulary::build(token_docs, min_df)?,
        })
    }

    /// `labels[i]` indexes into `label_names` for document `i`.
    pub fn fit_llda(
        doc_ids: &[String],
        token_docs: &[Vec<String>],
        labels: &[Vec<u32>],
        label_names: Vec<String>,
        min_df: u32,
        params: &LldaParams,
    ) -> Result<Self, FeatureError> {
        let vocabulary = Vocabulary::build(token_docs, min_df)?;
        let docs = doc_ids
            .iter()
            .zip(token_docs)
            .zip(labels)
            .map(|((id, toks), labels)| LabeledTokens {
                doc_id: id.clone(),
                tokens: vocabulary.encode(toks),
                labels: labels.clone(),
            })
            .collect();
        let model = train_llda(docs, label_names, vocabulary.len(), params)?;
        Ok(FeatureModel::Llda {
            vocabulary,
            model,
            inference_iterations: params.inference_iterations,
            seed: params.seed,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureModel::Tfidf { .. } => FeatureKind::Tfidf,
            FeatureModel::Llda { .. } => FeatureKind::Llda,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        match self {
            FeatureModel::Tfidf { vocabulary } | FeatureModel::Llda { vocabulary, .. } => vocabulary,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            FeatureModel::Tfidf { vocabulary } => vocabulary.len(),
            FeatureModel::Llda { model, .. } => model.num_topics(),
        }
    }

    /// Feature vector of one document; `doc_key` seeds LLDA inference.
    pub fn extract<S: AsRef<str>>(&self, doc_key: &str, tokens: &[S]) -> SparseVector {
        match self {
            FeatureModel::Tfidf { vocabulary } => tfidf(tokens, vocabulary),
            FeatureModel::Llda {
                vocabulary,
                model,
                inference_iterations,
                seed,
            } => {
                let ids = vocabulary.encode(tokens);
                SparseVector::from_dense(&model.infer_topics(&ids, *inference_iterations, stable_seed(*seed, doc_key)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_kind_parses() {
        assert_eq!("llda".parse::<FeatureKind>().unwrap(), FeatureKind::Llda);
        assert!("svm".parse::<FeatureKind>().is_err());
        assert_eq!(FeatureKind::Tfidf.to_string(), "tfidf");
    }

    #[test]
    fn stable_seed_depends_on_key() {
        assert_eq!(stable_seed(1, "a"), stable_seed(1, "a"));
        assert_ne!(stable_seed(1, "a"), stable_seed(1, "b"));
        assert_ne!(stable_seed(1, "a"), stable_seed(2, "a"));
    }

    #[test]
    fn feature_model_json_round_trip() {
        let docs: Vec<Vec<String>> = vec![vec!["a".into(), "b".into()], vec!["c".into()]];
        let m = FeatureModel::fit_tfidf(&docs, 1).unwrap();
        let back: FeatureModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.dimension(), 3);

        let ids = vec!["d1".to_string(), "d2".to_string()];
        let llda = FeatureModel::fit_llda(
            &ids,
            &docs,
            &[vec![0], vec![1]],
            vec!["x".into(), "y".into()],
            1,
            &LldaParams {
                iterations: 3,
                inference_iterations: 3,
                ..LldaParams::default()
            },
        )
        .unwrap();
        assert_eq!(llda.dimension(), 2);
        let v = llda.extract("d9", &["a"]);
        assert!((v.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let back: FeatureModel = serde_json::from_str(&serde_json::to_string(&llda).unwrap()).unwrap();
        assert_eq!(back, llda);
    }
}
