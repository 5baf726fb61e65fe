use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{FeatureError, SparseVector};

/// Term index with document frequencies. Indices follow lexicographic term
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "VocabularyRecord", try_from = "VocabularyRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u32>,
    n_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    n_docs: usize,
    terms: Vec<(String, u32)>,
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        Self {
            n_docs: v.n_docs,
            terms: v.terms.into_iter().zip(v.df).collect(),
        }
    }
}

impl TryFrom<VocabularyRecord> for Vocabulary {
    type Error = String;

    fn try_from(r: VocabularyRecord) -> Result<Self, Self::Error> {
        if r.terms.iter().any(|(_, df)| *df == 0) {
            return Err("vocabulary term with zero document frequency".into());
        }
        if r.terms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("vocabulary terms not in strictly increasing order".into());
        }
        Ok(Self::from_parts(r.terms, r.n_docs))
    }
}

impl Vocabulary {
    /// Keeps terms occurring in at least `min_df` of the tokenized documents.
    pub fn build<S: AsRef<str>>(docs: &[Vec<S>], min_df: u32) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for doc in docs {
            let unique: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let kept: Vec<(String, u32)> = df
            .into_iter()
            .filter(|(_, n)| *n >= min_df.max(1))
            .map(|(t, n)| (t.to_owned(), n))
            .collect();
        Ok(Self::from_parts(kept, docs.len()))
    }

    fn from_parts(terms_df: Vec<(String, u32)>, n_docs: usize) -> Self {
        let (terms, df): (Vec<String>, Vec<u32>) = terms_df.into_iter().unzip();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            terms,
            index,
            df,
            n_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn df(&self, index: u32) -> u32 {
        self.df[index as usize]
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: u32) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + f64::from(self.df(index)))).ln() + 1.0
    }

    /// Maps tokens to indices, skipping out-of-vocabulary terms.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.index_of(t.as_ref())).collect()
    }

    /// `#docs<TAB>N` header, then `term<TAB>index<TAB>df` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#docs\t{}\n", self.n_docs);
        for (i, t) in self.terms.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}\t{}", self.df[i]);
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, FeatureError> {
        let mut n_docs = None;
        let mut rows: Vec<(String, u32)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let bad = || FeatureError::Malformed(format!("vocabulary line {}", lineno + 1));
            if let Some(rest) = line.strip_prefix("#docs\t") {
                n_docs = Some(rest.trim().parse::<usize>().map_err(|_| bad())?);
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [term, index, df] = cols[..] else {
                return Err(bad());
            };
            let index: usize = index.parse().map_err(|_| bad())?;
            let df: u32 = df.parse().map_err(|_| bad())?;
            if index != rows.len() || df == 0 {
                return Err(bad());
            }
            rows.push((term.to_owned(), df));
        }
        let n_docs = n_docs.ok_or_else(|| FeatureError::Malformed("missing #docs header".into()))?;
        Ok(Self::from_parts(rows, n_docs))
    }
}

/// Raw term frequency times smoothed idf, L2-normalized.
pub fn tfidf<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
    for i in vocab.encode(tokens) {
        *tf.entry(i).or_insert(0) += 1;
    }
    let mut v = SparseVector::from_pairs(
        tf.into_iter()
            .map(|(i, n)| (i, f64::from(n) * vocab.idf(i)))
            .collect(),
    );
    v.normalize();
    v
}
