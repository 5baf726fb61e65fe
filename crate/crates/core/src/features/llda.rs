//! Labeled LDA trained by collapsed Gibbs sampling.
//!
//! Topics are the label ids. During training a token may only take a topic
//! from its own document's label set; at inference the topic-word counts
//! are frozen and every topic is allowed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const LLDA_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LldaParams {
    /// Document-topic prior; `None` means `50 / |T|`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: u32,
    pub seed: u64,
    /// Gibbs sweeps per document at inference time.
    pub inference_iterations: u32,
}

impl Default for LldaParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed: 42,
            inference_iterations: 50,
        }
    }
}

impl LldaParams {
    pub fn alpha_for(&self, num_topics: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / num_topics as f64)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidParameter(m.to_owned()));
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return bad("alpha must be positive");
            }
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.inference_iterations == 0 {
            return bad("inference_iterations must be at least 1");
        }
        Ok(())
    }
}

/// A training document as vocabulary indices plus label (topic) indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTokens {
    pub doc_id: String,
    pub tokens: Vec<u32>,
    pub labels: Vec<u32>,
}

/// Mutable sampler state. Exposed so callers can observe the chain between
/// sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsSampler {
    labels: Vec<String>,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    docs: Vec<LabeledTokens>,
    z: Vec<Vec<u32>>,
    n_tw: Vec<Vec<u32>>,
    n_t: Vec<u32>,
    n_dt: Vec<Vec<u32>>,
    rng: ChaCha8Rng,
    sweeps: u32,
}

impl GibbsSampler {
    /// Validates the documents and draws the initial assignment of every
    /// token uniformly from its document's labels.
    pub fn new(
        docs: Vec<LabeledTokens>,
        labels: Vec<String>,
        vocab_size: usize,
        params: &LldaParams,
    ) -> Result<Self, FeatureError> {
        params.validate()?;
        if labels.is_empty() {
            return Err(FeatureError::InvalidParameter("no topics".into()));
        }
        let num_topics = labels.len();
        let mut docs = docs;
        for d in &mut docs {
            d.labels.sort_unstable();
            d.labels.dedup();
            if d.labels.is_empty() {
                return Err(FeatureError::UnlabeledDocument(d.doc_id.clone()));
            }
            if d.labels.iter().any(|&l| l as usize >= num_topics) {
                return Err(FeatureError::InvalidParameter(format!(
                    "document {} names a topic outside 0..{num_topics}",
                    d.doc_id
                )));
            }
            if d.tokens.iter().any(|&w| w as usize >= vocab_size) {
                return Err(FeatureError::InvalidParameter(format!(
                    "document {} has a token outside 0..{vocab_size}",
                    d.doc_id
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut n_tw = vec![vec![0u32; vocab_size]; num_topics];
        let mut n_t = vec![0u32; num_topics];
        let mut n_dt = Vec::with_capacity(docs.len());
        let mut z = Vec::with_capacity(docs.len());
        for d in &docs {
            let mut counts = vec![0u32; num_topics];
            let zd: Vec<u32> = d
                .tokens
                .iter()
                .map(|&w| {
                    let t = if d.labels.len() == 1 {
                        d.labels[0]
                    } else {
                        d.labels[rng.gen_range(0..d.labels.len())]
                    };
                    n_tw[t as usize][w as usize] += 1;
                    n_t[t as usize] += 1;
                    counts[t as usize] += 1;
                    t
                })
                .collect();
            n_dt.push(counts);
            z.push(zd);
        }
        Ok(Self {
            alpha: params.alpha_for(num_topics),
            beta: params.beta,
            seed: params.seed,
            labels,
            vocab_size,
            docs,
            z,
            n_tw,
            n_t,
            n_dt,
            rng,
            sweeps: 0,
        })
    }

    /// One pass over every token, resampling its topic among its
    /// document's labels.
    pub fn sweep(&mut self) {
        let v_beta = self.vocab_size as f64 * self.beta;
        let mut weights: Vec<f64> = Vec::new();
        for (d, doc) in self.docs.iter().enumerate() {
            if doc.labels.len() == 1 {
                continue;
            }
            for (i, &w) in doc.tokens.iter().enumerate() {
                let w = w as usize;
                let old = self.z[d][i] as usize;
                self.n_tw[old][w] -= 1;
                self.n_t[old] -= 1;
                self.n_dt[d][old] -= 1;

                weights.clear();
                let mut total = 0.0;
                for &t in &doc.labels {
                    let t = t as usize;
                    total += (f64::from(self.n_dt[d][t]) + self.alpha)
                        * (f64::from(self.n_tw[t][w]) + self.beta)
                        / (f64::from(self.n_t[t]) + v_beta);
                    weights.push(total);
                }
                let u = self.rng.gen::<f64>() * total;
                let k = weights.iter().position(|&c| u < c).unwrap_or(weights.len() - 1);
                let new = doc.labels[k] as usize;

                self.z[d][i] = new as u32;
                self.n_tw[new][w] += 1;
                self.n_t[new] += 1;
                self.n_dt[d][new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> u32 {
        self.sweeps
    }

    pub fn docs(&self) -> &[LabeledTokens] {
        &self.docs
    }

    /// Current topic of every token, per document.
    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    /// Recounts everything from the assignments and compares with the
    /// maintained counts; also checks the label constraint.
    pub fn check_consistency(&self) -> Result<(), String> {
        let num_topics = self.labels.len();
        let mut n_tw = vec![vec![0u32; self.vocab_size]; num_topics];
        let mut n_t = vec![0u32; num_topics];
        for (d, doc) in self.docs.iter().enumerate() {
            let mut n_dt = vec![0u32; num_topics];
            if self.z[d].len() != doc.tokens.len() {
                return Err(format!("document {} lost tokens", doc.doc_id));
            }
            for (&w, &t) in doc.tokens.iter().zip(&self.z[d]) {
                if doc.labels.binary_search(&t).is_err() {
                    return Err(format!("document {} token assigned non-label topic {t}", doc.doc_id));
                }
                n_tw[t as usize][w as usize] += 1;
                n_t[t as usize] += 1;
                n_dt[t as usize] += 1;
            }
            if n_dt != self.n_dt[d] {
                return Err(format!("document {} doc-topic counts drifted", doc.doc_id));
            }
            if self.n_dt[d].iter().map(|&c| c as usize).sum::<usize>() != doc.tokens.len() {
                return Err(format!("document {} doc-topic total differs from length", doc.doc_id));
            }
        }
        if n_tw != self.n_tw {
            return Err("topic-word counts drifted".into());
        }
        if n_t != self.n_t {
            return Err("topic totals drifted".into());
        }
        for (t, row) in self.n_tw.iter().enumerate() {
            if row.iter().map(|&c| u64::from(c)).sum::<u64>() != u64::from(self.n_t[t]) {
                return Err(format!("topic {t} row sum differs from its total"));
            }
        }
        Ok(())
    }

    pub fn into_model(self) -> LldaModel {
        LldaModel {
            version: LLDA_FORMAT_VERSION,
            labels: self.labels,
            vocab_size: self.vocab_size,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            iterations: self.sweeps,
            doc_ids: self.docs.into_iter().map(|d| d.doc_id).collect(),
            topic_word: self.n_tw,
            topic_totals: self.n_t,
            doc_topic: self.n_dt,
        }
    }
}

/// Trains with `params.iterations` sweeps and verifies the final state.
pub fn train_llda(
    docs: Vec<LabeledTokens>,
    labels: Vec<String>,
    vocab_size: usize,
    params: &LldaParams,
) -> Result<LldaModel, FeatureError> {
    let mut sampler = GibbsSampler::new(docs, labels, vocab_size, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    if let Err(e) = sampler.check_consistency() {
        return Err(FeatureError::Malformed(format!("sampler state inconsistent: {e}")));
    }
    log::debug!("llda: {} sweeps, counts consistent", sampler.sweeps());
    Ok(sampler.into_model())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LldaModel {
    pub version: u32,
    pub labels: Vec<String>,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: u32,
    pub doc_ids: Vec<String>,
    /// `topic_word[t][w]`.
    pub topic_word: Vec<Vec<u32>>,
    pub topic_totals: Vec<u32>,
    /// `doc_topic[d][t]` for the training documents.
    pub doc_topic: Vec<Vec<u32>>,
}

impl LldaModel {
    pub fn num_topics(&self) -> usize {
        self.labels.len()
    }

    /// Topic with the most assignments of `word`; ties go to the lower index.
    pub fn dominant_topic(&self, word: u32) -> Option<usize> {
        let mut best: Option<(usize, u32)> = None;
        for (t, row) in self.topic_word.iter().enumerate() {
            let c = row[word as usize];
            if c > 0 && best.map_or(true, |(_, b)| c > b) {
                best = Some((t, c));
            }
        }
        best.map(|(t, _)| t)
    }

    /// Label distribution of a new document. Out-of-range tokens are
    /// ignored; an empty document gets the uniform distribution.
    pub fn infer_topics(&self, tokens: &[u32], iterations: u32, seed: u64) -> Vec<f64> {
        let num_topics = self.num_topics();
        let tokens: Vec<usize> = tokens
            .iter()
            .map(|&w| w as usize)
            .filter(|&w| w < self.vocab_size)
            .collect();
        if tokens.is_empty() {
            return vec![1.0 / num_topics as f64; num_topics];
        }
        let v_beta = self.vocab_size as f64 * self.beta;
        let phi: Vec<Vec<f64>> = tokens
            .iter()
            .map(|&w| {
                (0..num_topics)
                    .map(|t| {
                        (f64::from(self.topic_word[t][w]) + self.beta)
                            / (f64::from(self.topic_totals[t]) + v_beta)
                    })
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_dt = vec![0u32; num_topics];
        let mut z: Vec<usize> = tokens
            .iter()
            .map(|_| {
                let t = rng.gen_range(0..num_topics);
                n_dt[t] += 1;
                t
            })
            .collect();
        let mut cumulative = vec![0.0; num_topics];
        for _ in 0..iterations {
            for i in 0..tokens.len() {
                n_dt[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..num_topics {
                    total += (f64::from(n_dt[t]) + self.alpha) * phi[i][t];
                    cumulative[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let t = cumulative.iter().position(|&c| u < c).unwrap_or(num_topics - 1);
                z[i] = t;
                n_dt[t] += 1;
            }
        }
        let denom = tokens.len() as f64 + num_topics as f64 * self.alpha;
        n_dt.iter().map(|&c| (f64::from(c) + self.alpha) / denom).collect()
    }

    /// Structural checks applied after loading.
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::Malformed(m));
        let t = self.num_topics();
        if t == 0 {
            return bad("model has no topics".into());
        }
        if self.topic_word.len() != t || self.topic_totals.len() != t {
            return bad("topic count mismatch".into());
        }
        for (k, row) in self.topic_word.iter().enumerate() {
            if row.len() != self.vocab_size {
                return bad(format!("topic {k} row has wrong width"));
            }
            if row.iter().map(|&c| u64::from(c)).sum::<u64>() != u64::from(self.topic_totals[k]) {
                return bad(format!("topic {k} row sum differs from its total"));
            }
        }
        if self.doc_topic.len() != self.doc_ids.len() || self.doc_topic.iter().any(|r| r.len() != t) {
            return bad("doc-topic matrix has wrong shape".into());
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return bad("hyperparameters must be positive".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FeatureError::Malformed(e.to_string()))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(LLDA_FORMAT_VERSION)) {
            return Err(FeatureError::UnsupportedVersion(version.unwrap_or(0) as u32));
        }
        let model: Self = serde_json::from_value(value).map_err(|e| FeatureError::Malformed(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}
