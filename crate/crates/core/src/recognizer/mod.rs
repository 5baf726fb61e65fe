//! Concept recognition and annotation expansion.
//!
//! A [`Matcher`] holds the stemmed token sequences of every concept label
//! (weight 1.0) and, optionally, the salient single-token neighborhood terms
//! of enriched concepts (weight 0.5), compiled into a token-level
//! Aho-Corasick automaton. [`recognize`] finds all occurrences in a document,
//! keeps the longest (then leftmost) of overlapping ones and groups the
//! survivors per concept. [`expand`] spreads the direct evidence over the
//! enriched union graph with exponential decay per hop.

mod automaton;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::enrichment::EnrichedOntology;
use crate::ontology::ConceptId;
use crate::textproc::{tokenize, TextConfig};
use automaton::TokenAutomaton;

pub const LABEL_WEIGHT: f64 = 1.0;
pub const NEIGHBORHOOD_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecognizerError {
    #[error("pattern dictionary is empty")]
    EmptyDictionary,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: malformed keyword set: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("read error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternSource {
    Label,
    Neighborhood,
}

/// One dictionary row: a token sequence owned by a concept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionaryPattern {
    pub tokens: Vec<String>,
    pub concept_id: ConceptId,
    pub weight: f64,
    pub source: PatternSource,
}

#[derive(Clone, Debug)]
struct Owner {
    concept: ConceptId,
    weight: f64,
    source: PatternSource,
}

#[derive(Clone, Debug)]
pub struct Matcher {
    text: TextConfig,
    vocab: HashMap<String, u32>,
    sequences: Vec<Vec<String>>,
    owners: Vec<Vec<Owner>>,
    automaton: TokenAutomaton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatcherParams {
    pub use_neighborhood_terms: bool,
    pub min_term_weight: f64,
}

impl Default for MatcherParams {
    fn default() -> Self {
        Self {
            use_neighborhood_terms: true,
            min_term_weight: 0.05,
        }
    }
}

/// Compiles the pattern dictionary of an enriched ontology.
pub fn build_matcher(
    eo: &EnrichedOntology,
    text: &TextConfig,
    params: &MatcherParams,
) -> Result<Matcher, RecognizerError> {
    // (sequence, concept) -> strongest (weight, source)
    let mut rows: BTreeMap<(Vec<String>, ConceptId), (f64, PatternSource)> = BTreeMap::new();
    let mut add = |tokens: Vec<String>, concept: &ConceptId, weight: f64, source: PatternSource| {
        if tokens.is_empty() {
            return;
        }
        let slot = rows.entry((tokens, concept.clone())).or_insert((weight, source));
        if weight > slot.0 {
            *slot = (weight, source);
        }
    };

    for c in eo.base().concepts() {
        for label in c.labels() {
            add(text.terms(label), &c.id, LABEL_WEIGHT, PatternSource::Label);
        }
    }
    if params.use_neighborhood_terms {
        for ec in eo.enriched_concepts() {
            for term in ec.salient_terms(params.min_term_weight) {
                add(vec![term.to_owned()], &ec.concept_id, NEIGHBORHOOD_WEIGHT, PatternSource::Neighborhood);
            }
        }
    }
    if rows.is_empty() {
        return Err(RecognizerError::EmptyDictionary);
    }

    let mut vocab: HashMap<String, u32> = HashMap::new();
    let mut sequences: Vec<Vec<String>> = Vec::new();
    let mut owners: Vec<Vec<Owner>> = Vec::new();
    let mut encoded: Vec<Vec<u32>> = Vec::new();
    for ((tokens, concept), (weight, source)) in rows {
        if sequences.last() != Some(&tokens) {
            let ids = tokens
                .iter()
                .map(|t| {
                    let next = vocab.len() as u32;
                    *vocab.entry(t.clone()).or_insert(next)
                })
                .collect();
            encoded.push(ids);
            sequences.push(tokens);
            owners.push(Vec::new());
        }
        owners.last_mut().expect("pushed above").push(Owner {
            concept,
            weight,
            source,
        });
    }
    let automaton = TokenAutomaton::build(&encoded);
    log::debug!(
        "matcher: {} sequences, {} automaton states",
        sequences.len(),
        automaton.state_count()
    );
    Ok(Matcher {
        text: text.clone(),
        vocab,
        sequences,
        owners,
        automaton,
    })
}

impl Matcher {
    pub fn text_config(&self) -> &TextConfig {
        &self.text
    }

    /// All dictionary rows ordered by token sequence, then concept id.
    pub fn dictionary(&self) -> Vec<DictionaryPattern> {
        self.sequences
            .iter()
            .zip(&self.owners)
            .flat_map(|(seq, owners)| {
                owners.iter().map(move |o| DictionaryPattern {
                    tokens: seq.clone(),
                    concept_id: o.concept.clone(),
                    weight: o.weight,
                    source: o.source,
                })
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.owners.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectAnnotation {
    pub concept_id: ConceptId,
    /// Character offsets into [`Document::text`], ordered.
    pub spans: Vec<(usize, usize)>,
    pub match_count: u32,
    /// Sum of the pattern weights of all matches.
    pub evidence: f64,
}

/// Direct annotations of `text`, ordered by concept id.
pub fn recognize_text(m: &Matcher, text: &str) -> Vec<DirectAnnotation> {
    let tokens = tokenize(text, &m.text);
    let ids: Vec<Option<u32>> = tokens.iter().map(|t| m.vocab.get(&t.term).copied()).collect();
    let mut found = m.automaton.find_all(&ids);

    // longest first, then leftmost; accept if no token is already covered
    found.sort_by(|a, b| b.len.cmp(&a.len).then(a.start.cmp(&b.start)));
    let mut covered = vec![false; tokens.len()];
    let mut accepted = Vec::new();
    for occ in found {
        let range = occ.start..occ.start + occ.len;
        if covered[range.clone()].iter().any(|&c| c) {
            continue;
        }
        covered[range].iter_mut().for_each(|c| *c = true);
        accepted.push(occ);
    }
    accepted.sort_by_key(|o| o.start);

    let mut per_concept: BTreeMap<ConceptId, DirectAnnotation> = BTreeMap::new();
    for occ in accepted {
        let span = (tokens[occ.start].start, tokens[occ.start + occ.len - 1].end);
        for owner in &m.owners[occ.pattern as usize] {
            let a = per_concept
                .entry(owner.concept.clone())
                .or_insert_with(|| DirectAnnotation {
                    concept_id: owner.concept.clone(),
                    spans: Vec::new(),
                    match_count: 0,
                    evidence: 0.0,
                });
            a.spans.push(span);
            a.match_count += 1;
            a.evidence += owner.weight;
        }
    }
    per_concept.into_values().collect()
}

pub fn recognize(m: &Matcher, doc: &Document) -> Vec<DirectAnnotation> {
    recognize_text(m, &doc.text())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Direct,
    OntologyExpansion,
    EncyclopediaExpansion,
    Classifier,
    Combined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedAnnotation {
    pub concept_id: ConceptId,
    pub score: f64,
    pub hops: u32,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandParams {
    pub depth: u32,
    pub decay: f64,
}

impl Default for ExpandParams {
    fn default() -> Self {
        Self { depth: 2, decay: 0.5 }
    }
}

impl ExpandParams {
    pub fn validate(&self) -> Result<(), RecognizerError> {
        if self.depth < 1 {
            return Err(RecognizerError::InvalidParameter("depth must be at least 1".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(RecognizerError::InvalidParameter(format!(
                "decay must lie in (0, 1), got {}",
                self.decay
            )));
        }
        Ok(())
    }
}

/// Spreads direct evidence over the enriched union graph.
///
/// `score(c) = Σ_a evidence(a) · decay^hops(a, c)` over anchors within
/// `depth` hops. Encyclopedia nodes are transit only. A non-direct concept is
/// an ontology expansion when some anchor reaches it within `depth` using
/// ontology edges alone, otherwise an encyclopedia expansion. Output is
/// ordered by score (descending), then concept id.
pub fn expand(
    direct: &[DirectAnnotation],
    eo: &EnrichedOntology,
    params: ExpandParams,
) -> Result<Vec<ExpandedAnnotation>, RecognizerError> {
    params.validate()?;
    let union = eo.union_adjacency();
    let base = eo.base().adjacency();
    let onto_nodes = eo.ontology_node_count();

    let mut score = vec![0.0f64; onto_nodes];
    let mut hops = vec![u32::MAX; onto_nodes];
    let mut via_ontology = vec![false; onto_nodes];
    let mut is_direct = vec![false; onto_nodes];

    for a in direct {
        let Some(src) = eo.base().node_index(a.concept_id.as_str()) else {
            continue;
        };
        is_direct[src as usize] = true;
        let reach = union.bfs(src, Some(params.depth));
        let onto_reach = base.bfs(src, Some(params.depth));
        for (node, h) in reach.iter().take(onto_nodes).enumerate() {
            if let Some(h) = *h {
                score[node] += a.evidence * params.decay.powi(h as i32);
                hops[node] = hops[node].min(h);
                via_ontology[node] |= onto_reach[node].is_some();
            }
        }
    }

    let mut out: Vec<ExpandedAnnotation> = (0..onto_nodes)
        .filter(|&n| hops[n] != u32::MAX && score[n] > 0.0)
        .map(|n| {
            let (hops, provenance) = if is_direct[n] {
                (0, Provenance::Direct)
            } else if via_ontology[n] {
                (hops[n], Provenance::OntologyExpansion)
            } else {
                (hops[n], Provenance::EncyclopediaExpansion)
            };
            ExpandedAnnotation {
                concept_id: eo.base().node_ids()[n].clone(),
                score: score[n],
                hops,
                provenance,
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.concept_id.cmp(&b.concept_id)));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub concept_id: ConceptId,
    pub score: f64,
    pub provenance: Provenance,
    pub hops: u32,
}

/// Scored keywords for one document in canonical order: score descending,
/// then concept id ascending; concept ids unique.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub doc_id: String,
    pub keywords: Vec<Keyword>,
}

impl KeywordSet {
    /// Sorts canonically and keeps the highest-scoring entry per concept.
    pub fn new(doc_id: impl Into<String>, mut keywords: Vec<Keyword>) -> Self {
        keywords.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.concept_id.cmp(&b.concept_id)));
        let mut seen = std::collections::HashSet::new();
        keywords.retain(|k| seen.insert(k.concept_id.clone()));
        Self {
            doc_id: doc_id.into(),
            keywords,
        }
    }

    pub fn empty(doc_id: impl Into<String>) -> Self {
        Self::new(doc_id, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn ids(&self) -> std::collections::BTreeSet<ConceptId> {
        self.keywords.iter().map(|k| k.concept_id.clone()).collect()
    }

    pub fn get(&self, concept_id: &str) -> Option<&Keyword> {
        self.keywords.iter().find(|k| k.concept_id.as_str() == concept_id)
    }

    pub fn is_canonical(&self) -> bool {
        self.keywords.windows(2).all(|w| {
            w[0].score > w[1].score || (w[0].score == w[1].score && w[0].concept_id < w[1].concept_id)
        })
    }
}

pub fn read_keyword_sets<R: BufRead>(reader: R) -> Result<Vec<KeywordSet>, RecognizerError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| RecognizerError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let set: KeywordSet = serde_json::from_str(&line).map_err(|e| RecognizerError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(KeywordSet::new(set.doc_id, set.keywords));
    }
    Ok(out)
}

pub fn write_keyword_sets(sets: &[KeywordSet]) -> String {
    let mut out = String::new();
    for s in sets {
        out.push_str(&serde_json::to_string(s).expect("keyword sets serialize"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    TopN(usize),
    MinScore(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestParams {
    pub expand: ExpandParams,
    pub cutoff: Cutoff,
}

impl Default for SuggestParams {
    fn default() -> Self {
        Self {
            expand: ExpandParams::default(),
            cutoff: Cutoff::TopN(10),
        }
    }
}

/// recognize → expand → rank → truncate.
pub fn suggest_keywords(
    doc: &Document,
    m: &Matcher,
    eo: &EnrichedOntology,
    params: &SuggestParams,
) -> Result<KeywordSet, RecognizerError> {
    let direct = recognize(m, doc);
    let expanded = expand(&direct, eo, params.expand)?;
    let keywords = expanded.into_iter().map(|e| Keyword {
        concept_id: e.concept_id,
        score: e.score,
        provenance: e.provenance,
        hops: e.hops,
    });
    let keywords: Vec<Keyword> = match params.cutoff {
        Cutoff::TopN(n) => keywords.take(n).collect(),
        Cutoff::MinScore(min) => keywords.filter(|k| k.score >= min).collect(),
    };
    Ok(KeywordSet::new(doc.doc_id.clone(), keywords))
}
