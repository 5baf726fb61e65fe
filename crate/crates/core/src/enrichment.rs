//! Encyclopedia-backed enrichment of ontology concepts.
//!
//! Each thesaurus concept is first mapped onto encyclopedia entries with an
//! exact → alias → token-Jaccard cascade (or a manual override table). The
//! mapped entries seed a breadth-first walk over the undirected link graph;
//! the entries reached within the radius become support nodes, the links
//! among them support relations, and their abstracts the concept's
//! neighborhood term bag.
//!
//! The resulting [`EnrichedOntology`] also exposes a union graph (ontology
//! edges, concept↔mapped-entry edges and support relations) on which
//! [`EnrichedOntology::enriched_distance`] is computed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalize_hops, Adjacency};
use crate::ontology::{ConceptId, OntologyError, OntologyGraph, SemanticDistance};
use crate::textproc::{tokenize, TextConfig};

/// Relation type recorded on every support relation derived from a plain
/// encyclopedia link.
pub const LINK_RELATION: &str = "link";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnrichmentError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate entry id {0}")]
    DuplicateEntryId(String),
    #[error("entry {0} has an empty title")]
    EmptyTitle(String),
    #[error("mapping override names unknown concept {0}")]
    UnknownOverrideConcept(String),
    #[error("mapping override names unknown entry {0}")]
    UnknownOverrideEntry(String),
    #[error("line {line}: expected concept_id<TAB>entry_id")]
    MalformedOverride { line: usize },
    #[error("unsupported enriched ontology version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("read error: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncyclopediaEntry {
    pub entry_id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub outlinks: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
}

/// Loaded encyclopedia indexed by entry id and by normalized title.
#[derive(Clone, Debug, Default)]
pub struct Encyclopedia {
    entries: Vec<EncyclopediaEntry>,
    by_id: HashMap<String, u32>,
    by_title: HashMap<String, Vec<u32>>,
    title_tokens: Vec<BTreeSet<String>>,
    adjacency: Adjacency,
    dropped_links: usize,
}

impl Encyclopedia {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self, EnrichmentError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EnrichmentError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| EnrichmentError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Self::from_entries(entries)
    }

    /// Dangling outlinks are dropped and counted, not rejected.
    pub fn from_entries(mut entries: Vec<EncyclopediaEntry>) -> Result<Self, EnrichmentError> {
        let mut by_id = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.title.trim().is_empty() {
                return Err(EnrichmentError::EmptyTitle(e.entry_id.clone()));
            }
            if by_id.insert(e.entry_id.clone(), i as u32).is_some() {
                return Err(EnrichmentError::DuplicateEntryId(e.entry_id.clone()));
            }
        }

        let mut dropped_links = 0;
        let mut adjacency = Adjacency::with_nodes(entries.len());
        for (i, e) in entries.iter_mut().enumerate() {
            let before = e.outlinks.len();
            e.outlinks.retain(|t| by_id.contains_key(t));
            dropped_links += before - e.outlinks.len();
            for t in &e.outlinks {
                adjacency.add_edge(i as u32, by_id[t]);
            }
        }
        adjacency.finish();
        if dropped_links > 0 {
            log::warn!("dropped {dropped_links} dangling encyclopedia links");
        }

        let plain = TextConfig::plain();
        let mut by_title: HashMap<String, Vec<u32>> = HashMap::new();
        let mut title_tokens = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            let terms = plain.terms(&e.title);
            by_title.entry(terms.join(" ")).or_default().push(i as u32);
            title_tokens.push(terms.into_iter().collect());
        }
        for ids in by_title.values_mut() {
            ids.sort_by(|a, b| entries[*a as usize].entry_id.cmp(&entries[*b as usize].entry_id));
        }

        Ok(Self {
            entries,
            by_id,
            by_title,
            title_tokens,
            adjacency,
            dropped_links,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EncyclopediaEntry] {
        &self.entries
    }

    pub fn entry(&self, entry_id: &str) -> Option<&EncyclopediaEntry> {
        self.by_id.get(entry_id).map(|&i| &self.entries[i as usize])
    }

    /// Number of outlinks dropped at load because their target was missing.
    pub fn dropped_links(&self) -> usize {
        self.dropped_links
    }

    /// Entry whose normalized title equals `normalized`; the smallest entry id
    /// wins when several share a title.
    fn title_match(&self, normalized: &str) -> Option<&str> {
        self.by_title
            .get(normalized)
            .and_then(|ids| ids.first())
            .map(|&i| self.entries[i as usize].entry_id.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Alias,
    Multi,
    Unmapped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMapping {
    pub concept_id: ConceptId,
    pub entry_ids: Vec<String>,
    pub match_kind: MatchKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingStats {
    pub exact: usize,
    pub alias: usize,
    pub multi: usize,
    pub unmapped: usize,
}

impl MappingStats {
    pub fn from_mappings(mappings: &[ConceptMapping]) -> Self {
        let mut s = Self::default();
        for m in mappings {
            match m.match_kind {
                MatchKind::Exact => s.exact += 1,
                MatchKind::Alias => s.alias += 1,
                MatchKind::Multi => s.multi += 1,
                MatchKind::Unmapped => s.unmapped += 1,
            }
        }
        s
    }
}

/// Candidates kept by the fuzzy stage of the mapping cascade.
pub const MAX_MULTI_LINKS: usize = 5;

fn normalize(text: &str) -> String {
    TextConfig::plain().terms(text).join(" ")
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Maps every thesaurus concept (in id order) onto encyclopedia entries.
pub fn map_concepts(ont: &OntologyGraph, enc: &Encyclopedia, min_jaccard: f64) -> Vec<ConceptMapping> {
    ont.concepts()
        .map(|c| {
            let (match_kind, entry_ids) = map_one(&c.pref_label, &c.alt_labels, enc, min_jaccard);
            ConceptMapping {
                concept_id: c.id.clone(),
                entry_ids,
                match_kind,
            }
        })
        .collect()
}

fn map_one(pref: &str, alts: &[String], enc: &Encyclopedia, min_jaccard: f64) -> (MatchKind, Vec<String>) {
    let pref_norm = normalize(pref);
    if let Some(id) = enc.title_match(&pref_norm) {
        return (MatchKind::Exact, vec![id.to_owned()]);
    }
    if let Some(id) = alts.iter().filter_map(|a| enc.title_match(&normalize(a))).min() {
        return (MatchKind::Alias, vec![id.to_owned()]);
    }

    let label: BTreeSet<String> = pref_norm.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
    let mut candidates: Vec<(f64, &str)> = enc
        .title_tokens
        .iter()
        .zip(&enc.entries)
        .filter_map(|(tokens, e)| {
            let j = jaccard(&label, tokens);
            (j > 0.0 && j >= min_jaccard).then_some((j, e.entry_id.as_str()))
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    candidates.truncate(MAX_MULTI_LINKS);
    if candidates.is_empty() {
        (MatchKind::Unmapped, Vec::new())
    } else {
        (MatchKind::Multi, candidates.into_iter().map(|(_, id)| id.to_owned()).collect())
    }
}

/// Manual mapping table: `concept_id<TAB>entry_id`, one pair per row.
/// Blank lines and `#` comments are ignored.
pub fn read_mapping_overrides<R: BufRead>(
    reader: R,
) -> Result<BTreeMap<ConceptId, Vec<String>>, EnrichmentError> {
    let mut table: BTreeMap<ConceptId, Vec<String>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EnrichmentError::Io(e.to_string()))?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split('\t');
        let (Some(c), Some(e), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(EnrichmentError::MalformedOverride { line: i + 1 });
        };
        let concept = ConceptId::new(c.trim()).map_err(|_| EnrichmentError::MalformedOverride { line: i + 1 })?;
        let ids = table.entry(concept).or_default();
        if !ids.iter().any(|x| x == e.trim()) {
            ids.push(e.trim().to_owned());
        }
    }
    Ok(table)
}

/// Replaces automatic mappings with manual rows. A single row is recorded as
/// `exact`, several rows for one concept as `multi`.
pub fn apply_overrides(
    mappings: &mut [ConceptMapping],
    overrides: &BTreeMap<ConceptId, Vec<String>>,
    enc: &Encyclopedia,
) -> Result<(), EnrichmentError> {
    for (concept, entries) in overrides {
        let Some(m) = mappings.iter_mut().find(|m| &m.concept_id == concept) else {
            return Err(EnrichmentError::UnknownOverrideConcept(concept.to_string()));
        };
        if let Some(missing) = entries.iter().find(|e| enc.entry(e).is_none()) {
            return Err(EnrichmentError::UnknownOverrideEntry(missing.clone()));
        }
        m.entry_ids = entries.clone();
        m.match_kind = if entries.len() == 1 {
            MatchKind::Exact
        } else {
            MatchKind::Multi
        };
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportNode {
    pub entry_id: String,
    pub hop: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportRelation {
    pub from: String,
    pub to: String,
    pub relation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedConcept {
    pub concept_id: ConceptId,
    /// Ordered by hop, then entry id.
    pub support_nodes: Vec<SupportNode>,
    /// Directed encyclopedia links among support nodes, sorted.
    pub support_relations: Vec<SupportRelation>,
    pub neighborhood_terms: BTreeMap<String, u32>,
}

impl EnrichedConcept {
    pub fn empty(concept_id: ConceptId) -> Self {
        Self {
            concept_id,
            support_nodes: Vec::new(),
            support_relations: Vec::new(),
            neighborhood_terms: BTreeMap::new(),
        }
    }

    pub fn term_total(&self) -> u64 {
        self.neighborhood_terms.values().map(|&n| u64::from(n)).sum()
    }

    /// Terms whose share of the bag is at least `min_weight`.
    pub fn salient_terms(&self, min_weight: f64) -> impl Iterator<Item = &str> {
        let total = self.term_total() as f64;
        self.neighborhood_terms
            .iter()
            .filter(move |(_, &n)| total > 0.0 && f64::from(n) / total >= min_weight)
            .map(|(t, _)| t.as_str())
    }
}

/// Walks the undirected link graph from the mapped entries.
///
/// Hop 0 holds the mapped entries; each further hop admits at most `cap`
/// unseen neighbors of the previous hop, smallest entry ids first.
pub fn build_neighborhood(
    mapping: &ConceptMapping,
    enc: &Encyclopedia,
    radius: u32,
    cap: usize,
    text: &TextConfig,
) -> EnrichedConcept {
    let mut out = EnrichedConcept::empty(mapping.concept_id.clone());
    let mut hop_of: HashMap<u32, u32> = HashMap::new();
    let mut frontier: Vec<u32> = mapping
        .entry_ids
        .iter()
        .filter_map(|id| enc.by_id.get(id).copied())
        .collect();
    frontier.sort_by(|a, b| enc.entries[*a as usize].entry_id.cmp(&enc.entries[*b as usize].entry_id));
    frontier.dedup();
    for &n in &frontier {
        hop_of.insert(n, 0);
    }

    for hop in 1..=radius {
        let mut fresh: Vec<u32> = frontier
            .iter()
            .flat_map(|&n| enc.adjacency.neighbors(n).iter().copied())
            .filter(|n| !hop_of.contains_key(n))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        fresh.sort_by(|a, b| enc.entries[*a as usize].entry_id.cmp(&enc.entries[*b as usize].entry_id));
        fresh.truncate(cap);
        if fresh.is_empty() {
            break;
        }
        for &n in &fresh {
            hop_of.insert(n, hop);
        }
        frontier = fresh;
    }

    for (&node, &hop) in &hop_of {
        let entry = &enc.entries[node as usize];
        out.support_nodes.push(SupportNode {
            entry_id: entry.entry_id.clone(),
            hop,
        });
        for t in &entry.outlinks {
            if hop_of.contains_key(&enc.by_id[t]) {
                out.support_relations.push(SupportRelation {
                    from: entry.entry_id.clone(),
                    to: t.clone(),
                    relation: LINK_RELATION.to_owned(),
                });
            }
        }
        for token in tokenize(&entry.abstract_text, text) {
            *out.neighborhood_terms.entry(token.term).or_insert(0) += 1;
        }
    }
    out.support_nodes.sort_by(|a, b| a.hop.cmp(&b.hop).then_with(|| a.entry_id.cmp(&b.entry_id)));
    out.support_relations.sort();
    out.support_relations.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichParams {
    pub min_jaccard: f64,
    pub radius: u32,
    pub cap: usize,
    pub text: TextConfig,
}

impl Default for EnrichParams {
    fn default() -> Self {
        Self {
            min_jaccard: 0.4,
            radius: 1,
            cap: 50,
            text: TextConfig::english(),
        }
    }
}

/// Ontology plus per-concept neighborhoods and the derived union graph.
#[derive(Clone, Debug)]
pub struct EnrichedOntology {
    base: OntologyGraph,
    params: EnrichParams,
    mappings: Vec<ConceptMapping>,
    enriched: BTreeMap<ConceptId, EnrichedConcept>,
    stats: MappingStats,
    union: Adjacency,
    entry_nodes: Vec<String>,
}

pub const ENRICHED_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EnrichedOntologyFile {
    version: u32,
    params: EnrichParams,
    stats: MappingStats,
    ontology: OntologyGraph,
    mappings: Vec<ConceptMapping>,
    concepts: Vec<EnrichedConcept>,
}

/// Maps, then builds every concept's neighborhood (in parallel).
pub fn enrich_ontology(
    ont: OntologyGraph,
    enc: &Encyclopedia,
    params: EnrichParams,
    overrides: Option<&BTreeMap<ConceptId, Vec<String>>>,
) -> Result<EnrichedOntology, EnrichmentError> {
    let mut mappings = map_concepts(&ont, enc, params.min_jaccard);
    if let Some(table) = overrides {
        apply_overrides(&mut mappings, table, enc)?;
    }
    let concepts: Vec<EnrichedConcept> = mappings
        .par_iter()
        .map(|m| build_neighborhood(m, enc, params.radius, params.cap, &params.text))
        .collect();
    Ok(EnrichedOntology::assemble(ont, params, mappings, concepts))
}

impl EnrichedOntology {
    fn assemble(
        base: OntologyGraph,
        params: EnrichParams,
        mappings: Vec<ConceptMapping>,
        concepts: Vec<EnrichedConcept>,
    ) -> Self {
        let stats = MappingStats::from_mappings(&mappings);
        let enriched: BTreeMap<ConceptId, EnrichedConcept> = concepts
            .into_iter()
            .map(|c| (c.concept_id.clone(), c))
            .collect();

        let mut union = base.adjacency().clone();
        let offset = union.len() as u32;
        let mut entry_nodes: Vec<String> = enriched
            .values()
            .flat_map(|c| c.support_nodes.iter().map(|n| n.entry_id.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        entry_nodes.sort();
        let entry_index: HashMap<&str, u32> = entry_nodes
            .iter()
            .map(|id| (id.as_str(), union.add_node()))
            .collect();
        debug_assert!(entry_index.values().all(|&i| i >= offset));
        for c in enriched.values() {
            let Some(concept_node) = base.node_index(c.concept_id.as_str()) else {
                continue;
            };
            for n in c.support_nodes.iter().filter(|n| n.hop == 0) {
                union.add_edge(concept_node, entry_index[n.entry_id.as_str()]);
            }
            for r in &c.support_relations {
                union.add_edge(entry_index[r.from.as_str()], entry_index[r.to.as_str()]);
            }
        }
        union.finish();

        Self {
            base,
            params,
            mappings,
            enriched,
            stats,
            union,
            entry_nodes,
        }
    }

    /// Same ontology, no encyclopedia knowledge: every concept unmapped.
    pub fn unenriched(base: OntologyGraph) -> Self {
        let mappings: Vec<ConceptMapping> = base
            .concepts()
            .map(|c| ConceptMapping {
                concept_id: c.id.clone(),
                entry_ids: Vec::new(),
                match_kind: MatchKind::Unmapped,
            })
            .collect();
        let concepts = mappings
            .iter()
            .map(|m| EnrichedConcept::empty(m.concept_id.clone()))
            .collect();
        Self::assemble(base, EnrichParams::default(), mappings, concepts)
    }

    pub fn base(&self) -> &OntologyGraph {
        &self.base
    }

    pub fn params(&self) -> &EnrichParams {
        &self.params
    }

    pub fn mappings(&self) -> &[ConceptMapping] {
        &self.mappings
    }

    pub fn stats(&self) -> MappingStats {
        self.stats
    }

    pub fn enriched(&self, id: &str) -> Option<&EnrichedConcept> {
        self.enriched.get(id)
    }

    pub fn enriched_concepts(&self) -> impl Iterator<Item = &EnrichedConcept> {
        self.enriched.values()
    }

    pub fn union_node_count(&self) -> usize {
        self.union.len()
    }

    pub(crate) fn union_adjacency(&self) -> &Adjacency {
        &self.union
    }

    /// Number of union-graph nodes that are ontology nodes; the remaining
    /// indices are encyclopedia transit nodes.
    pub(crate) fn ontology_node_count(&self) -> usize {
        self.base.node_ids().len()
    }

    /// Identifier of a union-graph node: ontology id, or encyclopedia entry id.
    pub fn union_node_label(&self, node: u32) -> &str {
        let n = node as usize;
        let ids = self.base.node_ids();
        if n < ids.len() {
            ids[n].as_str()
        } else {
            &self.entry_nodes[n - ids.len()]
        }
    }

    /// Hop count on the union graph; `Ok(None)` when unreachable.
    pub fn enriched_hops(&self, a: &str, b: &str) -> Result<Option<u32>, OntologyError> {
        let ia = self
            .base
            .node_index(a)
            .ok_or_else(|| OntologyError::UnknownConcept(a.to_owned()))?;
        let ib = self
            .base
            .node_index(b)
            .ok_or_else(|| OntologyError::UnknownConcept(b.to_owned()))?;
        Ok(self.union.hops(ia, ib))
    }

    pub fn enriched_distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        self.enriched_hops(a, b).map(normalize_hops)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(&EnrichedOntologyFile {
            version: ENRICHED_FORMAT_VERSION,
            params: self.params.clone(),
            stats: self.stats,
            ontology: self.base.clone(),
            mappings: self.mappings.clone(),
            concepts: self.enriched.values().cloned().collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, EnrichmentError> {
        let file: EnrichedOntologyFile = serde_json::from_str(text).map_err(|e| EnrichmentError::MalformedRecord {
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.version != ENRICHED_FORMAT_VERSION {
            return Err(EnrichmentError::UnsupportedVersion(file.version));
        }
        Ok(Self::assemble(file.ontology, file.params, file.mappings, file.concepts))
    }
}

impl SemanticDistance for EnrichedOntology {
    fn distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        self.enriched_distance(a, b)
    }

    fn contains(&self, id: &str) -> bool {
        self.base.node_index(id).is_some()
    }
}
