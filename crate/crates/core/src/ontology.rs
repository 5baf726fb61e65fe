//! Thesaurus concepts and the hierarchical classification system.
//!
//! Both live in one identifier space but in separate maps: thesaurus concepts
//! carry broader/related edges, classification nodes carry a parent and a
//! level (children of the implicit root are level 1). Hop distances treat
//! broader, narrower, related and parent links as undirected unit edges.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalize_hops, Adjacency};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OntologyError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("invalid concept id {0:?}")]
    InvalidId(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("dangling reference to {0}")]
    DanglingReference(String),
    #[error("cycle through {0}")]
    BroaderCycle(String),
    #[error("{0} has an empty preferred label")]
    EmptyLabel(String),
    #[error("{0} refers to itself")]
    SelfLoop(String),
    #[error("class {id} declares level {declared} but its parent chain gives {computed}")]
    LevelMismatch {
        id: String,
        declared: u32,
        computed: u32,
    },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("read error: {0}")]
    Io(String),
}

/// Identifier of a thesaurus concept or classification node.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(id: impl Into<String>) -> Result<Self, OntologyError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(OntologyError::InvalidId(id));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ConceptId {
    type Error = OntologyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ConceptId> for String {
    fn from(value: ConceptId) -> Self {
        value.0
    }
}

impl Borrow<str> for ConceptId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Concept {
    pub id: ConceptId,
    pub pref_label: String,
    pub alt_labels: Vec<String>,
    pub broader: Vec<ConceptId>,
    pub related: Vec<ConceptId>,
}

impl Concept {
    /// Preferred label followed by the alternative labels.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.pref_label.as_str()).chain(self.alt_labels.iter().map(String::as_str))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassNode {
    pub id: ConceptId,
    pub label: String,
    pub parent: Option<ConceptId>,
    pub level: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    #[default]
    Concept,
    Class,
}

/// One line of the `ontology-jsonl` format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OntologyRecord {
    pub id: String,
    #[serde(rename = "prefLabel")]
    pub pref_label: String,
    #[serde(rename = "altLabels", default)]
    pub alt_labels: Vec<String>,
    #[serde(default)]
    pub broader: Vec<String>,
    #[serde(default)]
    pub related: Vec<String>,
    #[serde(default)]
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyStats {
    pub concepts: usize,
    pub broader_edges: usize,
    pub related_edges: usize,
    pub classes: usize,
}

/// Immutable view of a loaded thesaurus plus classification system.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<OntologyRecord>", into = "Vec<OntologyRecord>")]
pub struct OntologyGraph {
    concepts: BTreeMap<ConceptId, Concept>,
    classes: BTreeMap<ConceptId, ClassNode>,
    narrower: BTreeMap<ConceptId, Vec<ConceptId>>,
    nodes: Vec<ConceptId>,
    index: HashMap<ConceptId, u32>,
    adjacency: Adjacency,
    stats: OntologyStats,
}

/// A normalized distance in `[0, 1]` between two identifiers of some graph.
pub trait SemanticDistance {
    fn distance(&self, a: &str, b: &str) -> Result<f64, OntologyError>;

    fn contains(&self, id: &str) -> bool;
}

impl OntologyGraph {
    /// Reads `ontology-jsonl` from a stream. Blank lines are skipped.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, OntologyError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| OntologyError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: OntologyRecord =
                serde_json::from_str(&line).map_err(|e| OntologyError::MalformedRecord {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            records.push(record);
        }
        Self::from_records(records)
    }

    pub fn from_records(records: Vec<OntologyRecord>) -> Result<Self, OntologyError> {
        let mut seen = BTreeSet::new();
        for r in &records {
            ConceptId::new(r.id.clone())?;
            if !seen.insert(r.id.clone()) {
                return Err(OntologyError::DuplicateId(r.id.clone()));
            }
            if r.pref_label.trim().is_empty() {
                return Err(OntologyError::EmptyLabel(r.id.clone()));
            }
        }

        let kind_of: HashMap<&str, RecordKind> =
            records.iter().map(|r| (r.id.as_str(), r.kind)).collect();
        let resolve = |from: &str, target: &str, want: RecordKind| {
            if from == target {
                return Err(OntologyError::SelfLoop(from.to_owned()));
            }
            match kind_of.get(target) {
                Some(k) if *k == want => ConceptId::new(target),
                _ => Err(OntologyError::DanglingReference(target.to_owned())),
            }
        };

        let mut concepts = BTreeMap::new();
        let mut raw_classes = Vec::new();
        for r in &records {
            let id = ConceptId::new(r.id.clone())?;
            match r.kind {
                RecordKind::Concept => {
                    let broader = dedup(
                        r.broader
                            .iter()
                            .map(|b| resolve(&r.id, b, RecordKind::Concept))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                    let related = dedup(
                        r.related
                            .iter()
                            .map(|b| resolve(&r.id, b, RecordKind::Concept))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                    concepts.insert(
                        id.clone(),
                        Concept {
                            id,
                            pref_label: r.pref_label.clone(),
                            alt_labels: r.alt_labels.clone(),
                            broader,
                            related,
                        },
                    );
                }
                RecordKind::Class => {
                    let parent = r
                        .parent
                        .as_deref()
                        .map(|p| resolve(&r.id, p, RecordKind::Class))
                        .transpose()?;
                    raw_classes.push((id, r.pref_label.clone(), parent, r.level));
                }
            }
        }

        check_broader_acyclic(&concepts)?;
        let classes = assign_levels(raw_classes)?;

        let mut narrower: BTreeMap<ConceptId, Vec<ConceptId>> = BTreeMap::new();
        for c in concepts.values() {
            for b in &c.broader {
                narrower.entry(b.clone()).or_default().push(c.id.clone());
            }
        }
        for list in narrower.values_mut() {
            list.sort();
        }

        let nodes: Vec<ConceptId> = concepts.keys().chain(classes.keys()).cloned().collect();
        let index: HashMap<ConceptId, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let mut adjacency = Adjacency::with_nodes(nodes.len());
        let mut stats = OntologyStats {
            concepts: concepts.len(),
            classes: classes.len(),
            ..Default::default()
        };
        for c in concepts.values() {
            let from = index[&c.id];
            for b in &c.broader {
                adjacency.add_edge(from, index[b]);
                stats.broader_edges += 1;
            }
            for r in &c.related {
                adjacency.add_edge(from, index[r]);
                stats.related_edges += 1;
            }
        }
        for c in classes.values() {
            if let Some(p) = &c.parent {
                adjacency.add_edge(index[&c.id], index[p]);
            }
        }
        adjacency.finish();

        Ok(Self {
            concepts,
            classes,
            narrower,
            nodes,
            index,
            adjacency,
            stats,
        })
    }

    /// Records in canonical order (concepts, then classes, each by id).
    pub fn to_records(&self) -> Vec<OntologyRecord> {
        let concepts = self.concepts.values().map(|c| OntologyRecord {
            id: c.id.to_string(),
            pref_label: c.pref_label.clone(),
            alt_labels: c.alt_labels.clone(),
            broader: c.broader.iter().map(ToString::to_string).collect(),
            related: c.related.iter().map(ToString::to_string).collect(),
            kind: RecordKind::Concept,
            parent: None,
            level: None,
        });
        let classes = self.classes.values().map(|c| OntologyRecord {
            id: c.id.to_string(),
            pref_label: c.label.clone(),
            alt_labels: Vec::new(),
            broader: Vec::new(),
            related: Vec::new(),
            kind: RecordKind::Class,
            parent: c.parent.as_ref().map(ToString::to_string),
            level: Some(c.level),
        });
        concepts.chain(classes).collect()
    }

    pub fn stats(&self) -> OntologyStats {
        self.stats
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassNode> {
        self.classes.values()
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn class(&self, id: &str) -> Option<&ClassNode> {
        self.classes.get(id)
    }

    pub fn is_concept(&self, id: &str) -> bool {
        self.concepts.contains_key(id)
    }

    pub fn is_class(&self, id: &str) -> bool {
        self.classes.contains_key(id)
    }

    /// Concepts whose `broader` list names `id`.
    pub fn narrower(&self, id: &str) -> &[ConceptId] {
        self.narrower.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Human-readable label of a concept or class.
    pub fn label(&self, id: &str) -> Option<&str> {
        self.concepts
            .get(id)
            .map(|c| c.pref_label.as_str())
            .or_else(|| self.classes.get(id).map(|c| c.label.as_str()))
    }

    pub fn hierarchy_level(&self, class_id: &str) -> Result<u32, OntologyError> {
        self.classes
            .get(class_id)
            .map(|c| c.level)
            .ok_or_else(|| OntologyError::UnknownClass(class_id.to_owned()))
    }

    /// The ancestor of `class_id` sitting exactly at `level` (the class itself
    /// when its level matches). `None` when the class is shallower.
    pub fn ancestor_at_level(
        &self,
        class_id: &str,
        level: u32,
    ) -> Result<Option<&ConceptId>, OntologyError> {
        let mut node = self
            .classes
            .get(class_id)
            .ok_or_else(|| OntologyError::UnknownClass(class_id.to_owned()))?;
        if node.level < level {
            return Ok(None);
        }
        while node.level > level {
            let parent = node.parent.as_ref().expect("level > 1 implies a parent");
            node = &self.classes[parent];
        }
        Ok(Some(&node.id))
    }

    pub(crate) fn node_index(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub(crate) fn node_ids(&self) -> &[ConceptId] {
        &self.nodes
    }

    pub(crate) fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    fn require(&self, id: &str) -> Result<u32, OntologyError> {
        self.node_index(id)
            .ok_or_else(|| OntologyError::UnknownConcept(id.to_owned()))
    }

    /// Shortest undirected hop count; `Ok(None)` when unreachable.
    pub fn hop_distance(&self, a: &str, b: &str) -> Result<Option<u32>, OntologyError> {
        let (a, b) = (self.require(a)?, self.require(b)?);
        Ok(self.adjacency.hops(a, b))
    }

    /// `h / (h + 1)` of the hop distance, `1.0` when unreachable.
    pub fn semantic_distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        self.hop_distance(a, b).map(normalize_hops)
    }

    /// Case-insensitive prefix search over preferred and alternative labels of
    /// thesaurus concepts, ordered by preferred label then id.
    pub fn search_labels(&self, prefix: &str, limit: usize) -> Vec<&Concept> {
        let needle = prefix.to_lowercase();
        let mut hits: Vec<&Concept> = self
            .concepts
            .values()
            .filter(|c| c.labels().any(|l| l.to_lowercase().starts_with(&needle)))
            .collect();
        hits.sort_by(|x, y| {
            x.pref_label
                .to_lowercase()
                .cmp(&y.pref_label.to_lowercase())
                .then_with(|| x.id.cmp(&y.id))
        });
        hits.truncate(limit);
        hits
    }
}

impl SemanticDistance for OntologyGraph {
    fn distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        self.semantic_distance(a, b)
    }

    fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }
}

impl TryFrom<Vec<OntologyRecord>> for OntologyGraph {
    type Error = OntologyError;

    fn try_from(records: Vec<OntologyRecord>) -> Result<Self, Self::Error> {
        Self::from_records(records)
    }
}

impl From<OntologyGraph> for Vec<OntologyRecord> {
    fn from(graph: OntologyGraph) -> Self {
        graph.to_records()
    }
}

fn dedup(mut ids: Vec<ConceptId>) -> Vec<ConceptId> {
    let mut seen = BTreeSet::new();
    ids.retain(|id| seen.insert(id.clone()));
    ids
}

fn check_broader_acyclic(concepts: &BTreeMap<ConceptId, Concept>) -> Result<(), OntologyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    for start in concepts.keys() {
        if marks.contains_key(start.as_str()) {
            continue;
        }
        // iterative DFS: (node, next broader index)
        let mut stack: Vec<(&ConceptId, usize)> = vec![(start, 0)];
        marks.insert(start.as_str(), Mark::Open);
        while let Some((node, next)) = stack.pop() {
            let broader = &concepts[node].broader;
            if next < broader.len() {
                stack.push((node, next + 1));
                let b = &broader[next];
                match marks.get(b.as_str()) {
                    Some(Mark::Open) => return Err(OntologyError::BroaderCycle(b.to_string())),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(b.as_str(), Mark::Open);
                        stack.push((b, 0));
                    }
                }
            } else {
                marks.insert(node.as_str(), Mark::Done);
            }
        }
    }
    Ok(())
}

type RawClass = (ConceptId, String, Option<ConceptId>, Option<u32>);

fn assign_levels(raw: Vec<RawClass>) -> Result<BTreeMap<ConceptId, ClassNode>, OntologyError> {
    let parent_of: HashMap<&ConceptId, Option<&ConceptId>> =
        raw.iter().map(|(id, _, p, _)| (id, p.as_ref())).collect();
    let mut levels: HashMap<&ConceptId, u32> = HashMap::new();
    for (id, _, _, _) in &raw {
        if levels.contains_key(id) {
            continue;
        }
        let mut chain = vec![id];
        let mut on_chain: BTreeSet<&ConceptId> = BTreeSet::from([id]);
        let mut cursor = id;
        let base = loop {
            match parent_of[cursor] {
                None => break 0,
                Some(p) => {
                    if let Some(&l) = levels.get(p) {
                        break l;
                    }
                    if !on_chain.insert(p) {
                        return Err(OntologyError::BroaderCycle(p.to_string()));
                    }
                    chain.push(p);
                    cursor = p;
                }
            }
        };
        for (depth, node) in chain.iter().rev().enumerate() {
            levels.insert(node, base + depth as u32 + 1);
        }
    }

    let mut classes = BTreeMap::new();
    for (id, label, parent, declared) in &raw {
        let computed = levels[id];
        if let Some(declared) = declared {
            if *declared != computed {
                return Err(OntologyError::LevelMismatch {
                    id: id.to_string(),
                    declared: *declared,
                    computed,
                });
            }
        }
        classes.insert(
            id.clone(),
            ClassNode {
                id: id.clone(),
                label: label.clone(),
                parent: parent.clone(),
                level: computed,
            },
        );
    }
    Ok(classes)
}
