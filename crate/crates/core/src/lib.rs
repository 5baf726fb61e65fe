//! Subject indexing with encyclopedia-enriched thesauri.
//!
//! The crate covers the full batch pipeline: loading a thesaurus and
//! classification system ([`ontology`]), enriching concepts with encyclopedia
//! neighborhoods ([`enrichment`]), dictionary-based concept recognition and
//! expansion ([`recognizer`]), TF-IDF and Labeled LDA features
//! ([`features`]), one-vs-rest linear SVMs ([`classifier`]), merging keyword
//! sets ([`combiner`]) and evaluation ([`evaluation`]).

pub mod classifier;
pub mod combiner;
pub mod corpus;
pub mod enrichment;
pub mod evaluation;
pub mod features;
pub mod ontology;
pub mod pipeline;
pub mod recognizer;
pub mod synth;
pub mod textproc;

mod graph;

pub use graph::normalize_hops;
pub use ontology::{ConceptId, OntologyError, OntologyGraph, SemanticDistance};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
