#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use conceptforge::corpus::{ingest, Document, UnknownLabelPolicy};
use conceptforge::ontology::{ConceptId, OntologyGraph};
use conceptforge::recognizer::{Keyword, KeywordSet, Provenance};
use conceptforge_review::{router, shared, ReviewStore};
use tower::ServiceExt;

pub fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn onto5() -> OntologyGraph {
    OntologyGraph::load(std::fs::read_to_string(core_fixture("onto5.jsonl")).unwrap().as_bytes()).unwrap()
}

pub fn docs() -> Vec<Document> {
    let text = std::fs::read_to_string(core_fixture("corpus10.jsonl")).unwrap();
    ingest(text.as_bytes(), None, UnknownLabelPolicy::Retain).unwrap().0.into_docs()
}

pub fn keywords(doc_id: &str, ids: &[&str]) -> KeywordSet {
    let n = ids.len() as f64;
    KeywordSet::new(
        doc_id,
        ids.iter()
            .enumerate()
            .map(|(i, id)| Keyword {
                concept_id: ConceptId::new(*id).unwrap(),
                score: 1.0 - i as f64 / n,
                provenance: Provenance::Direct,
                hops: 0,
            })
            .collect(),
    )
}

/// Three tasks over corpus10: c01 (3 suggestions), c02 (2), c03 (1).
pub fn suggestions() -> Vec<KeywordSet> {
    vec![
        keywords("c01", &["migration", "labor_market_policy", "unemployment"]),
        keywords("c02", &["unemployment", "welfare_state"]),
        keywords("c03", &["demographic_change"]),
    ]
}

pub fn open(log: &Path) -> ReviewStore {
    ReviewStore::open(onto5(), &docs(), suggestions(), log).unwrap()
}

pub fn app(log: &Path) -> Router {
    router(shared(open(log)), None)
}

pub fn judgment(doc: &str, concept: &str, verdict: &str, annotator: &str) -> serde_json::Value {
    serde_json::json!({
        "doc_id": doc,
        "concept_id": concept,
        "verdict": verdict,
        "annotator_id": annotator,
        "timestamp": "2024-05-01T10:00:00+02:00",
    })
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

pub async fn post(app: &Router, uri: &str, body: &serde_json::Value) -> (StatusCode, Vec<u8>) {
    post_raw(app, uri, body.to_string()).await
}

pub async fn post_raw(app: &Router, uri: &str, body: String) -> (StatusCode, Vec<u8>) {
    let resp = app
        .clone()
        .oneshot(
            Request::post(uri)
                .header("content-type", "application/json")
                .body(Body::from(body))
                .unwrap(),
        )
        .await
        .unwrap();
    let status = resp.status();
    (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

pub fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

/// Full verdict set for c01 by `annotator`: unemployment wrong, welfare_state
/// missing.
pub fn c01_corrections(annotator: &str) -> serde_json::Value {
    serde_json::json!([
        judgment("c01", "migration", "appropriate", annotator),
        judgment("c01", "labor_market_policy", "appropriate", annotator),
        judgment("c01", "unemployment", "wrong", annotator),
        judgment("c01", "welfare_state", "missing", annotator),
    ])
}
