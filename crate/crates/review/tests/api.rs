mod common;

use axum::http::StatusCode;
use common::{app, c01_corrections, get, json, judgment, post, post_raw};
use conceptforge::ontology::OntologyGraph;
use conceptforge_review::{router, shared, ReviewStore};
use serde_json::json;

#[tokio::test]
async fn empty_store_has_no_task() {
    let dir = tempfile::tempdir().unwrap();
    let store = ReviewStore::open(common::onto5(), &common::docs(), vec![], dir.path().join("log")).unwrap();
    let app = router(shared(store), None);
    let (status, body) = get(&app, "/api/tasks/next?annotator=ann").await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert!(body.is_empty());
}

#[tokio::test]
async fn missing_annotator_is_bad_request() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    for uri in ["/api/tasks/next", "/api/tasks/next?annotator=", "/api/tasks/next?annotator=%20"] {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        let v = json(&body);
        assert_eq!(v["error"], "missing_annotator");
        assert!(v["detail"].is_string());
    }
}

#[tokio::test]
async fn next_task_is_earliest_unfinished_and_in_progress() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let (status, body) = get(&app, "/api/tasks/next?annotator=ann").await;
    assert_eq!(status, StatusCode::OK);
    let task = json(&body);
    assert_eq!(task["doc_id"], "c01");
    assert_eq!(task["status"], "in_progress");
    assert_eq!(task["title"], "Migration and the labor market");
    assert!(task["abstract"].as_str().unwrap().starts_with("Immigration"));
    let ids: Vec<&str> = task["suggestions"].as_array().unwrap().iter().map(|s| s["concept_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["migration", "labor_market_policy", "unemployment"]);
    assert_eq!(task["suggestions"][0]["pref_label"], "Migration");
    assert_eq!(task["suggestions"][0]["provenance"], "direct");

    // unfinished work is handed out again; other annotators get it too
    assert_eq!(json(&get(&app, "/api/tasks/next?annotator=ann").await.1)["doc_id"], "c01");
    assert_eq!(json(&get(&app, "/api/tasks/next?annotator=other").await.1)["doc_id"], "c01");

    let (status, _) = post(&app, "/api/judgments", &c01_corrections("ann")).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(json(&get(&app, "/api/tasks/next?annotator=ann").await.1)["doc_id"], "c02");
    assert_eq!(json(&get(&app, "/api/tasks/next?annotator=other").await.1)["doc_id"], "c01");
}

#[tokio::test]
async fn annotator_who_finished_everything_gets_no_content() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let batch = json!([
        judgment("c01", "migration", "appropriate", "ann"),
        judgment("c01", "labor_market_policy", "appropriate", "ann"),
        judgment("c01", "unemployment", "appropriate", "ann"),
        judgment("c02", "unemployment", "appropriate", "ann"),
        judgment("c02", "welfare_state", "appropriate", "ann"),
        judgment("c03", "demographic_change", "appropriate", "ann"),
    ]);
    assert_eq!(post(&app, "/api/judgments", &batch).await.0, StatusCode::CREATED);
    assert_eq!(get(&app, "/api/tasks/next?annotator=ann").await.0, StatusCode::NO_CONTENT);
    let progress = json(&get(&app, "/api/progress").await.1);
    assert_eq!((progress["tasks"].as_u64(), progress["done"].as_u64(), progress["pending"].as_u64()), (Some(3), Some(3), Some(0)));
}

#[tokio::test]
async fn full_verdict_set_is_created_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log");
    let app = app(&log);
    let (status, body) = post(&app, "/api/judgments", &c01_corrections("ann")).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(json(&body)["accepted"], 4);
    let logged = std::fs::read_to_string(&log).unwrap();
    assert_eq!(logged.lines().count(), 4);
    assert!(logged.ends_with('\n'));
}

async fn assert_rejected(batch: serde_json::Value, status: StatusCode, code: &str) {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log");
    let app = app(&log);
    let (got, body) = post(&app, "/api/judgments", &batch).await;
    assert_eq!(got, status, "{}", String::from_utf8_lossy(&body));
    assert_eq!(json(&body)["error"], code);
    assert_eq!(std::fs::read_to_string(&log).unwrap(), "");
}

#[tokio::test]
async fn verdict_on_unsuggested_concept_is_unprocessable() {
    let mut batch = c01_corrections("ann");
    batch.as_array_mut().unwrap().push(judgment("c01", "demographic_change", "wrong", "ann"));
    assert_rejected(batch, StatusCode::UNPROCESSABLE_ENTITY, "unjudgeable_reference").await;
}

#[tokio::test]
async fn missing_verdict_needs_known_unsuggested_concept() {
    let mut batch = c01_corrections("ann");
    batch.as_array_mut().unwrap().push(judgment("c01", "no_such_concept", "missing", "ann"));
    assert_rejected(batch, StatusCode::UNPROCESSABLE_ENTITY, "unknown_concept").await;
    let mut batch = c01_corrections("ann");
    batch.as_array_mut().unwrap().push(judgment("c01", "migration", "missing", "other"));
    assert_rejected(batch, StatusCode::UNPROCESSABLE_ENTITY, "unjudgeable_reference").await;
}

#[tokio::test]
async fn partial_and_foreign_batches_are_unprocessable() {
    let partial = json!([judgment("c01", "migration", "appropriate", "ann")]);
    assert_rejected(partial, StatusCode::UNPROCESSABLE_ENTITY, "incomplete_judgments").await;
    let unknown_doc = json!([judgment("c99", "migration", "appropriate", "ann")]);
    assert_rejected(unknown_doc, StatusCode::UNPROCESSABLE_ENTITY, "unknown_document").await;
    assert_rejected(json!([]), StatusCode::UNPROCESSABLE_ENTITY, "invalid_judgments").await;
}

#[tokio::test]
async fn duplicate_submission_conflicts_and_leaves_log_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log");
    let app = app(&log);
    assert_eq!(post(&app, "/api/judgments", &c01_corrections("ann")).await.0, StatusCode::CREATED);
    let before = std::fs::read(&log).unwrap();
    let (status, body) = post(&app, "/api/judgments", &c01_corrections("ann")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(json(&body)["error"], "duplicate_judgment");
    assert_eq!(std::fs::read(&log).unwrap(), before);

    let mut twice = c01_corrections("other");
    twice.as_array_mut().unwrap().push(judgment("c01", "migration", "wrong", "other"));
    assert_eq!(post(&app, "/api/judgments", &twice).await.0, StatusCode::CONFLICT);
    assert_eq!(std::fs::read(&log).unwrap(), before);
}

#[tokio::test]
async fn malformed_body_is_bad_request() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let (status, body) = post_raw(&app, "/api/judgments", "{not json".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json(&body)["error"], "malformed_body");
    let no_timestamp = json!([{"doc_id": "c03", "concept_id": "demographic_change", "verdict": "appropriate", "annotator_id": "a"}]);
    assert_eq!(post(&app, "/api/judgments", &no_timestamp).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concept_search() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let hits = json(&get(&app, "/api/concepts?q=immig").await.1);
    assert_eq!(hits, json!([{"id": "migration", "pref_label": "Migration"}]));
    let (status, body) = get(&app, "/api/concepts?q=zz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body), json!([]));
    let (status, body) = get(&app, "/api/concepts?q=").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json(&body)["error"], "empty_query");
    assert_eq!(get(&app, "/api/concepts").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concept_search_is_capped_in_label_order() {
    let lines: Vec<String> = (0..30)
        .rev()
        .map(|i| format!(r#"{{"id":"t{i:02}","prefLabel":"Topic {i:02}"}}"#))
        .collect();
    let ont = OntologyGraph::load(lines.join("\n").as_bytes()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = ReviewStore::open(ont, &[], vec![], dir.path().join("log")).unwrap();
    let app = router(shared(store), None);
    let hits = json(&get(&app, "/api/concepts?q=TOPIC").await.1);
    let ids: Vec<String> = hits.as_array().unwrap().iter().map(|h| h["id"].as_str().unwrap().to_owned()).collect();
    let expected: Vec<String> = (0..20).map(|i| format!("t{i:02}")).collect();
    assert_eq!(ids, expected);
}

#[tokio::test]
async fn metrics_need_a_completed_task() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let (status, body) = get(&app, "/api/metrics").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["error"], "no_completed_tasks");
}

#[tokio::test]
async fn all_appropriate_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let batch = json!([
        judgment("c02", "unemployment", "appropriate", "ann"),
        judgment("c02", "welfare_state", "appropriate", "ann"),
    ]);
    assert_eq!(post(&app, "/api/judgments", &batch).await.0, StatusCode::CREATED);
    let (status, body) = get(&app, "/api/metrics").await;
    assert_eq!(status, StatusCode::OK);
    let m = json(&body);
    for k in ["precision", "recall", "f1"] {
        assert_eq!(m["pooled"]["micro"][k], 1.0);
    }
    assert_eq!(m["pooled"]["mean_distance"], 0.0);
    assert_eq!(get(&app, "/api/metrics").await.1, body);
}

#[tokio::test]
async fn corrected_set_metrics_by_hand() {
    // suggested {migration, labor_market_policy, unemployment}
    // corrected {migration, labor_market_policy, welfare_state}
    // tp 2, fp 1, fn 1; distance: suggested side (0 + 0 + 1/2) / 3,
    // corrected side (0 + 0 + 1) / 3, mean of both 1/4
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    assert_eq!(post(&app, "/api/judgments", &c01_corrections("ann")).await.0, StatusCode::CREATED);
    let m = json(&get(&app, "/api/metrics").await.1);
    let pooled = &m["pooled"];
    assert_eq!(pooled["documents"], 1);
    assert_eq!((pooled["micro"]["tp"].as_u64(), pooled["micro"]["fp"].as_u64(), pooled["micro"]["fn"].as_u64()), (Some(2), Some(1), Some(1)));
    for k in ["precision", "recall", "f1"] {
        assert!((pooled["micro"][k].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }
    assert!((pooled["mean_distance"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let doc = &m["per_document"][0];
    assert_eq!(doc["corrected"], json!(["labor_market_policy", "migration", "welfare_state"]));
    assert_eq!((doc["wrong"].as_u64(), doc["missing"].as_u64()), (Some(1), Some(1)));
    assert_eq!(m["per_annotator"][0]["annotator_id"], "ann");
}

#[tokio::test]
async fn progress_counts() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let p = json(&get(&app, "/api/progress").await.1);
    assert_eq!(p, json!({"tasks": 3, "pending": 3, "in_progress": 0, "done": 0, "annotators": []}));
    get(&app, "/api/tasks/next?annotator=ann").await;
    let p = json(&get(&app, "/api/progress").await.1);
    assert_eq!((p["pending"].as_u64(), p["in_progress"].as_u64()), (Some(2), Some(1)));
    post(&app, "/api/judgments", &c01_corrections("ann")).await;
    let p = json(&get(&app, "/api/progress").await.1);
    assert_eq!((p["pending"].as_u64(), p["in_progress"].as_u64(), p["done"].as_u64()), (Some(2), Some(0), Some(1)));
    assert_eq!(p["annotators"], json!([{"annotator_id": "ann", "done": 1, "in_progress": 0}]));
}

#[tokio::test]
async fn unknown_route_has_error_body() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log"));
    let (status, body) = get(&app, "/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["error"], "not_found");
}

#[tokio::test]
async fn static_bundle_is_served_at_root() {
    let dir = tempfile::tempdir().unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<h1>review</h1>").unwrap();
    let app = router(shared(common::open(&dir.path().join("log"))), Some(ui));
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<h1>review</h1>");
    assert_eq!(get(&app, "/api/progress").await.0, StatusCode::OK);
}
