mod common;

use conceptforge::recognizer::{build_matcher, recognize_text, MatcherParams};
use conceptforge::textproc::TextConfig;

#[test]
fn automaton_agrees_with_naive_scan() {
    let eo = common::enriched();
    for params in [
        MatcherParams::default(),
        MatcherParams {
            use_neighborhood_terms: false,
            min_term_weight: 0.05,
        },
    ] {
        let m = build_matcher(&eo, &TextConfig::english(), &params).unwrap();
        for (i, text) in common::random_fixture_texts(100, 2024).iter().enumerate() {
            assert_eq!(recognize_text(&m, text), common::naive_recognize(&m, text), "text {i}: {text:?}");
        }
    }
}

#[test]
fn fixture_documents_agree_with_naive_scan() {
    let eo = common::enriched();
    let m = build_matcher(&eo, &TextConfig::english(), &MatcherParams::default()).unwrap();
    for name in ["mismatch20.jsonl", "corpus10.jsonl"] {
        for d in common::corpus(name) {
            let text = d.text();
            assert_eq!(recognize_text(&m, &text), common::naive_recognize(&m, &text), "{}", d.doc_id);
        }
    }
}
