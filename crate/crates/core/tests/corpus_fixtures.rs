mod common;

use std::collections::BTreeSet;

use conceptforge::classifier::{project_labels, split_indices};
use conceptforge::corpus::{ingest, Corpus, LabelKind, UnknownLabelPolicy};
use conceptforge::evaluation::{class_distribution, set_distance};
use conceptforge::features::Vocabulary;
use conceptforge::textproc::TextConfig;

#[test]
fn vocabulary_matches_independent_recount() {
    let docs = common::corpus("corpus10.jsonl");
    let text = TextConfig::english();
    let terms: Vec<Vec<String>> = docs.iter().map(|d| text.terms(&d.text())).collect();
    let vocab = Vocabulary::build(&terms, 1).unwrap();
    assert_eq!(vocab.to_tsv(), common::read_fixture("corpus10.vocabulary.expected.tsv"));
    assert_eq!(Vocabulary::from_tsv(&vocab.to_tsv()).unwrap(), vocab);
}

#[test]
fn histograms_match_independent_recount() {
    let docs = common::corpus("corpus10.jsonl");
    for (kind, file) in [
        (LabelKind::Classes, "corpus10.classes_histogram.expected.tsv"),
        (LabelKind::Concepts, "corpus10.concepts_histogram.expected.tsv"),
    ] {
        let dist = class_distribution(&docs, kind);
        let got: Vec<String> = dist.histogram.iter().map(|h| format!("{}\t{}", h.label, h.documents)).collect();
        assert_eq!(got, common::lines(file));
        let assignments: usize = docs
            .iter()
            .map(|d| kind.labels(d).iter().collect::<BTreeSet<_>>().len())
            .sum();
        assert_eq!(dist.total_assignments, assignments);
    }
}

#[test]
fn year_filter_matches_manual_subset() {
    let corpus = Corpus::new(common::corpus("corpus10.jsonl")).unwrap();
    let (kept, report) = corpus.filter_by_year(2003, false);
    let ids: Vec<String> = kept.docs().iter().map(|d| d.doc_id.clone()).collect();
    assert_eq!(ids, common::lines("corpus10.after2003.expected.txt"));
    assert_eq!(report.missing_year, 1);
    assert_eq!(report.excluded_by_year, 2);
}

#[test]
fn projections_match_hand_ancestor_walk() {
    let ont = common::load_ontology(&["onto5.jsonl", "classes12.jsonl"]);
    let docs = common::corpus("corpus10.jsonl");
    let mut got = Vec::new();
    for d in &docs {
        for level in 1..=3 {
            let labels: Vec<String> = project_labels(&d.gold_classes, &ont, level)
                .unwrap()
                .into_iter()
                .map(String::from)
                .collect();
            got.push(format!("{}\t{level}\t{}", d.doc_id, labels.join(",")));
        }
    }
    let expected: Vec<String> = common::read_fixture("corpus10.projection.expected.tsv")
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn set_distances_match_brute_force() {
    let ont = common::onto5();
    let expected = common::lines("onto5.set_distance.expected.tsv");
    for (case, exp) in common::lines("onto5.set_distance.cases.tsv").iter().zip(expected) {
        let cols: Vec<&str> = case.split('\t').collect();
        let a = common::ids(&cols[1].split(',').collect::<Vec<_>>());
        let b = common::ids(&cols[2].split(',').collect::<Vec<_>>());
        let (name, value) = exp.split_once('\t').unwrap();
        assert_eq!(name, cols[0]);
        let got = set_distance(&a, &b, &ont).unwrap();
        assert!((got - value.parse::<f64>().unwrap()).abs() < 1e-12, "{name}: {got} vs {value}");
    }
}

#[test]
fn split_of_100_docs_is_stable() {
    let (train, test) = split_indices(100, 0.67, 7).unwrap();
    let expected = common::lines("split100_seed7.expected.tsv");
    let got: Vec<String> = train
        .iter()
        .map(|i| format!("train\t{i}"))
        .chain(test.iter().map(|i| format!("test\t{i}")))
        .collect();
    assert_eq!(got, expected);
    assert_eq!((train.len(), test.len()), (67, 33));
}

#[test]
fn unknown_labels_against_the_fixture_ontology() {
    let ont = common::load_ontology(&["onto5.jsonl", "classes12.jsonl"]);
    let mut text = common::read_fixture("corpus10.jsonl");
    text.push_str(r#"{"doc_id":"c11","title":"Extra","gold_concepts":["nope"],"gold_classes":["cls_nope"]}"#);
    let (c, r) = ingest(text.as_bytes(), Some(&ont), UnknownLabelPolicy::Drop).unwrap();
    assert_eq!((r.unknown_concepts, r.unknown_classes, r.dropped_labels), (1, 1, 2));
    assert!(c.get("c11").unwrap().gold_concepts.is_empty());
}
