//! Seeded synthetic corpora for tests, acceptance runs and demos.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::split_indices;
use crate::corpus::Document;
use crate::features::{LabeledTokens, SparseVector};
use crate::ontology::{ConceptId, OntologyGraph};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct alphabetic pseudo-word for every `n` (three consonant-vowel
/// syllables).
pub fn pseudo_word(n: usize) -> String {
    let syllables = CONSONANTS.len() * VOWELS.len();
    let mut out = String::with_capacity(6);
    let mut rest = n;
    for _ in 0..3 {
        let s = rest % syllables;
        rest /= syllables;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    assert_eq!(rest, 0, "pseudo-word index {n} out of range");
    out
}

fn cid(s: String) -> ConceptId {
    ConceptId::new(s).expect("generated ids are non-empty")
}

fn document(doc_id: String, tokens: &[String], gold_classes: Vec<ConceptId>) -> Document {
    let cut = tokens.len().min(6);
    Document {
        doc_id,
        title: tokens[..cut].join(" "),
        abstract_text: tokens[cut..].join(" "),
        language: "en".into(),
        year: Some(2005),
        gold_concepts: Vec::new(),
        gold_classes,
    }
}

/// Four points in the plane, two per class, separable by the diagonal.
pub fn separable_toy() -> (Vec<SparseVector>, Vec<Vec<ConceptId>>) {
    let xs = vec![
        SparseVector::from_dense(&[1.0, 0.0]),
        SparseVector::from_dense(&[0.9, 0.2]),
        SparseVector::from_dense(&[0.0, 1.0]),
        SparseVector::from_dense(&[0.2, 0.9]),
    ];
    let a = cid("toy_a".into());
    let b = cid("toy_b".into());
    (xs, vec![vec![a.clone()], vec![a], vec![b.clone()], vec![b]])
}

fn class_records(classes: &[(String, Option<String>, u32)]) -> OntologyGraph {
    let lines: Vec<String> = classes
        .iter()
        .map(|(id, parent, level)| {
            let mut v = serde_json::json!({"id": id, "prefLabel": format!("Class {id}"), "kind": "class", "level": level});
            if let Some(p) = parent {
                v["parent"] = p.clone().into();
            }
            v.to_string()
        })
        .collect();
    OntologyGraph::load(lines.join("\n").as_bytes()).expect("generated hierarchy is valid")
}

/// Flat classification: `classes` level-1 classes, each with its own
/// 30-word vocabulary plus a shared 60-word background vocabulary. Every
/// document has one label, a quarter of them a second one.
pub fn flat_corpus(n_docs: usize, classes: usize, seed: u64) -> (OntologyGraph, Vec<Document>) {
    const CLASS_WORDS: usize = 30;
    const COMMON_WORDS: usize = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..classes).map(|k| format!("fc{k:02}")).collect();
    let ontology = class_records(&ids.iter().map(|id| (id.clone(), None, 1)).collect::<Vec<_>>());
    let class_word = |k: usize, j: usize| pseudo_word(COMMON_WORDS + k * CLASS_WORDS + j);
    let docs = (0..n_docs)
        .map(|d| {
            let first = rng.gen_range(0..classes);
            let mut labels = vec![first];
            if rng.gen_bool(0.25) {
                let second = rng.gen_range(0..classes);
                if second != first {
                    labels.push(second);
                }
            }
            let tokens: Vec<String> = (0..40)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        let k = labels[rng.gen_range(0..labels.len())];
                        class_word(k, rng.gen_range(0..CLASS_WORDS))
                    } else {
                        pseudo_word(rng.gen_range(0..COMMON_WORDS))
                    }
                })
                .collect();
            let gold = labels.iter().map(|&k| cid(ids[k].clone())).collect();
            document(format!("flat{d:04}"), &tokens, gold)
        })
        .collect();
    (ontology, docs)
}

/// Identifiers of the 4 x 3 x 3 hierarchy, level by level.
pub fn hierarchy_ids() -> (Vec<String>, Vec<String>, Vec<String>) {
    let l1: Vec<String> = (0..4).map(|a| format!("h{a}")).collect();
    let l2: Vec<String> = l1
        .iter()
        .flat_map(|p| (0..3).map(move |b| format!("{p}{b}")))
        .collect();
    let l3: Vec<String> = l2
        .iter()
        .flat_map(|p| (0..3).map(move |c| format!("{p}{c}")))
        .collect();
    (l1, l2, l3)
}

/// Three-level hierarchy (4 top classes, 3 children each, 3 grandchildren
/// each) with leaf labels drawn from a Zipf(1) distribution. Each token
/// comes from the vocabulary of the document's level-1, level-2 or level-3
/// class, or from background words, with equal probability.
pub fn skewed_hierarchy_corpus(n_docs: usize, seed: u64) -> (OntologyGraph, Vec<Document>) {
    const WORDS_PER_CLASS: usize = 15;
    const COMMON_WORDS: usize = 100;
    let (l1, l2, l3) = hierarchy_ids();
    let mut records: Vec<(String, Option<String>, u32)> = l1.iter().map(|id| (id.clone(), None, 1)).collect();
    records.extend(l2.iter().enumerate().map(|(i, id)| (id.clone(), Some(l1[i / 3].clone()), 2)));
    records.extend(l3.iter().enumerate().map(|(i, id)| (id.clone(), Some(l2[i / 3].clone()), 3)));
    let ontology = class_records(&records);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..=l3.len()).map(|r| 1.0 / r as f64).collect();
    let zipf = WeightedIndex::new(&weights).expect("positive weights");
    // per-level word blocks after the background words
    let word = |block: usize, j: usize| pseudo_word(COMMON_WORDS + block * WORDS_PER_CLASS + j);
    let docs = (0..n_docs)
        .map(|d| {
            let leaf = zipf.sample(&mut rng);
            let blocks = [leaf / 9, l1.len() + leaf / 3, l1.len() + l2.len() + leaf];
            let tokens: Vec<String> = (0..40)
                .map(|_| match rng.gen_range(0..4) {
                    3 => pseudo_word(rng.gen_range(0..COMMON_WORDS)),
                    level => word(blocks[level], rng.gen_range(0..WORDS_PER_CLASS)),
                })
                .collect();
            document(format!("skew{d:04}"), &tokens, vec![cid(l3[leaf].clone())])
        })
        .collect();
    (ontology, docs)
}

/// Two labels with disjoint 10-term vocabularies (terms 0..10 belong to
/// label 0, 10..20 to label 1): 10 documents per single label and 10 with
/// both, 20 tokens each.
pub fn disjoint_llda_corpus(seed: u64) -> (Vec<LabeledTokens>, Vec<String>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let label_sets: [&[u32]; 3] = [&[0], &[1], &[0, 1]];
    for (g, labels) in label_sets.iter().enumerate() {
        for i in 0..10 {
            let tokens = (0..20)
                .map(|_| {
                    let l = labels[rng.gen_range(0..labels.len())];
                    l * 10 + rng.gen_range(0..10)
                })
                .collect();
            docs.push(LabeledTokens {
                doc_id: format!("ll{g}{i:02}"),
                tokens,
                labels: labels.to_vec(),
            });
        }
    }
    (docs, vec!["label_a".into(), "label_b".into()], 20)
}

/// Train/test document split used by the synthetic evaluations.
pub fn split_documents(docs: &[Document], ratio: f64, seed: u64) -> (Vec<Document>, Vec<Document>) {
    let (train, test) = split_indices(docs.len(), ratio, seed).expect("synthetic corpora have >= 2 docs");
    (
        train.into_iter().map(|i| docs[i].clone()).collect(),
        test.into_iter().map(|i| docs[i].clone()).collect(),
    )
}
