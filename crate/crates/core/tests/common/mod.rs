#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use conceptforge::corpus::{ingest, Document, UnknownLabelPolicy};
use conceptforge::enrichment::{enrich_ontology, EnrichParams, Encyclopedia, EnrichedOntology};
use conceptforge::ontology::{ConceptId, OntologyGraph};
use conceptforge::recognizer::{DirectAnnotation, Matcher};
use conceptforge::textproc::tokenize;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load_ontology(names: &[&str]) -> OntologyGraph {
    let text: Vec<String> = names.iter().map(|n| read_fixture(n)).collect();
    OntologyGraph::load(text.join("\n").as_bytes()).unwrap()
}

pub fn onto5() -> OntologyGraph {
    load_ontology(&["onto5.jsonl"])
}

pub fn encyc8() -> Encyclopedia {
    Encyclopedia::load(read_fixture("encyc8.jsonl").as_bytes()).unwrap()
}

pub fn enriched() -> EnrichedOntology {
    enrich_ontology(onto5(), &encyc8(), EnrichParams::default(), None).unwrap()
}

pub fn corpus(name: &str) -> Vec<Document> {
    let (c, _) = ingest(read_fixture(name).as_bytes(), None, UnknownLabelPolicy::Retain).unwrap();
    c.into_docs()
}

/// Non-comment, non-empty lines of a fixture.
pub fn lines(name: &str) -> Vec<String> {
    read_fixture(name)
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

pub fn ids(items: &[&str]) -> BTreeSet<ConceptId> {
    items.iter().map(|s| ConceptId::new(*s).unwrap()).collect()
}

/// Recognition by trying every dictionary pattern at every token position,
/// then resolving overlaps longest-first, leftmost-first.
pub fn naive_recognize(m: &Matcher, text: &str) -> Vec<DirectAnnotation> {
    let tokens = tokenize(text, m.text_config());
    let mut by_seq: BTreeMap<Vec<String>, Vec<(ConceptId, f64)>> = BTreeMap::new();
    for p in m.dictionary() {
        by_seq.entry(p.tokens).or_default().push((p.concept_id, p.weight));
    }
    let mut occurrences: Vec<(usize, usize, &Vec<String>)> = Vec::new();
    for start in 0..tokens.len() {
        for seq in by_seq.keys() {
            let end = start + seq.len();
            if end <= tokens.len() && tokens[start..end].iter().zip(seq).all(|(t, s)| &t.term == s) {
                occurrences.push((start, seq.len(), seq));
            }
        }
    }
    occurrences.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut covered = vec![false; tokens.len()];
    let mut kept = Vec::new();
    for (start, len, seq) in occurrences {
        if (start..start + len).any(|i| covered[i]) {
            continue;
        }
        (start..start + len).for_each(|i| covered[i] = true);
        kept.push((start, len, seq));
    }
    kept.sort_by_key(|k| k.0);
    let mut out: BTreeMap<ConceptId, DirectAnnotation> = BTreeMap::new();
    for (start, len, seq) in kept {
        let span = (tokens[start].start, tokens[start + len - 1].end);
        for (concept, weight) in &by_seq[seq] {
            let a = out.entry(concept.clone()).or_insert_with(|| DirectAnnotation {
                concept_id: concept.clone(),
                spans: vec![],
                match_count: 0,
                evidence: 0.0,
            });
            a.spans.push(span);
            a.match_count += 1;
            a.evidence += weight;
        }
    }
    out.into_values().collect()
}

/// Random texts over the words of every fixture text, with case changes
/// and punctuation between words.
pub fn random_fixture_texts(n: usize, seed: u64) -> Vec<String> {
    let mut pool: BTreeSet<String> = BTreeSet::new();
    for name in ["onto5.jsonl", "encyc8.jsonl", "mismatch20.jsonl", "corpus10.jsonl"] {
        for line in lines(name) {
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            let mut fields: Vec<String> = ["title", "abstract", "prefLabel"]
                .iter()
                .filter_map(|k| v.get(*k).and_then(|x| x.as_str()).map(str::to_owned))
                .collect();
            if let Some(alts) = v.get("altLabels").and_then(|a| a.as_array()) {
                fields.extend(alts.iter().filter_map(|a| a.as_str().map(str::to_owned)));
            }
            for f in fields {
                pool.extend(f.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()).map(str::to_owned));
            }
        }
    }
    let pool: Vec<String> = pool.into_iter().collect();
    let seps = [" ", " ", " ", ", ", ". ", "; ", "-", "\n", " (", ") "];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..60);
            let mut text = String::new();
            for i in 0..len {
                if i > 0 {
                    text.push_str(seps.choose(&mut rng).unwrap());
                }
                let w = pool.choose(&mut rng).unwrap();
                if rng.gen_bool(0.2) {
                    text.push_str(&w.to_uppercase());
                } else {
                    text.push_str(w);
                }
            }
            text
        })
        .collect()
}

/// All-pairs hop counts by Floyd-Warshall over an explicit edge list.
pub fn floyd_warshall(nodes: &[String], edges: &[(String, String)]) -> BTreeMap<(String, String), Option<u32>> {
    let n = nodes.len();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (a, b) in edges {
        let (i, j) = (index[a.as_str()], index[b.as_str()]);
        if i != j {
            d[i][j] = 1;
            d[j][i] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            out.insert((nodes[i].clone(), nodes[j].clone()), (d[i][j] < INF).then_some(d[i][j]));
        }
    }
    out
}

/// Nodes and undirected edges of an ontology, read from its records.
pub fn ontology_edges(ont: &OntologyGraph) -> (Vec<String>, Vec<(String, String)>) {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for r in ont.to_records() {
        nodes.push(r.id.to_string());
        for b in r.broader.iter().chain(&r.related).chain(r.parent.iter()) {
            edges.push((r.id.to_string(), b.to_string()));
        }
    }
    (nodes, edges)
}

/// Ontology edges plus concept-to-mapped-entry edges and support relations.
pub fn union_edges(eo: &EnrichedOntology) -> (Vec<String>, Vec<(String, String)>) {
    let (mut nodes, mut edges) = ontology_edges(eo.base());
    let mut entries = BTreeSet::new();
    for c in eo.enriched_concepts() {
        for n in &c.support_nodes {
            let id = format!("entry:{}", n.entry_id);
            entries.insert(id.clone());
            if n.hop == 0 {
                edges.push((c.concept_id.to_string(), id));
            }
        }
        for r in &c.support_relations {
            edges.push((format!("entry:{}", r.from), format!("entry:{}", r.to)));
        }
    }
    nodes.extend(entries);
    (nodes, edges)
}

pub fn hop_distance(h: Option<u32>) -> f64 {
    match h {
        Some(h) => f64::from(h) / f64::from(h + 1),
        None => 1.0,
    }
}

/// Checks identity, symmetry and the triangle inequality of `d` over
/// `nodes`; returns the first violation.
pub fn check_metric_axioms(nodes: &[String], d: impl Fn(&str, &str) -> f64) -> Result<(), String> {
    let n = nodes.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = d(&nodes[i], &nodes[j]);
        }
    }
    for i in 0..n {
        if m[i][i] != 0.0 {
            return Err(format!("d({0},{0}) = {1}", nodes[i], m[i][i]));
        }
        for j in 0..n {
            if i != j && m[i][j] == 0.0 {
                return Err(format!("d({},{}) = 0 for distinct nodes", nodes[i], nodes[j]));
            }
            if m[i][j] != m[j][i] {
                return Err(format!("asymmetric {} {}", nodes[i], nodes[j]));
            }
            for k in 0..n {
                if m[i][k] > m[i][j] + m[j][k] + 1e-12 {
                    return Err(format!("triangle {} {} {}", nodes[i], nodes[j], nodes[k]));
                }
            }
        }
    }
    Ok(())
}

/// Fixture graphs with at most 20 nodes: (name, ontology files).
pub const FIXTURE_GRAPHS: &[(&str, &[&str])] = &[
    ("onto5", &["onto5.jsonl"]),
    ("classes12", &["classes12.jsonl"]),
    ("onto5+classes12", &["onto5.jsonl", "classes12.jsonl"]),
];

/// Compares hop, semantic and enriched distances of every fixture graph
/// with Floyd-Warshall and checks the metric axioms.
pub fn verify_distances_against_brute_force() -> Result<usize, String> {
    let mut pairs = 0;
    for (name, files) in FIXTURE_GRAPHS {
        let ont = load_ontology(files);
        let (nodes, edges) = ontology_edges(&ont);
        if nodes.len() > 20 {
            return Err(format!("{name} has more than 20 nodes"));
        }
        let oracle = floyd_warshall(&nodes, &edges);
        for a in &nodes {
            for b in &nodes {
                let got = ont.hop_distance(a, b).map_err(|e| e.to_string())?;
                if got != oracle[&(a.clone(), b.clone())] {
                    return Err(format!("{name}: hops {a} {b}: {got:?}"));
                }
                pairs += 1;
            }
        }
        check_metric_axioms(&nodes, |a, b| ont.semantic_distance(a, b).unwrap()).map_err(|e| format!("{name}: {e}"))?;

        let eo = enrich_ontology(ont.clone(), &encyc8(), EnrichParams::default(), None).map_err(|e| e.to_string())?;
        let (unodes, uedges) = union_edges(&eo);
        let uoracle = floyd_warshall(&unodes, &uedges);
        for a in &nodes {
            for b in &nodes {
                let got = eo.enriched_hops(a, b).map_err(|e| e.to_string())?;
                if got != uoracle[&(a.clone(), b.clone())] {
                    return Err(format!("{name}: enriched hops {a} {b}: {got:?}"));
                }
                pairs += 1;
            }
        }
        check_metric_axioms(&nodes, |a, b| eo.enriched_distance(a, b).unwrap())
            .map_err(|e| format!("{name} enriched: {e}"))?;
    }
    Ok(pairs)
}

/// Every concept pair of every fixture graph: enriched <= semantic.
pub fn verify_enrichment_never_hurts() -> Result<usize, String> {
    let mut pairs = 0;
    for (name, files) in FIXTURE_GRAPHS {
        let ont = load_ontology(files);
        let eo = enrich_ontology(ont.clone(), &encyc8(), EnrichParams::default(), None).map_err(|e| e.to_string())?;
        let ids: Vec<String> = ont.to_records().into_iter().map(|r| r.id).collect();
        for a in &ids {
            for b in &ids {
                let (e, s) = (eo.enriched_distance(a, b).unwrap(), ont.semantic_distance(a, b).unwrap());
                if e > s {
                    return Err(format!("{name}: enriched {e} > semantic {s} for {a} {b}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(pairs)
}

/// Enriched onto5 + classes12 graph used by the combiner properties.
pub fn combiner_graph() -> EnrichedOntology {
    let base = load_ontology(&["onto5.jsonl", "classes12.jsonl"]);
    enrich_ontology(base, &encyc8(), EnrichParams::default(), None).unwrap()
}

pub fn keyword_set(doc_id: &str, items: &[(String, f64)]) -> conceptforge::recognizer::KeywordSet {
    use conceptforge::recognizer::{Keyword, KeywordSet, Provenance};
    let keywords = items
        .iter()
        .map(|(id, s)| Keyword {
            concept_id: ConceptId::new(id.as_str()).unwrap(),
            score: *s,
            provenance: Provenance::Classifier,
            hops: 0,
        })
        .collect();
    KeywordSet::new(doc_id, keywords)
}

/// Checks I ⊆ C ⊆ union, tau monotonicity and tau = 1 giving the union for
/// one input pair with `tau_lo <= tau_hi`.
pub fn check_combiner(
    graph: &EnrichedOntology,
    ml: &conceptforge::recognizer::KeywordSet,
    onto: &conceptforge::recognizer::KeywordSet,
    tau_lo: f64,
    tau_hi: f64,
) -> Result<(), String> {
    use conceptforge::combiner::{combine, DEFAULT_FALLBACK_N};
    let run = |tau| combine(ml, onto, graph, tau, DEFAULT_FALLBACK_N).map(|k| k.ids()).map_err(|e| e.to_string());
    let (m, o) = (ml.ids(), onto.ids());
    let inter: BTreeSet<ConceptId> = m.intersection(&o).cloned().collect();
    let union: BTreeSet<ConceptId> = m.union(&o).cloned().collect();
    let (lo, hi, one) = (run(tau_lo)?, run(tau_hi)?, run(1.0)?);
    for c in [&lo, &hi, &one] {
        if !c.is_subset(&union) {
            return Err(format!("result {c:?} not within union {union:?}"));
        }
        if !inter.is_empty() && !inter.is_subset(c) {
            return Err(format!("intersection {inter:?} not within result {c:?}"));
        }
    }
    if !inter.is_empty() {
        if !lo.is_subset(&hi) {
            return Err(format!("tau {tau_lo} gave {lo:?}, tau {tau_hi} gave {hi:?}"));
        }
        if one != union {
            return Err(format!("tau 1 gave {one:?}, union is {union:?}"));
        }
    }
    Ok(())
}

/// PRF by walking the universe element by element.
pub fn brute_force_prf(predicted: &BTreeSet<u32>, gold: &BTreeSet<u32>) -> (usize, usize, usize, f64, f64, f64) {
    let universe: BTreeSet<u32> = predicted.union(gold).copied().collect();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for x in &universe {
        match (predicted.contains(x), gold.contains(x)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => unreachable!(),
        }
    }
    if predicted.is_empty() && gold.is_empty() {
        return (0, 0, 0, 1.0, 1.0, 1.0);
    }
    let p = if predicted.is_empty() { 0.0 } else { tp as f64 / predicted.len() as f64 };
    let r = if gold.is_empty() { 0.0 } else { tp as f64 / gold.len() as f64 };
    let f = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (predicted.len() + gold.len()) as f64 };
    (tp, fp, fn_, p, r, f)
}

/// Set distance by brute force over a Floyd-Warshall hop table.
pub fn brute_force_set_distance(
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    hops: &BTreeMap<(String, String), Option<u32>>,
) -> f64 {
    let d = |x: &String, y: &String| match hops[&(x.clone(), y.clone())] {
        Some(h) => h as f64 / (h as f64 + 1.0),
        None => 1.0,
    };
    let side = |xs: &BTreeSet<String>, ys: &BTreeSet<String>| {
        xs.iter()
            .map(|x| ys.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / xs.len() as f64
    };
    (side(a, b) + side(b, a)) / 2.0
}

/// Exact posterior over the topic assignments of the last document of
/// `docs` when every other document has a single label, by enumerating
/// every assignment. Returns (assignment, probability) pairs.
pub fn exact_llda_posterior(
    docs: &[conceptforge::features::LabeledTokens],
    num_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
) -> Vec<(Vec<u32>, f64)> {
    use statrs::function::gamma::ln_gamma;
    let (last, fixed) = docs.split_last().unwrap();
    assert!(fixed.iter().all(|d| d.labels.len() == 1));
    let n = last.tokens.len();
    let k = last.labels.len();
    let mut states = Vec::new();
    for code in 0..k.pow(n as u32) {
        let mut rest = code;
        let z: Vec<u32> = (0..n)
            .map(|_| {
                let t = last.labels[rest % k];
                rest /= k;
                t
            })
            .collect();
        let mut n_tw = vec![vec![0u32; vocab_size]; num_topics];
        for d in fixed {
            for &w in &d.tokens {
                n_tw[d.labels[0] as usize][w as usize] += 1;
            }
        }
        let mut n_dt = vec![0u32; num_topics];
        for (&w, &t) in last.tokens.iter().zip(&z) {
            n_tw[t as usize][w as usize] += 1;
            n_dt[t as usize] += 1;
        }
        let mut log_p: f64 = last.labels.iter().map(|&t| ln_gamma(f64::from(n_dt[t as usize]) + alpha)).sum();
        for row in &n_tw {
            let total: u32 = row.iter().sum();
            log_p += row.iter().map(|&c| ln_gamma(f64::from(c) + beta)).sum::<f64>();
            log_p -= ln_gamma(f64::from(total) + vocab_size as f64 * beta);
        }
        states.push((z, log_p));
    }
    let max = states.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = states.iter().map(|s| (s.1 - max).exp()).sum();
    states.into_iter().map(|(z, lp)| (z, (lp - max).exp() / norm)).collect()
}

/// Total variation distance between the sampler's empirical distribution
/// over the last document's assignments and the exact posterior.
pub fn llda_enumeration_gap(sweeps: usize, seed: u64) -> f64 {
    use conceptforge::features::{GibbsSampler, LabeledTokens, LldaParams};
    let docs = vec![
        LabeledTokens { doc_id: "a".into(), tokens: vec![0, 0, 1], labels: vec![0] },
        LabeledTokens { doc_id: "b".into(), tokens: vec![2, 2], labels: vec![1] },
        LabeledTokens { doc_id: "mixed".into(), tokens: vec![0, 2, 1, 2], labels: vec![0, 1] },
    ];
    let params = LldaParams { alpha: Some(0.5), beta: 0.1, iterations: 1, seed, inference_iterations: 1 };
    let exact = exact_llda_posterior(&docs, 2, 3, 0.5, 0.1);
    let mut sampler = GibbsSampler::new(docs, vec!["x".into(), "y".into()], 3, &params).unwrap();
    for _ in 0..200 {
        sampler.sweep();
    }
    let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for _ in 0..sweeps {
        sampler.sweep();
        *counts.entry(sampler.assignments()[2].clone()).or_default() += 1;
    }
    0.5 * exact
        .iter()
        .map(|(z, p)| (counts.get(z).copied().unwrap_or(0) as f64 / sweeps as f64 - p).abs())
        .sum::<f64>()
}

/// Pooled recall of direct annotations against gold concepts on the
/// mismatch corpus, with or without neighborhood terms.
pub fn mismatch_recall(use_neighborhood_terms: bool) -> f64 {
    use conceptforge::recognizer::{build_matcher, recognize, MatcherParams};
    use conceptforge::textproc::TextConfig;
    let params = MatcherParams { use_neighborhood_terms, ..MatcherParams::default() };
    let m = build_matcher(&enriched(), &TextConfig::english(), &params).unwrap();
    let (mut hit, mut total) = (0, 0);
    for d in corpus("mismatch20.jsonl") {
        let found: BTreeSet<ConceptId> = recognize(&m, &d).into_iter().map(|a| a.concept_id).collect();
        total += d.gold_concepts.len();
        hit += d.gold_concepts.iter().filter(|g| found.contains(*g)).count();
    }
    hit as f64 / total as f64
}

/// Held-out micro-F1 of the default pipeline on the 500-document,
/// 10-class flat corpus.
pub fn flat_corpus_micro_f1(seed: u64) -> (f64, conceptforge::pipeline::SplitRun) {
    use conceptforge::pipeline::{train_and_evaluate, ClassificationSetup};
    let (ont, docs) = conceptforge::synth::flat_corpus(500, 10, seed);
    let (_, run) = train_and_evaluate(&docs, Some(&ont), &ClassificationSetup::default()).unwrap();
    (run.evaluation.micro.f1, run)
}

/// Held-out micro-F1 on the skewed hierarchy corpus at each level.
pub fn level_micro_f1(features: conceptforge::features::FeatureKind, n_docs: usize, seed: u64) -> [f64; 3] {
    use conceptforge::pipeline::{train_and_evaluate, ClassificationSetup};
    let (ont, docs) = conceptforge::synth::skewed_hierarchy_corpus(n_docs, seed);
    let mut out = [0.0; 3];
    for (i, level) in [1u32, 2, 3].into_iter().enumerate() {
        let setup = ClassificationSetup { level: Some(level), features, ..ClassificationSetup::default() };
        out[i] = train_and_evaluate(&docs, Some(&ont), &setup).unwrap().1.evaluation.micro.f1;
    }
    out
}
