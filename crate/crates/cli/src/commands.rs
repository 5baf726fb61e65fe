//! One function per subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use conceptforge::combiner::combine;
use conceptforge::corpus::{ingest, Document};
use conceptforge::enrichment::{enrich_ontology, read_mapping_overrides, Encyclopedia, EnrichedOntology};
use conceptforge::evaluation::{
    class_distribution, evaluate_against_gold, inter_expert_report, judgment_metrics, read_judgments,
    summarize_judgments, InterExpertReport,
};
use conceptforge::ontology::{ConceptId, OntologyGraph};
use conceptforge::pipeline::{target_labels, train_and_evaluate, train_classifier, ClassifierBundle};
use conceptforge::recognizer::{build_matcher, read_keyword_sets, suggest_keywords, write_keyword_sets, KeywordSet};
use conceptforge::textproc::TextConfig;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_config, resolve};
use crate::manifest::Run;
use crate::{invalid, runtime, Command, Failure, GraphArgs, Tunables};

pub fn run(command: Command, config: Option<&Path>) -> Result<(), Failure> {
    let config_map = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| runtime(format!("reading {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => serde_json::Map::new(),
    };
    let start = |name: &'static str, tune: &Tunables| -> Result<Run, Failure> {
        let settings = resolve(&config_map, &tune.overrides()).map_err(|e| invalid(format!("settings: {e}")))?;
        Ok(Run::new(name, settings))
    };
    match command {
        Command::Ingest(a) => ingest_cmd(start("ingest", &a.tune)?, &a),
        Command::Enrich(a) => enrich_cmd(start("enrich", &a.tune)?, &a),
        Command::Annotate(a) => annotate_cmd(start("annotate", &a.tune)?, &a),
        Command::Train(a) => train_cmd(start("train", &a.tune)?, &a),
        Command::Classify(a) => classify_cmd(start("classify", &a.tune)?, &a),
        Command::Combine(a) => combine_cmd(start("combine", &a.tune)?, &a),
        Command::Evaluate(a) => evaluate_cmd(start("evaluate", &a.tune)?, &a),
        Command::Stats(a) => stats_cmd(start("stats", &a.tune)?, &a),
        Command::Serve(a) => serve_cmd(start("serve", &a.tune)?, &a),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn load_ontology(run: &mut Run, path: &Path) -> Result<OntologyGraph, Failure> {
    let text = run.read("ontology", path)?;
    OntologyGraph::load(text.as_bytes()).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_corpus(run: &mut Run, path: &Path, ontology: Option<&OntologyGraph>) -> Result<Vec<Document>, Failure> {
    let text = run.read("corpus", path)?;
    let (corpus, report) = ingest(text.as_bytes(), ontology, run.settings.unknown_labels)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if report.unknown_concepts + report.unknown_classes > 0 {
        log::warn!(
            "{}: {} unknown concept and {} unknown class label(s)",
            path.display(),
            report.unknown_concepts,
            report.unknown_classes
        );
    }
    Ok(corpus.into_docs())
}

fn load_keywords(run: &mut Run, role: &'static str, path: &Path) -> Result<Vec<KeywordSet>, Failure> {
    let text = run.read(role, path)?;
    read_keyword_sets(text.as_bytes()).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn enrich(run: &mut Run, ontology: OntologyGraph, encyclopedia: &Path, overrides: Option<&Path>) -> Result<EnrichedOntology, Failure> {
    let text = run.read("encyclopedia", encyclopedia)?;
    let enc = Encyclopedia::load(text.as_bytes()).map_err(|e| invalid(format!("{}: {e}", encyclopedia.display())))?;
    let table = match overrides {
        Some(p) => {
            let text = run.read("overrides", p)?;
            Some(read_mapping_overrides(text.as_bytes()).map_err(|e| invalid(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    enrich_ontology(ontology, &enc, run.settings.enrich_params(), table.as_ref()).map_err(invalid)
}

fn load_graph(run: &mut Run, g: &GraphArgs) -> Result<Option<EnrichedOntology>, Failure> {
    if let Some(path) = &g.enriched {
        let text = run.read("enriched", path)?;
        return EnrichedOntology::from_json(&text)
            .map(Some)
            .map_err(|e| invalid(format!("{}: {e}", path.display())));
    }
    let Some(path) = &g.ontology else {
        return Ok(None);
    };
    let ont = load_ontology(run, path)?;
    match &g.encyclopedia {
        Some(enc) => enrich(run, ont, enc, None).map(Some),
        None => Ok(Some(EnrichedOntology::unenriched(ont))),
    }
}

fn require_graph(run: &mut Run, g: &GraphArgs) -> Result<EnrichedOntology, Failure> {
    load_graph(run, g)?.ok_or_else(|| invalid("--enriched or --ontology is required"))
}

fn ingest_cmd(mut run: Run, a: &crate::IngestArgs) -> Result<(), Failure> {
    let ontology = a.ontology.as_deref().map(|p| load_ontology(&mut run, p)).transpose()?;
    let text = run.read("corpus", &a.corpus)?;
    let (corpus, report) = ingest(text.as_bytes(), ontology.as_ref(), run.settings.unknown_labels)
        .map_err(|e| invalid(format!("{}: {e}", a.corpus.display())))?;
    let (corpus, year) = match run.settings.min_year {
        Some(y) => {
            let (c, r) = corpus.filter_by_year(y, run.settings.year_inclusive);
            (c, Some(r))
        }
        None => (corpus, None),
    };
    run.write("corpus", a.out.as_deref(), &corpus.to_jsonl())?;
    run.finish(json!({"ingest": report, "year_filter": year, "documents": corpus.len()}))
}

fn enrich_cmd(mut run: Run, a: &crate::EnrichArgs) -> Result<(), Failure> {
    let ont = load_ontology(&mut run, &a.ontology)?;
    let eo = enrich(&mut run, ont, &a.encyclopedia, a.overrides.as_deref())?;
    let text = eo.to_json().map_err(runtime)?;
    run.write("enriched", a.out.as_deref(), &text)?;
    let stats = eo.stats();
    if a.out.is_some() {
        run.write("mapping_stats", None, &to_json(&stats))?;
    }
    run.finish(json!({"mapping": stats, "union_nodes": eo.union_node_count()}))
}

fn annotate_cmd(mut run: Run, a: &crate::AnnotateArgs) -> Result<(), Failure> {
    let eo = require_graph(&mut run, &a.graph)?;
    let docs = load_corpus(&mut run, &a.corpus, Some(eo.base()))?;
    let matcher = build_matcher(&eo, &TextConfig::english(), &run.settings.matcher_params()).map_err(invalid)?;
    let params = run.settings.suggest_params();
    let sets = docs
        .par_iter()
        .map(|d| suggest_keywords(d, &matcher, &eo, &params))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let with_keywords = sets.iter().filter(|s| !s.is_empty()).count();
    run.write("keywords", a.out.as_deref(), &write_keyword_sets(&sets))?;
    run.finish(json!({"documents": docs.len(), "with_keywords": with_keywords, "patterns": matcher.len()}))
}

fn train_cmd(mut run: Run, a: &crate::TrainArgs) -> Result<(), Failure> {
    let ontology = a.ontology.as_deref().map(|p| load_ontology(&mut run, p)).transpose()?;
    let docs = load_corpus(&mut run, &a.corpus, ontology.as_ref())?;
    let setup = run.settings.classification();
    let (bundle, report) = if a.full {
        (train_classifier(&docs, ontology.as_ref(), &setup).map_err(invalid)?, Value::Null)
    } else {
        let (bundle, split) = train_and_evaluate(&docs, ontology.as_ref(), &setup).map_err(invalid)?;
        let report = json!({
            "train_documents": split.train_ids.len(),
            "test_documents": split.test_ids.len(),
            "micro": split.evaluation.micro,
            "macro": split.evaluation.macro_,
        });
        (bundle, report)
    };
    run.write("model", Some(&a.out), &bundle.to_json())?;
    if !report.is_null() {
        run.write("evaluation", None, &to_json(&report))?;
    }
    let summary = json!({
        "classes": bundle.model.classes.len(),
        "skipped_classes": bundle.model.skipped.len(),
        "dimension": bundle.model.dimension,
        "evaluation": report,
    });
    run.finish(summary)
}

fn classify_cmd(mut run: Run, a: &crate::ClassifyArgs) -> Result<(), Failure> {
    let text = run.read("model", &a.model)?;
    let bundle = ClassifierBundle::from_json(&text).map_err(|e| invalid(format!("{}: {e}", a.model.display())))?;
    let docs = load_corpus(&mut run, &a.corpus, None)?;
    let sets = bundle.predict_all(&docs).map_err(invalid)?;
    run.write("keywords", a.out.as_deref(), &write_keyword_sets(&sets))?;
    run.finish(json!({"documents": docs.len(), "features": bundle.setup.features}))
}

fn by_doc(sets: Vec<KeywordSet>) -> BTreeMap<String, KeywordSet> {
    sets.into_iter().map(|s| (s.doc_id.clone(), s)).collect()
}

fn combine_cmd(mut run: Run, a: &crate::CombineArgs) -> Result<(), Failure> {
    let eo = require_graph(&mut run, &a.graph)?;
    let ml = by_doc(load_keywords(&mut run, "ml", &a.ml)?);
    let onto = by_doc(load_keywords(&mut run, "onto", &a.onto)?);
    let ids: BTreeSet<&String> = ml.keys().chain(onto.keys()).collect();
    let (tau, fallback) = (run.settings.tau, run.settings.fallback_n);
    let mut out = Vec::new();
    for id in ids {
        let empty = KeywordSet::empty(id.as_str());
        let m = ml.get(id).unwrap_or(&empty);
        let o = onto.get(id).unwrap_or(&empty);
        out.push(combine(m, o, &eo, tau, fallback).map_err(|e| invalid(format!("{id}: {e}")))?);
    }
    run.write("keywords", a.out.as_deref(), &write_keyword_sets(&out))?;
    run.finish(json!({"documents": out.len()}))
}

#[derive(Serialize)]
struct ExpertDoc {
    doc_id: String,
    #[serde(flatten)]
    report: InterExpertReport,
}

#[derive(Serialize)]
struct ExpertSummary {
    documents: usize,
    skipped: usize,
    expert_mean: Option<f64>,
    model_mean: Option<f64>,
    per_document: Vec<ExpertDoc>,
}

fn evaluate_cmd(mut run: Run, a: &crate::EvaluateArgs) -> Result<(), Failure> {
    let predicted = load_keywords(&mut run, "predicted", &a.predicted)?;
    let graph = load_graph(&mut run, &a.graph)?;
    let text = if let Some(path) = &a.judgments {
        let graph = graph.ok_or_else(|| invalid("--judgments needs --enriched or --ontology"))?;
        let log = run.read("judgments", path)?;
        let judgments = read_judgments(log.as_bytes()).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut reports = Vec::new();
        for set in &predicted {
            reports.extend(judgment_metrics(set, &judgments, &graph).map_err(invalid)?);
        }
        let summary = summarize_judgments(reports).ok_or_else(|| invalid("no judged documents"))?;
        to_json(&summary)
    } else if !a.experts.is_empty() {
        if a.experts.len() < 2 {
            return Err(invalid("--experts needs at least two files"));
        }
        let graph = graph.ok_or_else(|| invalid("--experts needs --enriched or --ontology"))?;
        let experts: Vec<BTreeMap<String, KeywordSet>> = a
            .experts
            .iter()
            .map(|p| load_keywords(&mut run, "expert", p).map(by_doc))
            .collect::<Result<_, _>>()?;
        let mut per_document = Vec::new();
        let mut skipped = 0;
        for set in &predicted {
            let sets: Option<Vec<BTreeSet<ConceptId>>> = experts
                .iter()
                .map(|e| e.get(&set.doc_id).map(KeywordSet::ids).filter(|s| !s.is_empty()))
                .collect();
            match sets {
                Some(sets) if !set.is_empty() => {
                    let report = inter_expert_report(&sets, &set.ids(), &graph).map_err(invalid)?;
                    per_document.push(ExpertDoc {
                        doc_id: set.doc_id.clone(),
                        report,
                    });
                }
                _ => skipped += 1,
            }
        }
        let n = per_document.len();
        let mean = |f: fn(&InterExpertReport) -> f64| {
            (n > 0).then(|| per_document.iter().map(|d| f(&d.report)).sum::<f64>() / n as f64)
        };
        let summary = ExpertSummary {
            documents: n,
            skipped,
            expert_mean: mean(|r| r.expert_mean),
            model_mean: mean(|r| r.model_mean),
            per_document,
        };
        to_json(&summary)
    } else {
        let corpus = a.corpus.as_deref().expect("clap requires --corpus here");
        let base = graph.as_ref().map(EnrichedOntology::base);
        let docs = load_corpus(&mut run, corpus, base)?;
        let setup = run.settings.classification();
        let gold: Vec<(String, Vec<ConceptId>)> = docs
            .iter()
            .map(|d| Ok((d.doc_id.clone(), target_labels(d, base, &setup).map_err(invalid)?)))
            .collect::<Result<_, Failure>>()?;
        let eval = evaluate_against_gold(&predicted, &gold, graph.as_ref()).map_err(invalid)?;
        to_json(&eval)
    };
    run.write("report", a.out.as_deref(), &text)?;
    run.finish(Value::Null)
}

fn stats_cmd(mut run: Run, a: &crate::StatsArgs) -> Result<(), Failure> {
    let docs = load_corpus(&mut run, &a.corpus, None)?;
    let dist = class_distribution(&docs, run.settings.kind);
    run.write("histogram", a.out.as_deref(), &to_json(&dist))?;
    run.finish(json!({"documents": dist.documents, "distinct_labels": dist.distinct_labels}))
}

fn serve_cmd(mut run: Run, a: &crate::ServeArgs) -> Result<(), Failure> {
    let ont = load_ontology(&mut run, &a.ontology)?;
    let docs = load_corpus(&mut run, &a.corpus, Some(&ont))?;
    let sets = load_keywords(&mut run, "suggestions", &a.suggestions)?;
    let store = conceptforge_review::ReviewStore::open(ont, &docs, sets, &a.log).map_err(|e| match e {
        conceptforge_review::ReviewError::Io(e) => runtime(e),
        other => invalid(other),
    })?;
    let addr = std::net::SocketAddr::new(a.host, run.settings.port);
    let tasks = store.task_count();
    run.finish(json!({"tasks": tasks, "address": addr.to_string(), "log": a.log.display().to_string()}))?;
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(conceptforge_review::serve(store, addr, a.static_dir.clone()))
        .map_err(runtime)
}
