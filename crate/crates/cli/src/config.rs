//! Effective settings: built-in defaults, overlaid by a config file, overlaid
//! by command-line flags.

use std::collections::BTreeMap;

use conceptforge::classifier::TrainConfig;
use conceptforge::corpus::{LabelKind, UnknownLabelPolicy};
use conceptforge::enrichment::EnrichParams;
use conceptforge::features::{FeatureKind, LldaParams};
use conceptforge::pipeline::ClassificationSetup;
use conceptforge::recognizer::{Cutoff, ExpandParams, MatcherParams, SuggestParams};
use conceptforge::textproc::TextConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Every tunable the commands read. Config files use these key names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub min_jaccard: f64,
    /// Neighborhood radius in encyclopedia link hops.
    pub k: u32,
    pub cap: usize,
    pub neighborhood_terms: bool,
    pub min_term_weight: f64,
    pub depth: u32,
    pub decay: f64,
    pub top_n: usize,
    /// Replaces the top-n cutoff when set.
    pub min_score: Option<f64>,
    pub tau: f64,
    pub fallback_n: usize,
    pub features: FeatureKind,
    pub kind: LabelKind,
    /// Class hierarchy level; 0 keeps labels as they are.
    pub level: u32,
    pub min_df: u32,
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    pub split: f64,
    pub threshold: f64,
    pub llda_alpha: Option<f64>,
    pub llda_beta: f64,
    pub llda_iterations: u32,
    pub llda_inference_iterations: u32,
    pub min_year: Option<i32>,
    pub year_inclusive: bool,
    pub unknown_labels: UnknownLabelPolicy,
    pub port: u16,
}

impl Default for Settings {
    fn default() -> Self {
        let enrich = EnrichParams::default();
        let matcher = MatcherParams::default();
        let expand = ExpandParams::default();
        let train = TrainConfig::default();
        let llda = LldaParams::default();
        Self {
            min_jaccard: enrich.min_jaccard,
            k: enrich.radius,
            cap: enrich.cap,
            neighborhood_terms: matcher.use_neighborhood_terms,
            min_term_weight: matcher.min_term_weight,
            depth: expand.depth,
            decay: expand.decay,
            top_n: 10,
            min_score: None,
            tau: 0.5,
            fallback_n: conceptforge::combiner::DEFAULT_FALLBACK_N,
            features: FeatureKind::Tfidf,
            kind: LabelKind::Classes,
            level: train.level,
            min_df: 1,
            lambda: train.lambda,
            epochs: train.epochs,
            seed: train.seed,
            split: train.split_ratio,
            threshold: train.threshold,
            llda_alpha: llda.alpha,
            llda_beta: llda.beta,
            llda_iterations: llda.iterations,
            llda_inference_iterations: llda.inference_iterations,
            min_year: None,
            year_inclusive: false,
            unknown_labels: UnknownLabelPolicy::Retain,
            port: conceptforge_review::DEFAULT_PORT,
        }
    }
}

/// Parses a config file: a JSON object, or `key = value` lines with `#`
/// comments. Values that parse as JSON keep their type, others are strings.
pub fn parse_config(text: &str) -> anyhow::Result<Map<String, Value>> {
    if text.trim_start().starts_with('{') {
        let value: Value = serde_json::from_str(text)?;
        let Value::Object(map) = value else {
            anyhow::bail!("config must be a JSON object");
        };
        return Ok(map.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect());
    }
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            anyhow::bail!("config line {}: expected key = value", i + 1);
        };
        let value = value.trim();
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_owned()));
        map.insert(normalize_key(key.trim()), parsed);
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

/// Defaults, then `config`, then `flags`.
pub fn resolve(config: &Map<String, Value>, flags: &BTreeMap<&'static str, Value>) -> anyhow::Result<Settings> {
    let Value::Object(mut merged) = serde_json::to_value(Settings::default())? else {
        unreachable!("settings serialize to an object");
    };
    for (k, v) in config {
        merged.insert(k.clone(), v.clone());
    }
    for (k, v) in flags {
        merged.insert((*k).to_owned(), v.clone());
    }
    let settings: Settings = serde_json::from_value(Value::Object(merged))?;
    settings.validate()?;
    Ok(settings)
}

impl Settings {
    fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!((0.0..=1.0).contains(&self.tau), "tau must lie in [0, 1]");
        anyhow::ensure!((0.0..=1.0).contains(&self.min_jaccard), "min_jaccard must lie in [0, 1]");
        anyhow::ensure!(self.top_n > 0, "top_n must be positive");
        Ok(())
    }

    pub fn enrich_params(&self) -> EnrichParams {
        EnrichParams {
            min_jaccard: self.min_jaccard,
            radius: self.k,
            cap: self.cap,
            ..EnrichParams::default()
        }
    }

    pub fn matcher_params(&self) -> MatcherParams {
        MatcherParams {
            use_neighborhood_terms: self.neighborhood_terms,
            min_term_weight: self.min_term_weight,
        }
    }

    pub fn suggest_params(&self) -> SuggestParams {
        SuggestParams {
            expand: ExpandParams {
                depth: self.depth,
                decay: self.decay,
            },
            cutoff: match self.min_score {
                Some(min) => Cutoff::MinScore(min),
                None => Cutoff::TopN(self.top_n),
            },
        }
    }

    pub fn classification(&self) -> ClassificationSetup {
        ClassificationSetup {
            label_kind: self.kind,
            level: (self.kind == LabelKind::Classes && self.level > 0).then_some(self.level),
            features: self.features,
            min_df: self.min_df,
            text: TextConfig::english(),
            llda: LldaParams {
                alpha: self.llda_alpha,
                beta: self.llda_beta,
                iterations: self.llda_iterations,
                seed: self.seed,
                inference_iterations: self.llda_inference_iterations,
            },
            train: TrainConfig {
                lambda: self.lambda,
                epochs: self.epochs,
                seed: self.seed,
                split_ratio: self.split,
                level: self.level.max(1),
                threshold: self.threshold,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_config_beats_default() {
        let config = parse_config("tau = 0.3\nseed = 7\n# comment\nfeatures = llda").unwrap();
        let flags = BTreeMap::from([("seed", Value::from(9))]);
        let s = resolve(&config, &flags).unwrap();
        assert_eq!(s.tau, 0.3);
        assert_eq!(s.seed, 9);
        assert_eq!(s.features, FeatureKind::Llda);
        assert_eq!(s.depth, 2);
    }

    #[test]
    fn json_config_and_dashed_keys() {
        let config = parse_config(r#"{"top-n": 4, "min_year": 2003}"#).unwrap();
        let s = resolve(&config, &BTreeMap::new()).unwrap();
        assert_eq!((s.top_n, s.min_year), (4, Some(2003)));
    }

    #[test]
    fn unknown_key_and_bad_value_are_rejected() {
        assert!(resolve(&parse_config("colour = red").unwrap(), &BTreeMap::new()).is_err());
        assert!(resolve(&parse_config("tau = 2").unwrap(), &BTreeMap::new()).is_err());
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn defaults_match_library_defaults() {
        let s = Settings::default();
        assert_eq!(s.classification().train, TrainConfig::default());
        assert_eq!(s.classification().llda, LldaParams::default());
        assert_eq!(s.suggest_params(), SuggestParams::default());
        assert_eq!(s.enrich_params(), EnrichParams::default());
    }
}
