//! Deterministic text normalization shared by the recognizer, enrichment and
//! feature extraction.
//!
//! Tokens are maximal runs of Unicode letters; everything else separates
//! them. Each token is lowercased (when configured), dropped if it is a
//! stopword, then stemmed. Spans are character offsets (Unicode scalar
//! values, end exclusive) into the original text.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer as Snowball};
use serde::{Deserialize, Serialize};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stemmer {
    /// Snowball English (Porter2).
    #[default]
    #[serde(rename = "porter-en")]
    PorterEn,
    /// Umlaut folding plus a single suffix strip, see [`light_de`].
    #[serde(rename = "light-de")]
    LightDe,
    #[serde(rename = "none")]
    None,
}

impl fmt::Display for Stemmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stemmer::PorterEn => "porter-en",
            Stemmer::LightDe => "light-de",
            Stemmer::None => "none",
        })
    }
}

impl FromStr for Stemmer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "porter-en" => Ok(Stemmer::PorterEn),
            "light-de" => Ok(Stemmer::LightDe),
            "none" => Ok(Stemmer::None),
            other => Err(format!("unknown stemmer {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub lowercase: bool,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self::english()
    }
}

impl TextConfig {
    /// Bundled English stopwords, Porter2 stemming, lowercasing.
    pub fn english() -> Self {
        Self {
            stopwords: parse_stopwords(ENGLISH_STOPWORDS),
            stemmer: Stemmer::PorterEn,
            lowercase: true,
        }
    }

    /// Lowercasing only. Used for label/title normalization.
    pub fn plain() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::None,
            lowercase: true,
        }
    }

    pub fn with_stemmer(mut self, stemmer: Stemmer) -> Self {
        self.stemmer = stemmer;
        self
    }

    pub fn with_stopwords(mut self, stopwords: BTreeSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }

    /// Token terms only, without spans.
    pub fn terms(&self, text: &str) -> Vec<String> {
        tokenize(text, self).into_iter().map(|t| t.term).collect()
    }
}

/// Parses a stopword list: one word per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn read_stopwords<R: BufRead>(mut reader: R) -> std::io::Result<BTreeSet<String>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_stopwords(&text))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub term: String,
    pub start: usize,
    pub end: usize,
}

pub fn tokenize(text: &str, cfg: &TextConfig) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_start = 0;
    let mut pos = 0;
    for ch in text.chars() {
        if ch.is_alphabetic() {
            if run.is_empty() {
                run_start = pos;
            }
            run.push(ch);
        } else if !run.is_empty() {
            push_token(&mut tokens, std::mem::take(&mut run), run_start, pos, cfg);
        }
        pos += 1;
    }
    if !run.is_empty() {
        push_token(&mut tokens, run, run_start, pos, cfg);
    }
    tokens
}

fn push_token(out: &mut Vec<Token>, raw: String, start: usize, end: usize, cfg: &TextConfig) {
    let word = if cfg.lowercase { raw.to_lowercase() } else { raw };
    if cfg.stopwords.contains(&word) {
        return;
    }
    out.push(Token {
        term: stem(&word, cfg.stemmer),
        start,
        end,
    });
}

pub fn stem(token: &str, stemmer: Stemmer) -> String {
    match stemmer {
        Stemmer::PorterEn => english().stem(token).into_owned(),
        Stemmer::LightDe => light_de(token),
        Stemmer::None => token.to_owned(),
    }
}

fn english() -> &'static Snowball {
    static STEMMER: OnceLock<Snowball> = OnceLock::new();
    STEMMER.get_or_init(|| Snowball::create(Algorithm::English))
}

/// Minimal German stemmer.
///
/// 1. Fold umlauts (`ä→a`, `ö→o`, `ü→u`) and `ß→ss`.
/// 2. If the folded word has at least 5 characters, strip the first matching
///    suffix of `en`, `er`, `e`, `n`, `s` (checked in that order).
pub fn light_de(token: &str) -> String {
    let mut word = String::with_capacity(token.len());
    for ch in token.chars() {
        match ch {
            'ä' => word.push('a'),
            'ö' => word.push('o'),
            'ü' => word.push('u'),
            'ß' => word.push_str("ss"),
            c => word.push(c),
        }
    }
    if word.chars().count() >= 5 {
        for suffix in ["en", "er", "e", "n", "s"] {
            if let Some(stripped) = word.strip_suffix(suffix) {
                return stripped.to_owned();
            }
        }
    }
    word
}
