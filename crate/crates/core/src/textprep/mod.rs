//! Text normalization.
//!
//! Two pipelines share the same first stage:
//!
//! * [`clean_for_embedding`] lowercases, strips everything that is not a
//!   letter, collapses character and token repetitions. Its output feeds the
//!   embedder.
//! * [`clean_for_analysis`] additionally drops stopwords and stems each token.
//!   Its output feeds the frequent-word statistics.

mod spelling;
pub mod stemmer;

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spelling::SpellCorrector;

static STOPWORDS_TXT: &str = include_str!("../../data/stopwords.txt");

/// The vendored English stopword list.
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanedText {
    pub original: String,
    pub cleaned: String,
    pub token_count: usize,
}

impl CleanedText {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.cleaned.split(' ').filter(|t| !t.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.token_count == 0
    }
}

fn keep_char(c: char) -> bool {
    // Letter-numbers such as roman numerals count as digits here. A char
    // whose lowercase form is not itself would break idempotence.
    c.is_alphabetic() && !c.is_numeric() && {
        let mut lower = c.to_lowercase();
        lower.next() == Some(c) && lower.next().is_none()
    }
}

/// Light cleaning for the embedder.
///
/// Apostrophes are deleted (`don't` -> `dont`); every other non-letter
/// becomes a token boundary. Runs of three or more identical characters are
/// cut to two and consecutive identical tokens are collapsed.
pub fn clean_for_embedding(text: &str) -> CleanedText {
    let lowered = text.to_lowercase();
    let mut letters = String::with_capacity(lowered.len());
    for c in lowered.chars() {
        if matches!(c, '\'' | '\u{2019}') {
            continue;
        }
        letters.push(if keep_char(c) { c } else { ' ' });
    }

    let mut tokens: Vec<String> = Vec::new();
    for raw in letters.split_whitespace() {
        let token = collapse_char_runs(raw);
        if tokens.last() != Some(&token) {
            tokens.push(token);
        }
    }
    let cleaned = tokens.join(" ");
    CleanedText {
        original: text.to_owned(),
        token_count: tokens.len(),
        cleaned,
    }
}

fn collapse_char_runs(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut prev = None;
    let mut run = 0usize;
    for c in token.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        }
    }
    out
}

/// Aggressive cleaning for frequent-word analysis: stopwords removed, tokens
/// stemmed. Stems that land on a stopword are dropped as well.
pub fn clean_for_analysis(text: &str) -> Vec<String> {
    analysis_tokens(&clean_for_embedding(text))
}

fn analysis_tokens(cleaned: &CleanedText) -> Vec<String> {
    cleaned
        .tokens()
        .filter(|t| !is_stopword(t))
        .map(stemmer::stem)
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .collect()
}

/// Stemmed-token frequencies over a set of documents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStats {
    pub counts: BTreeMap<String, u64>,
    /// Tokens seen after light cleaning, before stopword removal.
    pub total_tokens: u64,
}

impl TokenStats {
    pub fn from_docs<I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stats = TokenStats::default();
        for doc in docs {
            stats.add(doc.as_ref());
        }
        stats
    }

    pub fn add(&mut self, doc: &str) {
        let cleaned = clean_for_embedding(doc);
        self.total_tokens += cleaned.token_count as u64;
        for token in analysis_tokens(&cleaned) {
            *self.counts.entry(token).or_insert(0) += 1;
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    /// All tokens ordered by frequency descending, then lexicographically.
    pub fn ranked(&self) -> Vec<(String, u64)> {
        let mut entries: Vec<(String, u64)> =
            self.counts.iter().map(|(w, c)| (w.clone(), *c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries
    }

    pub fn top_k(&self, k: usize) -> Result<WordSet> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let mut entries = self.ranked();
        entries.truncate(k);
        Ok(WordSet { entries, k })
    }

    pub fn above(&self, min_freq: u64) -> Result<WordSet> {
        if min_freq == 0 {
            return Err(Error::InvalidConfig("min_freq must be at least 1".into()));
        }
        let entries: Vec<_> = self
            .ranked()
            .into_iter()
            .take_while(|(_, c)| *c >= min_freq)
            .collect();
        let k = entries.len();
        Ok(WordSet { entries, k })
    }
}

/// An ordered set of stemmed words with their corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSet {
    /// Frequency descending, ties lexicographic.
    pub entries: Vec<(String, u64)>,
    /// Requested size (the number of entries for threshold-built sets).
    pub k: usize,
}

impl WordSet {
    /// Build a set from bare words, in the order given, with zero frequencies.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let entries: Vec<(String, u64)> = words
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| seen.insert(w.clone()))
            .map(|w| (w, 0))
            .collect();
        let k = entries.len();
        Self { entries, k }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(w, _)| w.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, c)| *c)
    }
}

fn non_empty_docs<S: AsRef<str>>(docs: &[S]) -> Result<()> {
    if docs.is_empty() {
        Err(Error::EmptyCorpus("no documents".into()))
    } else {
        Ok(())
    }
}

/// The `k` most frequent stemmed tokens across `docs`.
pub fn top_k_frequent<S: AsRef<str>>(docs: &[S], k: usize) -> Result<WordSet> {
    non_empty_docs(docs)?;
    TokenStats::from_docs(docs).top_k(k)
}

/// Every stemmed token occurring at least `min_freq` times.
pub fn frequent_above<S: AsRef<str>>(docs: &[S], min_freq: u64) -> Result<WordSet> {
    non_empty_docs(docs)?;
    TokenStats::from_docs(docs).above(min_freq)
}
