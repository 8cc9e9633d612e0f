use std::collections::HashMap;

use super::{clean_for_embedding, CleanedText};

/// Optional dictionary-based spelling pass.
///
/// A token seen exactly once in the corpus is replaced by the most frequent
/// vocabulary word at edit distance one (ties lexicographic), provided that
/// word occurs more than once. Everything else is left alone.
#[derive(Debug, Clone, Default)]
pub struct SpellCorrector {
    counts: HashMap<String, u64>,
}

impl SpellCorrector {
    pub fn from_corpus<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts = HashMap::new();
        for text in texts {
            for token in clean_for_embedding(text.as_ref()).tokens() {
                *counts.entry(token.to_owned()).or_insert(0) += 1;
            }
        }
        Self { counts }
    }

    pub fn correct_token(&self, token: &str) -> Option<String> {
        if self.counts.get(token).copied().unwrap_or(0) != 1 {
            return None;
        }
        self.counts
            .iter()
            .filter(|(w, c)| **c > 1 && edit_distance_one(token, w))
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(w, _)| w.clone())
    }

    pub fn correct(&self, text: &CleanedText) -> CleanedText {
        let fixed: Vec<String> = text
            .tokens()
            .map(|t| self.correct_token(t).unwrap_or_else(|| t.to_owned()))
            .collect();
        let mut out = clean_for_embedding(&fixed.join(" "));
        out.original = text.original.clone();
        out
    }
}

/// Levenshtein distance exactly one (one insertion, deletion or substitution).
fn edit_distance_one(a: &str, b: &str) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() {
        (&a, &b)
    } else {
        (&b, &a)
    };
    match long.len() - short.len() {
        0 => {
            short
                .iter()
                .zip(long.iter())
                .filter(|(x, y)| x != y)
                .count()
                == 1
        }
        1 => {
            let prefix = short
                .iter()
                .zip(long.iter())
                .take_while(|(x, y)| x == y)
                .count();
            short[prefix..] == long[prefix + 1..]
        }
        _ => false,
    }
}
