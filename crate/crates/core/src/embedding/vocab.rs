use std::collections::HashMap;

use crate::error::{Error, Result};

/// Training vocabulary: dense indices ordered by descending count, ties by word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

impl Vocab {
    /// Counts every token, then drops words seen fewer than `min_count`
    /// times. `total_tokens` keeps the count from before the cut, so
    /// frequencies are relative to the whole corpus.
    pub fn build<I, S>(sentences: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total = 0u64;
        for sentence in sentences {
            for token in sentence.as_ref() {
                total += 1;
                match counts.get_mut(token.as_ref()) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(token.as_ref().to_owned(), 1);
                    }
                }
            }
        }
        if total == 0 {
            return Err(Error::Config("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if entries.is_empty() {
            return Err(Error::Config(format!(
                "no word occurs at least {min_count} times"
            )));
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let (words, counts) = entries.into_iter().unzip();
        Vocab::from_parts(words, counts, total)
    }

    /// Assembles a vocabulary in the given index order.
    pub fn from_parts(words: Vec<String>, counts: Vec<u64>, total_tokens: u64) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::Contract("word and count lists differ in length".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::Contract(format!("invalid vocabulary word {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Contract(format!("duplicate vocabulary word {w:?}")));
            }
        }
        let sum: u64 = counts.iter().sum();
        if sum > total_tokens || counts.contains(&0) {
            return Err(Error::Contract(
                "counts must be positive and sum to at most total_tokens".into(),
            ));
        }
        Ok(Vocab {
            words,
            counts,
            index,
            total_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// f(w) = count(w) / total_tokens.
    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.total_tokens as f64
    }
}

/// Probability of keeping an occurrence of `word` under subsampling:
/// `min(1, sqrt(rho / f(w)))`, i.e. one minus the discard probability.
pub fn keep_probability(word: &str, vocab: &Vocab, rho: f64) -> Result<f64> {
    let index = vocab
        .index_of(word)
        .ok_or_else(|| Error::UnknownWord(word.to_owned()))?;
    Ok(keep_from_frequency(vocab.frequency(index), rho))
}

pub(crate) fn keep_from_frequency(frequency: f64, rho: f64) -> f64 {
    (rho / frequency).sqrt().min(1.0)
}
