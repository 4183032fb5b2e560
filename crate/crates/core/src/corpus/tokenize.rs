use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::nationality::NationalityMapping;

use super::annotation::{AnnotatedSentence, Segment};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Unicode punctuation stripped in addition to ASCII punctuation.
const EXTRA_PUNCTUATION: &[char] = &[
    '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{2013}', '\u{2014}', '\u{2026}', '\u{00AB}',
    '\u{00BB}', '\u{00BF}', '\u{00A1}', '\u{00B7}', '\u{2022}',
];

/// Characters treated as token separators. `_` is never punctuation because
/// it joins the words of entity names and multiword terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Punctuation(HashSet<char>);

impl Punctuation {
    pub fn from_chars(chars: impl IntoIterator<Item = char>) -> Self {
        Punctuation(chars.into_iter().filter(|&c| c != '_').collect())
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }
}

impl Default for Punctuation {
    fn default() -> Self {
        let ascii = (0u8..128).map(char::from).filter(char::is_ascii_punctuation);
        Punctuation::from_chars(ascii.chain(EXTRA_PUNCTUATION.iter().copied()))
    }
}

/// Joins a multi-word term into one lowercase token: whitespace runs become
/// a single `_`, leading and trailing whitespace is dropped.
pub fn join_multiword(term: &str) -> String {
    term.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

/// Lowercases `text`, turns punctuation (and optionally digits) into
/// separators and splits on whitespace.
pub(crate) fn text_tokens(text: &str, punctuation: &Punctuation, strip_digits: bool) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if punctuation.contains(c) || (strip_digits && c.is_numeric()) {
                ' '
            } else {
                c
            }
        })
        .collect();
    cleaned
        .to_lowercase()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// Canonical token for a person name, from either a corpus annotation
/// (`George_W._Bush`) or a data file (`George W. Bush`): `george_w_bush`.
pub fn normalize_entity(name: &str, punctuation: &Punctuation) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_whitespace() || c == '_' {
            if !out.is_empty() && !out.ends_with('_') {
                out.push('_');
            }
        } else if !punctuation.contains(c) {
            out.extend(c.to_lowercase());
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// Canonical token for a relation value such as a profession or country
/// (`Singer-songwriter` → `singer_songwriter`). Agrees with what the
/// multiword joiner produces for the same phrase in running text.
pub fn normalize_term(value: &str, punctuation: &Punctuation) -> String {
    text_tokens(value, punctuation, false).join("_")
}

fn has_alphanumeric(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Multi-word phrases that are collapsed into a single `_`-joined token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiwordTerms {
    by_first: HashMap<String, Vec<Vec<String>>>,
    joined: HashSet<String>,
}

impl MultiwordTerms {
    /// Adds a phrase given as its word sequence. Single words are ignored.
    pub fn insert_words(&mut self, words: Vec<String>) {
        if words.len() < 2 || !self.joined.insert(words.join("_")) {
            return;
        }
        let bucket = self.by_first.entry(words[0].clone()).or_default();
        bucket.push(words);
        // longest match first
        bucket.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    }

    pub fn len(&self) -> usize {
        self.joined.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joined.is_empty()
    }

    pub fn contains_joined(&self, token: &str) -> bool {
        self.joined.contains(token)
    }

    /// Replaces every occurrence of a known phrase by its joined token,
    /// scanning left to right with longest match.
    pub fn join(&self, mut tokens: Vec<String>) -> Vec<String> {
        if self.is_empty() {
            return tokens;
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let matched = self.by_first.get(&tokens[i]).and_then(|candidates| {
                candidates
                    .iter()
                    .find(|words| tokens[i..].starts_with(words))
            });
            match matched {
                Some(words) => {
                    out.push(words.join("_"));
                    i += words.len();
                }
                None => {
                    out.push(std::mem::take(&mut tokens[i]));
                    i += 1;
                }
            }
        }
        out
    }
}

/// Inserts each country's demonym directly after every occurrence of the
/// country token. Existing tokens keep their order.
pub fn inject_nationalities(tokens: Vec<String>, mapping: &NationalityMapping) -> Vec<String> {
    if mapping.is_empty() {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len() + 2);
    for token in tokens {
        let demonym = mapping.demonym(&token).map(str::to_owned);
        out.push(token);
        if let Some(d) = demonym {
            out.push(d);
        }
    }
    out
}

/// A cleaned, lowercase sentence of at least two tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSentence {
    pub tokens: Vec<String>,
}

impl AsRef<[String]> for TokenSentence {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

impl std::fmt::Display for TokenSentence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Everything the preprocessing pipeline needs to know about the text.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    pub punctuation: Punctuation,
    pub nationality_mapping: NationalityMapping,
    pub multiword_terms: MultiwordTerms,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: default_stopwords(),
            punctuation: Punctuation::default(),
            nationality_mapping: NationalityMapping::default(),
            multiword_terms: MultiwordTerms::default(),
        }
    }
}

/// The shipped English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Parses a stopword file: one token per line, blank lines and `#` comments ignored.
pub fn parse_stopwords(contents: &str) -> HashSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl PreprocessConfig {
    pub fn with_stopwords(mut self, stopwords: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        self.stopwords = stopwords
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        self
    }

    /// Registers relation values (professions, countries, ...) so that their
    /// multi-word forms are joined in running text.
    pub fn with_terms(mut self, terms: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        for term in terms {
            let words = text_tokens(term.as_ref(), &self.punctuation, false);
            self.multiword_terms.insert_words(words);
        }
        self
    }

    /// Installs the country → demonym mapping; both sides become joinable terms.
    pub fn with_nationality_mapping(mut self, mapping: NationalityMapping) -> Self {
        for (country, demonym) in mapping.iter() {
            for token in [country, demonym] {
                let words = token.split('_').map(str::to_owned).collect();
                self.multiword_terms.insert_words(words);
            }
        }
        self.nationality_mapping = mapping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut clashes: Vec<&str> = self
            .stopwords
            .iter()
            .filter(|s| self.multiword_terms.contains_joined(s))
            .map(String::as_str)
            .collect();
        if clashes.is_empty() {
            return Ok(());
        }
        clashes.sort_unstable();
        Err(Error::Config(format!(
            "stopwords overlap multiword terms: {}",
            clashes.join(", ")
        )))
    }

    fn keep(&self, token: &str) -> bool {
        has_alphanumeric(token) && !self.stopwords.contains(token)
    }

    /// Lowercases, strips punctuation, joins multiword terms, injects
    /// demonyms and removes stopwords. `None` when fewer than two tokens
    /// remain (or the sentence had fewer than two words to begin with).
    pub fn filter_and_tokenize(&self, sentence: &AnnotatedSentence) -> Option<TokenSentence> {
        sentence.text.split_whitespace().nth(1)?;
        let mut tokens = Vec::new();
        for segment in sentence.segments() {
            match segment {
                Segment::Text(t) => tokens.extend(text_tokens(t, &self.punctuation, false)),
                Segment::Entity(e) => {
                    let token = normalize_entity(e, &self.punctuation);
                    if !token.is_empty() {
                        tokens.push(token);
                    }
                }
            }
        }
        let tokens = self.multiword_terms.join(tokens);
        let tokens = inject_nationalities(tokens, &self.nationality_mapping);
        let tokens: Vec<String> = tokens.into_iter().filter(|t| self.keep(t)).collect();
        // dropping a stopword can make two words of a term adjacent; join
        // once more so that the output is a fixed point
        let tokens = self.multiword_terms.join(tokens);
        (tokens.len() >= 2).then_some(TokenSentence { tokens })
    }

    /// Token stream for a free-standing document (no annotations, no
    /// demonym injection): digits are ignored as well as punctuation.
    pub fn document_tokens(&self, text: &str) -> Vec<String> {
        let tokens = text_tokens(text, &self.punctuation, true);
        self.multiword_terms
            .join(tokens)
            .into_iter()
            .filter(|t| self.keep(t))
            .collect()
    }

    pub fn normalize_entity(&self, name: &str) -> String {
        normalize_entity(name, &self.punctuation)
    }

    pub fn normalize_term(&self, value: &str) -> String {
        normalize_term(value, &self.punctuation)
    }
}
