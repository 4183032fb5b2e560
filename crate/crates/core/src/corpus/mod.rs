//! Corpus ingestion: annotation replacement, tokenization and filtering.
//!
//! Each input line holds one sentence with `[Canonical|surface]` spans marking
//! person mentions. A line goes through these steps:
//!
//! 1. every span is replaced by its canonical name ([`parse_annotated_sentence`]);
//! 2. text is lowercased, punctuation becomes whitespace and the line is split;
//!    entity names become single `_`-joined tokens;
//! 3. known multi-word terms are joined ([`join_multiword`]);
//! 4. each country token is followed by its demonym ([`inject_nationalities`]);
//! 5. stopwords and punctuation-only tokens are removed;
//! 6. sentences with fewer than two tokens are dropped.

mod annotation;
mod tokenize;

use std::io::{self, BufRead};
use std::ops::AddAssign;

use rayon::prelude::*;

pub use annotation::{
    parse_annotated_sentence, AnnotatedSentence, AnnotationError, AnnotationErrorKind, Mention,
};
pub use tokenize::{
    default_stopwords, inject_nationalities, join_multiword, normalize_entity, normalize_term,
    parse_stopwords, MultiwordTerms, PreprocessConfig, Punctuation, TokenSentence,
};

/// Counters reported by a preprocessing run.
///
/// `sentences + dropped + malformed == lines_read` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub lines_read: u64,
    pub sentences: u64,
    pub dropped: u64,
    pub malformed: u64,
    pub mentions: u64,
}

impl AddAssign for CorpusStats {
    fn add_assign(&mut self, rhs: Self) {
        self.lines_read += rhs.lines_read;
        self.sentences += rhs.sentences;
        self.dropped += rhs.dropped;
        self.malformed += rhs.malformed;
        self.mentions += rhs.mentions;
    }
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "lines_read={} sentences={} dropped={} malformed={} mentions={}",
            self.lines_read, self.sentences, self.dropped, self.malformed, self.mentions
        )
    }
}

enum LineOutcome {
    Kept(TokenSentence, u64),
    Dropped(u64),
    Malformed,
}

fn process_line(bytes: &[u8], config: &PreprocessConfig) -> LineOutcome {
    let Ok(line) = std::str::from_utf8(bytes) else {
        return LineOutcome::Malformed;
    };
    let line = line.trim_end_matches(['\n', '\r']);
    match parse_annotated_sentence(line) {
        Ok(parsed) => {
            let mentions = parsed.mentions.len() as u64;
            match config.filter_and_tokenize(&parsed) {
                Some(sentence) => LineOutcome::Kept(sentence, mentions),
                None => LineOutcome::Dropped(mentions),
            }
        }
        Err(e) => {
            log::debug!("skipping malformed line: {e}");
            LineOutcome::Malformed
        }
    }
}

impl CorpusStats {
    fn record(&mut self, outcome: &LineOutcome) {
        self.lines_read += 1;
        match outcome {
            LineOutcome::Kept(_, m) => {
                self.sentences += 1;
                self.mentions += m;
            }
            LineOutcome::Dropped(m) => {
                self.dropped += 1;
                self.mentions += m;
            }
            LineOutcome::Malformed => self.malformed += 1,
        }
    }
}

/// Streaming preprocessor over a line reader. Memory use does not grow with
/// the corpus; read [`Preprocessor::stats`] once the iterator is exhausted.
pub struct Preprocessor<'a, R> {
    reader: R,
    config: &'a PreprocessConfig,
    stats: CorpusStats,
    buf: Vec<u8>,
}

/// Streams the valid sentences of `reader`. Malformed lines are counted and
/// skipped; read failures end the stream with an error.
pub fn preprocess_corpus<R: BufRead>(reader: R, config: &PreprocessConfig) -> Preprocessor<'_, R> {
    Preprocessor {
        reader,
        config,
        stats: CorpusStats::default(),
        buf: Vec::new(),
    }
}

impl<R> Preprocessor<'_, R> {
    pub fn stats(&self) -> CorpusStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for Preprocessor<'_, R> {
    type Item = io::Result<TokenSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            let outcome = process_line(&self.buf, self.config);
            self.stats.record(&outcome);
            if let LineOutcome::Kept(sentence, _) = outcome {
                return Some(Ok(sentence));
            }
        }
    }
}

/// Processes a batch of lines in parallel. Output order follows input order.
pub fn preprocess_lines<S>(lines: &[S], config: &PreprocessConfig) -> (Vec<TokenSentence>, CorpusStats)
where
    S: AsRef<str> + Sync,
{
    let outcomes: Vec<LineOutcome> = lines
        .par_iter()
        .map(|l| process_line(l.as_ref().as_bytes(), config))
        .collect();
    let mut stats = CorpusStats::default();
    let mut sentences = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        stats.record(&outcome);
        if let LineOutcome::Kept(s, _) = outcome {
            sentences.push(s);
        }
    }
    (sentences, stats)
}
