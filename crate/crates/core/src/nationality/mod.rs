//! Person–nationality scoring.
//!
//! Similar people do not share nationalities, so nothing is propagated
//! through neighbors here. Instead each person's document is scanned for
//! country names and demonyms; the most frequently mentioned nationality
//! scores 7 and the others scale linearly. People without a document fall
//! back to embedding similarity between the person and each nationality.

mod mapping;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::PreprocessConfig;
use crate::embedding::{cosine, EmbeddingModel};
use crate::error::{Error, Result};
use crate::score::{Score, MAX_SCORE};

pub use mapping::{build_mapping, MappingReport, NationalityMapping};

/// Source of per-person documents (one text per person token).
pub trait DocumentProvider: Sync {
    /// `Ok(None)` when the person has no document.
    fn document(&self, person: &str) -> io::Result<Option<String>>;
}

/// Documents stored as `<root>/<person token>`.
#[derive(Debug, Clone)]
pub struct DocumentDirectory {
    root: PathBuf,
}

impl DocumentDirectory {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DocumentDirectory { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl DocumentProvider for DocumentDirectory {
    fn document(&self, person: &str) -> io::Result<Option<String>> {
        if person.is_empty() || person.contains(['/', '\\']) || person.starts_with('.') {
            return Ok(None);
        }
        match fs::read_to_string(self.root.join(person)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl DocumentProvider for HashMap<String, String> {
    fn document(&self, person: &str) -> io::Result<Option<String>> {
        Ok(self.get(person).cloned())
    }
}

/// Occurrence count per nationality for one person.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccurrenceTable {
    pub counts: BTreeMap<String, u64>,
}

/// Counts nationality mentions in documents. Built once for a list of
/// nationalities so repeated documents share the tokenizer setup.
#[derive(Debug, Clone)]
pub struct NationalityCounter {
    config: PreprocessConfig,
    nationalities: Vec<String>,
    lookup: HashMap<String, Vec<usize>>,
}

impl NationalityCounter {
    /// `countries` are the nationality values as tokens (`canada`,
    /// `united_states_of_america`). Each is counted together with its
    /// demonym from `mapping`.
    pub fn new(countries: &[String], mapping: &NationalityMapping, config: &PreprocessConfig) -> Self {
        let mut config = config.clone();
        let mut lookup: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, country) in countries.iter().enumerate() {
            let mut tokens = vec![country.clone()];
            if let Some(d) = mapping.demonym(country) {
                tokens.push(d.to_owned());
            }
            for token in tokens {
                config
                    .multiword_terms
                    .insert_words(token.split('_').map(str::to_owned).collect());
                let slots = lookup.entry(token).or_default();
                if !slots.contains(&i) {
                    slots.push(i);
                }
            }
        }
        NationalityCounter {
            config,
            nationalities: countries.to_vec(),
            lookup,
        }
    }

    pub fn count(&self, document: &str) -> OccurrenceTable {
        let mut counts = vec![0u64; self.nationalities.len()];
        for token in self.config.document_tokens(document) {
            if let Some(slots) = self.lookup.get(&token) {
                for &i in slots {
                    counts[i] += 1;
                }
            }
        }
        OccurrenceTable {
            counts: self.nationalities.iter().cloned().zip(counts).collect(),
        }
    }
}

/// Counts, per nationality, how often its country token or its demonym
/// occurs in `document` after lowercasing and removing punctuation, digits
/// and stopwords.
pub fn count_occurrences(
    document: &str,
    countries: &[String],
    mapping: &NationalityMapping,
    config: &PreprocessConfig,
) -> OccurrenceTable {
    NationalityCounter::new(countries, mapping, config).count(document)
}

/// `round(7 · count / max_count)` with halves rounded up; an all-zero table
/// scores 0 everywhere.
pub fn nationality_scores(table: &OccurrenceTable) -> BTreeMap<String, Score> {
    let max = table.counts.values().copied().max().unwrap_or(0);
    table
        .counts
        .iter()
        .map(|(n, &c)| {
            let score = if max == 0 {
                0
            } else {
                // floor(7c/m + 1/2) in integers
                ((2 * MAX_SCORE as u64 * c + max) / (2 * max)) as u8
            };
            (n.clone(), Score::new(score).expect("count never exceeds the maximum"))
        })
        .collect()
}

/// Learned nationality scores: person → nationality → score.
pub type LearnedNationalities = BTreeMap<String, BTreeMap<String, Score>>;

/// Output of [`learn_nationalities`]. Every input person is either in
/// `scores` or in `absent`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NationalityLearning {
    pub scores: LearnedNationalities,
    pub absent: Vec<String>,
    /// Persons whose document could not be read, with the error. They are
    /// also listed in `absent`.
    pub failures: Vec<(String, String)>,
}

enum Lookup {
    Scored(BTreeMap<String, Score>),
    Absent,
    Failed(String),
}

pub fn learn_nationalities(
    persons: &[String],
    provider: &dyn DocumentProvider,
    countries: &[String],
    mapping: &NationalityMapping,
    config: &PreprocessConfig,
) -> NationalityLearning {
    let counter = NationalityCounter::new(countries, mapping, config);
    let mut unique: Vec<&String> = persons.iter().collect();
    unique.sort();
    unique.dedup();

    let outcomes: Vec<Lookup> = unique
        .par_iter()
        .map(|person| match provider.document(person) {
            Ok(Some(doc)) => Lookup::Scored(nationality_scores(&counter.count(&doc))),
            Ok(None) => Lookup::Absent,
            Err(e) => Lookup::Failed(e.to_string()),
        })
        .collect();

    let mut learning = NationalityLearning::default();
    for (person, outcome) in unique.into_iter().zip(outcomes) {
        match outcome {
            Lookup::Scored(table) => {
                learning.scores.insert(person.clone(), table);
            }
            Lookup::Absent => learning.absent.push(person.clone()),
            Lookup::Failed(msg) => {
                log::warn!("document for {person} unreadable: {msg}");
                learning.absent.push(person.clone());
                learning.failures.push((person.clone(), msg));
            }
        }
    }
    learning
}

/// Score for (person, nationality).
///
/// A person with a learned table gets the stored value (0 if the
/// nationality is not in it). Otherwise the cosine between the person and
/// every nationality is computed, negative similarities are discarded, and
/// the queried one is scaled so that the most similar nationality gets 7.
pub fn predict_nationality(
    person: &str,
    nationality: &str,
    learned: &LearnedNationalities,
    model: &EmbeddingModel,
    all_nationalities: &[String],
) -> Score {
    if let Some(table) = learned.get(person) {
        return table.get(nationality).copied().unwrap_or(Score::MIN);
    }
    let Some(person_vec) = model.vector(person) else {
        log::warn!("{person}: no learned table and not in the embedding vocabulary");
        return Score::MIN;
    };
    let sim = |n: &str| -> f64 {
        model
            .vector(n)
            .and_then(|v| cosine(person_vec, v).ok())
            .unwrap_or(0.0)
    };
    let max = all_nationalities
        .iter()
        .map(|n| sim(n))
        .filter(|s| *s >= 0.0)
        .fold(0.0, f64::max);
    if max <= 0.0 {
        log::warn!("{person}: no nationality with positive similarity");
        return Score::MIN;
    }
    let s = sim(nationality);
    if s < 0.0 {
        return Score::MIN;
    }
    Score::from_real(MAX_SCORE as f64 * (s / max))
}

/// Writes `person<TAB>nationality<TAB>score` rows, sorted.
pub fn save_learned(learned: &LearnedNationalities, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (person, table) in learned {
        for (n, s) in table {
            out.push_str(&format!("{person}\t{n}\t{s}\n"));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_learned(path: impl AsRef<Path>) -> Result<LearnedNationalities> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut learned = LearnedNationalities::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [person, nationality, score] = fields[..] else {
            return Err(Error::format(path, i + 1, "expected `person<TAB>nationality<TAB>score`"));
        };
        let score: Score = score
            .parse()
            .map_err(|e: Error| Error::format(path, i + 1, e.to_string()))?;
        learned
            .entry(person.to_owned())
            .or_default()
            .insert(nationality.to_owned(), score);
    }
    Ok(learned)
}
