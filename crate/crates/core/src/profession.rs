//! Person–profession scoring by score propagation.
//!
//! People who are close in the embedding space tend to share professions.
//! Known scores are copied onto each person's nearest neighbors, weighted by
//! similarity, and the process repeats until no new person is reached.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::embedding::{cosine, EmbeddingModel, SimilarityHit};
use crate::error::{Error, Result};
use crate::score::Score;
use crate::triple::Triple;

/// One piece of evidence for a (person, profession) score: a relevance
/// value and the similarity of the person it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEvidence {
    pub rel_score: f64,
    pub sim_score: f64,
}

impl ScoredEvidence {
    pub fn new(rel_score: f64, sim_score: f64) -> Result<Self> {
        if !(0.0..=7.0).contains(&rel_score) {
            return Err(Error::Contract(format!("relevance {rel_score} outside [0, 7]")));
        }
        if !(sim_score > 0.0 && sim_score.is_finite()) {
            return Err(Error::Contract(format!("similarity {sim_score} must be positive")));
        }
        Ok(ScoredEvidence { rel_score, sim_score })
    }
}

/// Result of [`normalize_score`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedScore {
    /// Sum of similarities.
    pub z: f64,
    /// Similarity-weighted mean before rounding.
    pub mean: f64,
    pub score: Score,
}

/// Similarity-weighted mean of the evidence, rounded to the nearest integer.
pub fn normalize_score(evidence: &[ScoredEvidence]) -> Result<NormalizedScore> {
    if evidence.is_empty() {
        return Err(Error::Contract("cannot normalize empty evidence".into()));
    }
    if let Some(bad) = evidence.iter().find(|e| e.sim_score.is_nan() || e.sim_score <= 0.0) {
        return Err(Error::Contract(format!("similarity {} must be positive", bad.sim_score)));
    }
    let z: f64 = evidence.iter().map(|e| e.sim_score).sum();
    let weighted: f64 = evidence.iter().map(|e| e.rel_score * e.sim_score).sum();
    let mean = weighted / z;
    Ok(NormalizedScore {
        z,
        mean,
        score: Score::from_real(mean),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    GroundTruth,
    Propagated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::GroundTruth => "ground_truth",
            Provenance::Propagated => "propagated",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground_truth" => Ok(Provenance::GroundTruth),
            "propagated" => Ok(Provenance::Propagated),
            other => Err(Error::Contract(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateEntry {
    pub score: Score,
    pub provenance: Provenance,
}

/// Profession scores per person.
pub type ScoreTable = BTreeMap<String, BTreeMap<String, Score>>;

/// Every score known so far: the seeded training data plus whatever
/// propagation has added.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeState {
    entries: BTreeMap<String, BTreeMap<String, StateEntry>>,
}

impl KnowledgeState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless the pair is already present. Returns whether it was new.
    pub fn insert(&mut self, person: &str, profession: &str, score: Score, provenance: Provenance) -> bool {
        let professions = self.entries.entry(person.to_owned()).or_default();
        if professions.contains_key(profession) {
            return false;
        }
        professions.insert(profession.to_owned(), StateEntry { score, provenance });
        true
    }

    pub fn get(&self, person: &str, profession: &str) -> Option<StateEntry> {
        self.entries.get(person)?.get(profession).copied()
    }

    pub fn score(&self, person: &str, profession: &str) -> Option<Score> {
        self.get(person, profession).map(|e| e.score)
    }

    pub fn professions(&self, person: &str) -> Option<&BTreeMap<String, StateEntry>> {
        self.entries.get(person)
    }

    pub fn contains_person(&self, person: &str) -> bool {
        self.entries.contains_key(person)
    }

    pub fn persons(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn person_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    /// All entries in (person, profession) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, StateEntry)> {
        self.entries.iter().flat_map(|(p, profs)| {
            profs.iter().map(move |(j, e)| (p.as_str(), j.as_str(), *e))
        })
    }

    /// Adds propagated scores for pairs not already known. Existing entries
    /// are never changed. Returns the number of entries added.
    pub fn merge(&mut self, new_state: &ScoreTable) -> usize {
        let mut added = 0;
        for (person, professions) in new_state {
            for (profession, &score) in professions {
                if self.insert(person, profession, score, Provenance::Propagated) {
                    added += 1;
                }
            }
        }
        added
    }

    /// `person<TAB>profession<TAB>score<TAB>provenance`, sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (person, profession, e) in self.iter() {
            out.push_str(&format!("{person}\t{profession}\t{}\t{}\n", e.score, e.provenance));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut state = KnowledgeState::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::format(path, i + 1, msg);
            let fields: Vec<&str> = line.split('\t').collect();
            let [person, profession, score, provenance] = fields[..] else {
                return Err(bad("expected `person<TAB>profession<TAB>score<TAB>provenance`".into()));
            };
            let score: Score = score.parse().map_err(|e: Error| bad(e.to_string()))?;
            let provenance: Provenance = provenance.parse().map_err(|e: Error| bad(e.to_string()))?;
            if !state.insert(person, profession, score, provenance) {
                return Err(bad(format!("duplicate entry {person} / {profession}")));
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    /// Neighbors examined per person.
    pub topn: usize,
    /// Minimum cosine for a neighbor to receive or give evidence.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Leading share of the training triples used as the initial state.
    pub seed_fraction: f64,
    /// Score for a person with no state entry and no vector.
    pub fallback_score: Score,
    /// Similar professions examined when a person has no scored neighbor.
    pub similar_professions: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            topn: 10,
            threshold: 0.4,
            max_iterations: 50,
            seed_fraction: 0.7,
            fallback_score: Score::new(2).unwrap(),
            similar_professions: 5,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.topn >= 1, "topn must be at least 1")?;
        check((0.0..1.0).contains(&self.threshold), "threshold must lie in [0, 1)")?;
        check(self.max_iterations >= 1, "max_iterations must be at least 1")?;
        check(
            self.seed_fraction > 0.0 && self.seed_fraction <= 1.0,
            "seed_fraction must lie in (0, 1]",
        )?;
        check(self.similar_professions >= 1, "similar_professions must be at least 1")
    }
}

/// Number of leading triples used as seed: `⌈fraction · n⌉`.
pub fn seed_len(n: usize, fraction: f64) -> usize {
    // the epsilon keeps 0.7 * 10 from becoming 8
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// An embedding model plus the vocabulary subsets that count as persons and
/// as professions. Without a subset the whole vocabulary is searched.
#[derive(Debug, Clone)]
pub struct Neighborhood<'a> {
    model: &'a EmbeddingModel,
    persons: Option<Vec<usize>>,
    professions: Option<Vec<usize>>,
}

fn indices<'s>(model: &EmbeddingModel, words: impl IntoIterator<Item = &'s str>) -> Vec<usize> {
    let mut v: Vec<usize> = words
        .into_iter()
        .filter_map(|w| model.vocab().index_of(w))
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

impl<'a> Neighborhood<'a> {
    pub fn new(model: &'a EmbeddingModel) -> Self {
        Neighborhood {
            model,
            persons: None,
            professions: None,
        }
    }

    /// Restricts neighbor searches to these person tokens.
    pub fn with_persons<'s>(mut self, persons: impl IntoIterator<Item = &'s str>) -> Self {
        self.persons = Some(indices(self.model, persons));
        self
    }

    /// Restricts similar-profession searches to these tokens.
    pub fn with_professions<'s>(mut self, professions: impl IntoIterator<Item = &'s str>) -> Self {
        self.professions = Some(indices(self.model, professions));
        self
    }

    pub fn model(&self) -> &'a EmbeddingModel {
        self.model
    }

    fn search(&self, word: &str, within: &Option<Vec<usize>>, topn: usize) -> Result<Vec<SimilarityHit>> {
        match within {
            Some(c) => self.model.most_similar_within(word, c, topn),
            None => self.model.most_similar(&[word], topn),
        }
    }

    /// Nearest persons to `person`, never including `person` itself.
    pub fn similar_persons(&self, person: &str, topn: usize) -> Result<Vec<SimilarityHit>> {
        self.search(person, &self.persons, topn)
    }

    pub fn similar_professions(&self, profession: &str, topn: usize) -> Result<Vec<SimilarityHit>> {
        self.search(profession, &self.professions, topn)
    }
}

/// Evidence gathered in one propagation round, per person and profession.
pub type EvidenceState = BTreeMap<String, BTreeMap<String, Vec<ScoredEvidence>>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Propagation {
    pub evidence: EvidenceState,
    /// Normalized evidence.
    pub scores: ScoreTable,
    /// State persons without a vector.
    pub skipped: Vec<String>,
}

/// One propagation round: every person's scores are sent to each neighbor
/// with similarity at least `threshold`, then normalized per profession.
pub fn score_propagation(
    overall: &KnowledgeState,
    space: &Neighborhood<'_>,
    config: &PropagationConfig,
) -> Result<Propagation> {
    config.validate()?;
    let persons: Vec<&str> = overall.persons().collect();
    let neighbors: Vec<Option<Vec<SimilarityHit>>> = persons
        .par_iter()
        .map(|&p| {
            if !space.model().contains(p) {
                return Ok(None);
            }
            let hits = space.similar_persons(p, config.topn)?;
            Ok(Some(
                hits.into_iter()
                    .filter(|h| h.score >= config.threshold && h.score > 0.0)
                    .collect(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut out = Propagation::default();
    for (person, hits) in persons.into_iter().zip(neighbors) {
        let Some(hits) = hits else {
            log::warn!("{person}: not in the embedding vocabulary, skipped");
            out.skipped.push(person.to_owned());
            continue;
        };
        let professions = overall.professions(person).expect("person listed by state");
        for hit in hits {
            let target = out.evidence.entry(hit.word).or_default();
            for (profession, entry) in professions {
                target.entry(profession.clone()).or_default().push(ScoredEvidence {
                    rel_score: entry.score.as_f64(),
                    sim_score: hit.score,
                });
            }
        }
    }
    for (person, professions) in &out.evidence {
        let mut table = BTreeMap::new();
        for (profession, ev) in professions {
            table.insert(profession.clone(), normalize_score(ev)?.score);
        }
        out.scores.insert(person.clone(), table);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnReport {
    pub iterations: usize,
    /// Distinct persons in the state: after seeding, then after each round.
    pub person_counts: Vec<usize>,
    /// Persons skipped for lack of a vector, over all rounds.
    pub skipped: BTreeSet<String>,
    /// Whether the loop stopped because no new person appeared.
    pub converged: bool,
}

/// Seeds the state with the leading `seed_fraction` of `train` and
/// propagates until the number of known persons stops growing.
pub fn learn(
    train: &[Triple],
    space: &Neighborhood<'_>,
    config: &PropagationConfig,
) -> Result<(KnowledgeState, LearnReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut state = KnowledgeState::new();
    for t in &train[..seed_len(train.len(), config.seed_fraction)] {
        let score = t.score.ok_or_else(|| {
            Error::Contract(format!("training triple {} / {} has no score", t.subject, t.value))
        })?;
        if !state.insert(&t.subject, &t.value, score, Provenance::GroundTruth) {
            log::warn!("duplicate training pair {} / {}, first kept", t.subject, t.value);
        }
    }

    let mut report = LearnReport {
        person_counts: vec![state.person_count()],
        ..LearnReport::default()
    };
    while report.iterations < config.max_iterations {
        let before = state.person_count();
        let round = score_propagation(&state, space, config)?;
        state.merge(&round.scores);
        report.skipped.extend(round.skipped);
        report.iterations += 1;
        let after = state.person_count();
        report.person_counts.push(after);
        log::info!("propagation round {}: {before} -> {after} persons", report.iterations);
        if after == before {
            report.converged = true;
            break;
        }
    }
    Ok((state, report))
}

/// Score for (person, profession), trying in order:
///
/// 1. the stored score;
/// 2. the normalized scores of the person's neighbors that have one;
/// 3. the number of professions similar to `profession` that are also
///    similar to the person;
/// 4. `config.fallback_score`.
pub fn predict_profession(
    person: &str,
    profession: &str,
    state: &KnowledgeState,
    space: &Neighborhood<'_>,
    config: &PropagationConfig,
) -> Result<Score> {
    if let Some(score) = state.score(person, profession) {
        return Ok(score);
    }
    let model = space.model();
    let Some(person_vec) = model.vector(person) else {
        log::debug!("{person}: no vector, using the fallback score");
        return Ok(config.fallback_score);
    };

    let evidence: Vec<ScoredEvidence> = space
        .similar_persons(person, config.topn)?
        .into_iter()
        .filter(|h| h.score >= config.threshold && h.score > 0.0)
        .filter_map(|h| {
            state.score(&h.word, profession).map(|s| ScoredEvidence {
                rel_score: s.as_f64(),
                sim_score: h.score,
            })
        })
        .collect();
    if !evidence.is_empty() {
        return Ok(normalize_score(&evidence)?.score);
    }

    if !model.contains(profession) {
        log::warn!("{profession}: not in the embedding vocabulary, using the fallback score");
        return Ok(config.fallback_score);
    }
    let similar = space.similar_professions(profession, config.similar_professions)?;
    let count = similar
        .iter()
        .filter(|h| {
            let v = model.vector(&h.word).expect("hit comes from the vocabulary");
            cosine(person_vec, v).is_ok_and(|c| c >= config.threshold)
        })
        .count();
    Ok(Score::from_real(count as f64))
}
