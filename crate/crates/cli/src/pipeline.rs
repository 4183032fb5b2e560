//! One function per subcommand. Every stage reads its inputs from the
//! configuration or from earlier stages' files in the output directory, and
//! writes plain-text files back there.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use kbscore::corpus::{parse_stopwords, preprocess_corpus, PreprocessConfig};
use kbscore::embedding::{load_model, save_model, train_cbow, EmbeddingModel};
use kbscore::metrics::{evaluate as evaluate_pairs, truncate_2_5, EvaluationReport, ScoredPair};
use kbscore::nationality::{
    build_mapping as derive_mapping, learn_nationalities, load_learned, predict_nationality,
    save_learned, DocumentDirectory, NationalityMapping,
};
use kbscore::profession::{learn, predict_profession, seed_len, KnowledgeState, Neighborhood};
use kbscore::{Score, Triple};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::files::{self, read_person_list, read_rows, read_value_list, TripleFileRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Profession,
    Nationality,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Profession => "profession",
            Relation::Nationality => "nationality",
        }
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Artifacts { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn mapping(&self) -> PathBuf {
        self.dir.join("mapping.tsv")
    }

    pub fn corpus_tokens(&self) -> PathBuf {
        self.dir.join("corpus.tok")
    }

    pub fn corpus_stats(&self) -> PathBuf {
        self.dir.join("corpus.stats")
    }

    pub fn model(&self) -> PathBuf {
        self.dir.join("model.vec")
    }

    pub fn profession_state(&self) -> PathBuf {
        self.dir.join("profession.state")
    }

    pub fn nationality_state(&self) -> PathBuf {
        self.dir.join("nationality.state")
    }

    pub fn nationality_absent(&self) -> PathBuf {
        self.dir.join("nationality.absent")
    }

    pub fn predictions(&self, relation: Relation) -> PathBuf {
        self.dir.join(format!("{}.predictions.tsv", relation.name()))
    }

    pub fn report(&self, relation: Relation) -> PathBuf {
        self.dir.join(format!("{}.report.txt", relation.name()))
    }
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
    let path = value
        .as_deref()
        .ok_or_else(|| CliError::usage(format!("`{key}` is not set in the configuration")))?;
    if !path.exists() {
        return Err(CliError::usage(format!("{key}: {} does not exist", path.display())));
    }
    Ok(path)
}

fn optional<'a>(value: &'a Option<PathBuf>, key: &str) -> CliResult<Option<&'a Path>> {
    match value {
        Some(_) => required(value, key).map(Some),
        None => Ok(None),
    }
}

fn upstream(path: PathBuf, producer: &str) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::data(format!(
            "{} not found; run `kbscore {producer}` first",
            path.display()
        )))
    }
}

fn prepare_output(config: &PipelineConfig) -> CliResult<Artifacts> {
    fs::create_dir_all(&config.output).map_err(|e| {
        CliError::data(format!("cannot create output directory {}: {e}", config.output.display()))
    })?;
    Ok(Artifacts::new(&config.output))
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

fn text_config(config: &PipelineConfig) -> CliResult<PreprocessConfig> {
    let mut text = PreprocessConfig::default();
    if let Some(path) = optional(&config.stopwords, "stopwords")? {
        let contents = fs::read_to_string(path).map_err(io_error(path))?;
        text = text.with_stopwords(parse_stopwords(&contents));
    }
    for (key, list) in [("professions", &config.professions), ("nationalities", &config.nationalities)] {
        if let Some(path) = optional(list, key)? {
            let contents = fs::read_to_string(path).map_err(io_error(path))?;
            text = text.with_terms(contents.lines().filter(|l| !l.trim().is_empty()));
        }
    }
    Ok(text)
}

fn model_path(config: &PipelineConfig, artifacts: &Artifacts) -> CliResult<PathBuf> {
    match &config.model {
        Some(_) => Ok(required(&config.model, "model")?.to_owned()),
        None => upstream(artifacts.model(), "train-embeddings"),
    }
}

fn load_query_model(config: &PipelineConfig, artifacts: &Artifacts) -> CliResult<EmbeddingModel> {
    Ok(load_model(model_path(config, artifacts)?)?)
}

/// Writes the country → demonym mapping.
pub fn build_mapping(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let countries = read_value_list(required(&config.nationalities, "nationalities")?)?;
    let overrides = optional(&config.mapping, "mapping")?
        .map(NationalityMapping::load)
        .transpose()?;
    let pretrained = optional(&config.pretrained, "pretrained")?;
    if pretrained.is_none() && overrides.is_none() {
        return Err(CliError::usage("build-mapping needs `pretrained` vectors or a `mapping` file"));
    }

    let (mapping, unmapped, derived) = match pretrained {
        Some(path) => {
            let vectors = load_model(path)?;
            let anchor = (config.anchor_country.as_str(), config.anchor_demonym.as_str());
            let report = derive_mapping(&countries, &vectors, anchor, overrides.as_ref())?;
            (report.mapping, report.unmapped, report.from_analogy.len())
        }
        None => {
            let overrides = overrides.expect("checked above");
            let mut mapping = NationalityMapping::default();
            let mut unmapped = Vec::new();
            for c in &countries {
                match overrides.demonym(c) {
                    Some(d) => mapping.insert(c.clone(), d.to_owned())?,
                    None => unmapped.push(c.clone()),
                }
            }
            (mapping, unmapped, 0)
        }
    };
    for c in &unmapped {
        log::warn!("no demonym for {c}");
    }
    mapping.save(artifacts.mapping())?;
    Ok(format!(
        "mapped={} derived={derived} unmapped={}",
        mapping.len(),
        unmapped.len()
    ))
}

/// Tokenizes the annotated corpus into `corpus.tok`, one sentence per line.
pub fn preprocess(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let corpus = required(&config.corpus, "corpus")?;
    let mapping = NationalityMapping::load(upstream(artifacts.mapping(), "build-mapping")?)?;
    let text = text_config(config)?.with_nationality_mapping(mapping);
    text.validate()?;

    let reader = BufReader::new(File::open(corpus).map_err(io_error(corpus))?);
    let out_path = artifacts.corpus_tokens();
    let mut out = BufWriter::new(File::create(&out_path).map_err(io_error(&out_path))?);
    let mut stream = preprocess_corpus(reader, &text);
    for sentence in stream.by_ref() {
        let sentence = sentence.map_err(io_error(corpus))?;
        writeln!(out, "{sentence}").map_err(io_error(&out_path))?;
    }
    out.flush().map_err(io_error(&out_path))?;
    let stats = stream.stats();
    files::write(&artifacts.corpus_stats(), &format!("{stats}\n"))?;
    Ok(stats.to_string())
}

/// Trains the CBOW model on `corpus.tok`.
pub fn train_embeddings(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let path = upstream(artifacts.corpus_tokens(), "preprocess")?;
    let reader = BufReader::new(File::open(&path).map_err(io_error(&path))?);
    let mut sentences: Vec<Vec<String>> = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_error(&path))?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    let (model, report) = train_cbow(&sentences, &config.embedding)?;
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        log::info!("epoch {}: mean loss {loss:.6}", epoch + 1);
    }
    save_model(&model, artifacts.model())?;
    Ok(format!(
        "vocab={} dim={} epochs={} final_loss={:.6}",
        model.vocab().len(),
        model.dim(),
        report.epoch_losses.len(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    ))
}

fn neighborhood<'a>(config: &PipelineConfig, model: &'a EmbeddingModel) -> CliResult<Neighborhood<'a>> {
    let mut space = Neighborhood::new(model);
    if let Some(path) = optional(&config.persons, "persons")? {
        let persons = read_person_list(path)?;
        space = space.with_persons(persons.iter().map(String::as_str));
    }
    if let Some(path) = optional(&config.professions, "professions")? {
        let professions = read_value_list(path)?;
        space = space.with_professions(professions.iter().map(String::as_str));
    }
    Ok(space)
}

/// Learns profession scores from the leading share of the training file.
pub fn learn_profession(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let train = files::read_train_file(required(&config.profession_train, "profession_train")?)?;
    let model = load_query_model(config, &artifacts)?;
    let space = neighborhood(config, &model)?;
    let (state, report) = learn(&train, &space, &config.propagation)?;
    state.save(artifacts.profession_state())?;
    Ok(format!(
        "iterations={} persons={} entries={} skipped={} converged={}",
        report.iterations,
        state.person_count(),
        state.entry_count(),
        report.skipped.len(),
        report.converged
    ))
}

/// Rows not used for seeding: the evaluation share of a training file.
fn held_out(config: &PipelineConfig, path: &Path) -> CliResult<Vec<TripleFileRow>> {
    let rows = read_rows(path, true)?;
    let start = seed_len(rows.len(), config.split_fraction);
    Ok(rows[start..].to_vec())
}

fn query_rows(
    query: &Option<PathBuf>,
    query_key: &str,
    default: impl FnOnce() -> CliResult<Vec<TripleFileRow>>,
) -> CliResult<Vec<TripleFileRow>> {
    match optional(query, query_key)? {
        Some(path) => read_rows(path, false),
        None => Ok(default()?
            .into_iter()
            .map(|r| TripleFileRow { score: None, ..r })
            .collect()),
    }
}

fn finish_predictions(
    config: &PipelineConfig,
    artifacts: &Artifacts,
    relation: Relation,
    rows: Vec<TripleFileRow>,
    scores: Vec<Score>,
) -> CliResult<String> {
    let n = rows.len();
    let rows: Vec<TripleFileRow> = rows
        .into_iter()
        .zip(scores)
        .map(|(r, s)| TripleFileRow {
            score: Some(if config.apply_truncation { truncate_2_5(s) } else { s }),
            ..r
        })
        .collect();
    files::write_rows(&artifacts.predictions(relation), &rows)?;
    Ok(format!("predicted={n} truncated={}", config.apply_truncation))
}

pub fn predict_profession_command(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let rows = query_rows(&config.profession_query, "profession_query", || {
        held_out(config, required(&config.profession_train, "profession_train")?)
    })?;
    let state = KnowledgeState::load(upstream(artifacts.profession_state(), "learn-profession")?)?;
    let model = load_query_model(config, &artifacts)?;
    let space = neighborhood(config, &model)?;
    let scores = rows
        .par_iter()
        .map(|r| {
            let t = r.triple();
            predict_profession(&t.subject, &t.value, &state, &space, &config.propagation)
        })
        .collect::<kbscore::Result<Vec<_>>>()?;
    finish_predictions(config, &artifacts, Relation::Profession, rows, scores)
}

/// Scores nationalities from per-person documents.
pub fn learn_nationality(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let countries = read_value_list(required(&config.nationalities, "nationalities")?)?;
    let documents = required(&config.documents, "documents")?;
    let mapping = NationalityMapping::load(upstream(artifacts.mapping(), "build-mapping")?)?;

    let persons: Vec<String> = match optional(&config.persons, "persons")? {
        Some(path) => read_person_list(path)?,
        None => {
            let mut persons = BTreeSet::new();
            for (key, path) in [
                ("nationality_train", &config.nationality_train),
                ("nationality_kb", &config.nationality_kb),
            ] {
                if let Some(path) = optional(path, key)? {
                    let scored = key.ends_with("train");
                    persons.extend(read_rows(path, scored)?.iter().map(|r| r.triple().subject));
                }
            }
            if persons.is_empty() {
                return Err(CliError::usage(
                    "learn-nationality needs `persons`, `nationality_train` or `nationality_kb`",
                ));
            }
            persons.into_iter().collect()
        }
    };

    let text = text_config(config)?;
    let provider = DocumentDirectory::new(documents);
    let learning = learn_nationalities(&persons, &provider, &countries, &mapping, &text);
    save_learned(&learning.scores, artifacts.nationality_state())?;
    let mut absent = String::new();
    for p in &learning.absent {
        absent.push_str(p);
        absent.push('\n');
    }
    files::write(&artifacts.nationality_absent(), &absent)?;
    Ok(format!(
        "scored={} absent={} unreadable={}",
        learning.scores.len(),
        learning.absent.len(),
        learning.failures.len()
    ))
}

pub fn predict_nationality_command(config: &PipelineConfig) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let rows = query_rows(&config.nationality_query, "nationality_query", || {
        read_rows(required(&config.nationality_train, "nationality_train")?, true)
    })?;
    let all = read_value_list(required(&config.nationalities, "nationalities")?)?;
    let learned = load_learned(upstream(artifacts.nationality_state(), "learn-nationality")?)?;
    let model = load_query_model(config, &artifacts)?;
    let scores = rows
        .par_iter()
        .map(|r| {
            let t = r.triple();
            predict_nationality(&t.subject, &t.value, &learned, &model, &all)
        })
        .collect();
    finish_predictions(config, &artifacts, Relation::Nationality, rows, scores)
}

/// Raw and truncated reports for one relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub raw: EvaluationReport,
    pub truncated: EvaluationReport,
}

impl std::fmt::Display for Evaluation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "mode=raw {}", self.raw)?;
        write!(f, "mode=truncated {}", self.truncated)
    }
}

/// Joins predictions to gold scores on normalized (person, value) keys.
pub fn score_against_gold(predictions: &[Triple], gold: &[Triple]) -> CliResult<Evaluation> {
    let mut by_key: HashMap<(&str, &str), Score> = HashMap::new();
    for p in predictions {
        let score = p.score.ok_or_else(|| CliError::data("prediction without a score"))?;
        by_key.entry((&p.subject, &p.value)).or_insert(score);
    }
    let mut raw = Vec::with_capacity(gold.len());
    let mut truncated = Vec::with_capacity(gold.len());
    let mut missing = Vec::new();
    for g in gold {
        let truth = g.score.ok_or_else(|| CliError::data("gold row without a score"))?;
        match by_key.get(&(g.subject.as_str(), g.value.as_str())) {
            Some(&p) => {
                raw.push(ScoredPair::new(&g.subject, &g.value, p.as_f64(), truth.as_f64()));
                truncated.push(ScoredPair::new(&g.subject, &g.value, truncate_2_5(p).as_f64(), truth.as_f64()));
            }
            None => missing.push(format!("{}/{}", g.subject, g.value)),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::data(format!(
            "{} gold pairs have no prediction, first: {}",
            missing.len(),
            missing[0]
        )));
    }
    Ok(Evaluation {
        raw: evaluate_pairs(&raw)?,
        truncated: evaluate_pairs(&truncated)?,
    })
}

pub fn evaluate(
    config: &PipelineConfig,
    relation: Relation,
    predictions: Option<&Path>,
    gold: Option<&Path>,
) -> CliResult<String> {
    let artifacts = prepare_output(config)?;
    let predictions = match predictions {
        Some(p) => p.to_owned(),
        None => upstream(artifacts.predictions(relation), &format!("predict-{}", relation.name()))?,
    };
    let predictions = files::read_train_file(&predictions)?;
    let gold: Vec<Triple> = match (gold, relation) {
        (Some(g), _) => files::read_train_file(g)?,
        (None, Relation::Profession) => {
            held_out(config, required(&config.profession_train, "profession_train")?)?
                .iter()
                .map(TripleFileRow::triple)
                .collect()
        }
        (None, Relation::Nationality) => {
            files::read_train_file(required(&config.nationality_train, "nationality_train")?)?
        }
    };
    let evaluation = score_against_gold(&predictions, &gold)?;
    let text = evaluation.to_string();
    files::write(&artifacts.report(relation), &format!("{text}\n"))?;
    Ok(text)
}
