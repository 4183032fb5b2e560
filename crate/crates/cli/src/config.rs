//! Pipeline configuration: a text file of `key = value` lines.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the configuration file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kbscore::embedding::EmbeddingConfig;
use kbscore::profession::PropagationConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub persons: Option<PathBuf>,
    pub profession_kb: Option<PathBuf>,
    pub nationality_kb: Option<PathBuf>,
    pub profession_train: Option<PathBuf>,
    pub nationality_train: Option<PathBuf>,
    pub professions: Option<PathBuf>,
    pub nationalities: Option<PathBuf>,
    /// Hand-written `country<TAB>demonym` pairs that override derived ones.
    pub mapping: Option<PathBuf>,
    /// Vectors used to derive demonyms.
    pub pretrained: Option<PathBuf>,
    pub documents: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Model to query instead of `<output>/model.vec`.
    pub model: Option<PathBuf>,
    /// Unscored pairs to predict; default is the held-out part of the
    /// training file.
    pub profession_query: Option<PathBuf>,
    pub nationality_query: Option<PathBuf>,
    pub output: PathBuf,
    pub anchor_country: String,
    pub anchor_demonym: String,
    pub embedding: EmbeddingConfig,
    pub propagation: PropagationConfig,
    pub split_fraction: f64,
    pub apply_truncation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let propagation = PropagationConfig::default();
        PipelineConfig {
            corpus: None,
            persons: None,
            profession_kb: None,
            nationality_kb: None,
            profession_train: None,
            nationality_train: None,
            professions: None,
            nationalities: None,
            mapping: None,
            pretrained: None,
            documents: None,
            stopwords: None,
            model: None,
            profession_query: None,
            nationality_query: None,
            output: PathBuf::from("out"),
            anchor_country: "united_states_of_america".into(),
            anchor_demonym: "american".into(),
            embedding: EmbeddingConfig {
                workers: default_workers(),
                ..EmbeddingConfig::default()
            },
            split_fraction: propagation.seed_fraction,
            propagation,
            apply_truncation: false,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value for {key}: {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("invalid value for {key}: {value:?} (expected true or false)")),
    }
}

impl PipelineConfig {
    /// Parses configuration text. `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |msg: String| CliError::usage(format!("configuration line {}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail("expected `key = value`".into()))?;
            config.set(key.trim(), value.trim(), base).map_err(fail)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read configuration {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = || Some(base.join(value));
        let e = &mut self.embedding;
        let p = &mut self.propagation;
        match key {
            "corpus" => self.corpus = path(),
            "persons" => self.persons = path(),
            "profession_kb" => self.profession_kb = path(),
            "nationality_kb" => self.nationality_kb = path(),
            "profession_train" => self.profession_train = path(),
            "nationality_train" => self.nationality_train = path(),
            "professions" => self.professions = path(),
            "nationalities" => self.nationalities = path(),
            "mapping" => self.mapping = path(),
            "pretrained" => self.pretrained = path(),
            "documents" => self.documents = path(),
            "stopwords" => self.stopwords = path(),
            "model" => self.model = path(),
            "profession_query" => self.profession_query = path(),
            "nationality_query" => self.nationality_query = path(),
            "output" => self.output = base.join(value),
            "anchor_country" => self.anchor_country = value.to_owned(),
            "anchor_demonym" => self.anchor_demonym = value.to_owned(),
            "dim" => e.dim = parse(key, value)?,
            "negatives" => e.negatives = parse(key, value)?,
            "rho" => e.rho = parse(key, value)?,
            "window" => e.window = parse(key, value)?,
            "epochs" => e.epochs = parse(key, value)?,
            "min_count" => e.min_count = parse(key, value)?,
            "initial_lr" => e.initial_lr = parse(key, value)?,
            "seed" => e.seed = parse(key, value)?,
            "workers" => e.workers = parse(key, value)?,
            "topn" => p.topn = parse(key, value)?,
            "threshold" => p.threshold = parse(key, value)?,
            "max_iterations" => p.max_iterations = parse(key, value)?,
            "fallback_score" => p.fallback_score = parse(key, value)?,
            "similar_professions" => p.similar_professions = parse(key, value)?,
            "split_fraction" => {
                self.split_fraction = parse(key, value)?;
                p.seed_fraction = self.split_fraction;
            }
            "truncate" => self.apply_truncation = parse_bool(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(CliError::usage("split_fraction must lie in (0, 1)"));
        }
        self.embedding.validate()?;
        self.propagation.validate()?;
        Ok(())
    }

    pub fn set_workers(&mut self, workers: usize) {
        self.embedding.workers = workers;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.embedding.seed = seed;
    }
}
