//! CBOW word embeddings trained with negative sampling, and the
//! cosine-similarity queries built on top of them.

mod io;
mod query;
mod train;
mod vocab;

pub use io::{load_model, save_model, sidecar_path};
pub use query::{cosine, SimilarityHit};
pub use train::{
    negative_sampling_gradient, negative_sampling_loss, train_cbow, LossGradient,
    NoiseDistribution, Subsampler, TrainReport, NOISE_EXPONENT,
};
pub use vocab::{keep_probability, Vocab};

use crate::error::{Error, Result};

/// Hyperparameters for CBOW training. Defaults follow the reference setup:
/// 300 dimensions, 15 negatives, ρ = 1e-4, window 5, 50 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub negatives: usize,
    /// Subsampling threshold ρ.
    pub rho: f64,
    /// Context radius on each side of the center word.
    pub window: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub initial_lr: f32,
    pub seed: u64,
    /// `1` trains deterministically; more workers update the shared
    /// matrices without locks and are only statistically reproducible.
    pub workers: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 300,
            negatives: 15,
            rho: 1e-4,
            window: 5,
            epochs: 50,
            min_count: 5,
            initial_lr: 0.025,
            seed: 1,
            workers: 1,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.dim >= 1, "dim must be at least 1")?;
        check(self.negatives >= 1, "negatives must be at least 1")?;
        check(self.rho > 0.0 && self.rho <= 1.0, "rho must lie in (0, 1]")?;
        check(self.window >= 1, "window must be at least 1")?;
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check(
            self.initial_lr > 0.0 && self.initial_lr.is_finite(),
            "initial_lr must be positive",
        )?;
        check(self.workers >= 1, "workers must be at least 1")
    }
}

/// Dense row-major `f32` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// A trained (or loaded) embedding model. Immutable once built; all query
/// methods take `&self` and are safe to call from many threads.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    vocab: Vocab,
    input: Matrix,
    output: Matrix,
    config: EmbeddingConfig,
    norms: Vec<f64>,
}

impl EmbeddingModel {
    pub fn new(vocab: Vocab, input: Matrix, output: Matrix, config: EmbeddingConfig) -> Result<Self> {
        if input.rows() != vocab.len() || output.rows() != vocab.len() {
            return Err(Error::Contract(format!(
                "matrix rows ({}, {}) do not match vocabulary size {}",
                input.rows(),
                output.rows(),
                vocab.len()
            )));
        }
        if input.cols() != config.dim || output.cols() != config.dim {
            return Err(Error::Contract(format!(
                "matrix width ({}, {}) does not match dim {}",
                input.cols(),
                output.cols(),
                config.dim
            )));
        }
        if !input.as_slice().iter().chain(output.as_slice()).all(|v| v.is_finite()) {
            return Err(Error::Contract("model contains non-finite values".into()));
        }
        let norms = (0..input.rows()).map(|i| query::norm(input.row(i))).collect();
        Ok(EmbeddingModel {
            vocab,
            input,
            output,
            config,
            norms,
        })
    }

    /// Builds a model from `(word, vector)` pairs, e.g. hand-made test
    /// vectors. Counts are set to 1 and the output matrix to zero.
    pub fn from_vectors<W: Into<String>>(pairs: impl IntoIterator<Item = (W, Vec<f32>)>) -> Result<Self> {
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (word, vector) in pairs {
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::Contract(format!(
                        "vector length {} differs from {d}",
                        vector.len()
                    )))
                }
                _ => {}
            }
            words.push(word.into());
            data.extend(vector);
        }
        let dim = dim.ok_or_else(|| Error::Config("no vectors given".into()))?;
        let n = words.len();
        let vocab = Vocab::from_parts(words, vec![1; n], n as u64)?;
        let config = EmbeddingConfig {
            dim,
            min_count: 1,
            ..EmbeddingConfig::default()
        };
        EmbeddingModel::new(vocab, Matrix::from_vec(n, dim, data)?, Matrix::zeros(n, dim), config)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Word representations (one row per vocabulary entry).
    pub fn input_vectors(&self) -> &Matrix {
        &self.input
    }

    /// Prediction weights used by the training objective.
    pub fn output_vectors(&self) -> &Matrix {
        &self.output
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.index_of(word).is_some()
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vocab.index_of(word).map(|i| self.input.row(i))
    }
}
