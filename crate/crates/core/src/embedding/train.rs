//! CBOW training with negative sampling.
//!
//! For every center position the hidden vector `h` is the mean of the input
//! vectors of the surviving context words within the window. The loss for one
//! example is
//!
//! ```text
//! L = -log σ(u_pos · h) - Σ_k log σ(-u_k · h)
//! ```
//!
//! where `u_*` are output vectors of the center word and of `k` words drawn
//! from the unigram distribution raised to the 3/4 power. Each example is one
//! SGD step on `L`; the gradient reaching `h` is split evenly across the
//! context words because `h` is their mean.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{keep_from_frequency, Vocab};
use super::{EmbeddingConfig, EmbeddingModel, Matrix};
use crate::error::{Error, Result};

/// Power applied to unigram counts for the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Learning rate never decays below this fraction of its initial value.
const MIN_LR_FRACTION: f32 = 1e-4;

/// Per-word keep probabilities for frequency subsampling.
#[derive(Debug, Clone)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocab, rho: f64) -> Self {
        let keep = (0..vocab.len())
            .map(|i| keep_from_frequency(vocab.frequency(i), rho))
            .collect();
        Subsampler { keep }
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.keep[index]
    }

    /// One Bernoulli draw: does this occurrence survive?
    pub fn keep<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> bool {
        let p = self.keep[index];
        p >= 1.0 || rng.random::<f64>() < p
    }
}

/// Unigram^0.75 sampler for negative words.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl NoiseDistribution {
    pub fn new(vocab: &Vocab) -> Result<Self> {
        let weights: Vec<f64> = vocab
            .counts()
            .iter()
            .map(|&c| (c as f64).powf(NOISE_EXPONENT))
            .collect();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
        Ok(NoiseDistribution { weights, index })
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.weights[index] / self.weights.iter().sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.index.sample(rng) as u32
    }
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean negative-sampling loss per training example, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Training examples (center positions with non-empty context) per epoch.
    pub epoch_examples: Vec<u64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean(context: &[Vec<f64>]) -> Vec<f64> {
    let dim = context.first().map_or(0, Vec::len);
    let mut h = vec![0.0; dim];
    for v in context {
        for (acc, x) in h.iter_mut().zip(v) {
            *acc += x;
        }
    }
    let n = context.len() as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// Negative-sampling loss of one CBOW example, evaluated in `f64`.
pub fn negative_sampling_loss(context: &[Vec<f64>], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let h = mean(context);
    softplus(-dot(positive, &h)) + negatives.iter().map(|u| softplus(dot(u, &h))).sum::<f64>()
}

/// Gradient of [`negative_sampling_loss`] with respect to every vector involved.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub context: Vec<Vec<f64>>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn negative_sampling_gradient(
    context: &[Vec<f64>],
    positive: &[f64],
    negatives: &[Vec<f64>],
) -> LossGradient {
    let h = mean(context);
    let mut grad_h = vec![0.0; h.len()];

    // dL/df = σ(f) - label
    let coef = sigmoid(dot(positive, &h)) - 1.0;
    for (g, u) in grad_h.iter_mut().zip(positive) {
        *g += coef * u;
    }
    let grad_positive = h.iter().map(|x| coef * x).collect();

    let grad_negatives = negatives
        .iter()
        .map(|u| {
            let coef = sigmoid(dot(u, &h));
            for (g, x) in grad_h.iter_mut().zip(u) {
                *g += coef * x;
            }
            h.iter().map(|x| coef * x).collect()
        })
        .collect();

    let n = context.len() as f64;
    let per_context: Vec<f64> = grad_h.iter().map(|g| g / n).collect();
    LossGradient {
        context: vec![per_context; context.len()],
        positive: grad_positive,
        negatives: grad_negatives,
    }
}

/// Row access to a parameter matrix, either exclusively owned (single
/// worker) or shared between workers as relaxed atomics.
trait Params {
    fn load(&self, row: usize, dst: &mut [f32]);
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `row += a * x`
    fn axpy(&mut self, row: usize, a: f32, x: &[f32]);
}

struct Dense<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl Params for Dense<'_> {
    fn load(&self, row: usize, dst: &mut [f32]) {
        dst.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum()
    }

    fn axpy(&mut self, row: usize, a: f32, x: &[f32]) {
        for (r, xi) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(x) {
            *r += a * xi;
        }
    }
}

#[derive(Clone, Copy)]
struct Shared<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Shared<'_> {
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }
}

impl Params for Shared<'_> {
    fn load(&self, row: usize, dst: &mut [f32]) {
        for (j, d) in dst.iter_mut().enumerate() {
            *d = self.get(row * self.dim + j);
        }
    }

    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        v.iter()
            .enumerate()
            .map(|(j, x)| self.get(row * self.dim + j) * x)
            .sum()
    }

    // Lost updates between workers are accepted.
    fn axpy(&mut self, row: usize, a: f32, x: &[f32]) {
        for (j, xi) in x.iter().enumerate() {
            let i = row * self.dim + j;
            let v = self.get(i) + a * xi;
            self.data[i].store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

struct RunContext<'a> {
    noise: &'a NoiseDistribution,
    subsampler: &'a Subsampler,
    config: &'a EmbeddingConfig,
    /// Tokens processed so far, over all workers; drives the LR schedule.
    progress: &'a AtomicU64,
    scheduled: u64,
}

struct Worker<P> {
    input: P,
    output: P,
    hidden: Vec<f32>,
    grad: Vec<f32>,
    scratch: Vec<f32>,
    kept: Vec<u32>,
    context: Vec<u32>,
    negatives: Vec<u32>,
}

impl<P: Params> Worker<P> {
    fn new(input: P, output: P, dim: usize) -> Self {
        Worker {
            input,
            output,
            hidden: vec![0.0; dim],
            grad: vec![0.0; dim],
            scratch: vec![0.0; dim],
            kept: Vec::new(),
            context: Vec::new(),
            negatives: Vec::new(),
        }
    }

    /// One SGD step for a single CBOW example. Returns the example's loss
    /// measured before the update.
    fn update(&mut self, context: &[u32], center: u32, negatives: &[u32], lr: f32) -> f64 {
        self.hidden.iter_mut().for_each(|x| *x = 0.0);
        for &c in context {
            self.input.load(c as usize, &mut self.scratch);
            for (h, x) in self.hidden.iter_mut().zip(&self.scratch) {
                *h += x;
            }
        }
        let inv = 1.0 / context.len() as f32;
        self.hidden.iter_mut().for_each(|x| *x *= inv);
        self.grad.iter_mut().for_each(|x| *x = 0.0);

        let mut loss = 0.0;
        let targets = std::iter::once((center, 1.0f32)).chain(negatives.iter().map(|&n| (n, 0.0)));
        for (target, label) in targets {
            let f = self.output.dot(target as usize, &self.hidden);
            let f64v = f as f64;
            loss += if label > 0.0 { softplus(-f64v) } else { softplus(f64v) };
            let g = (label - sigmoid(f64v) as f32) * lr;
            self.output.load(target as usize, &mut self.scratch);
            for (e, u) in self.grad.iter_mut().zip(&self.scratch) {
                *e += g * u;
            }
            self.output.axpy(target as usize, g, &self.hidden);
        }
        for &c in context {
            self.input.axpy(c as usize, inv, &self.grad);
        }
        loss
    }

    /// Trains on `sentences` for all epochs. Returns (loss sum, examples) per epoch.
    fn run(
        &mut self,
        sentences: &[Vec<u32>],
        first_sentence: usize,
        shared: &RunContext<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<(f64, u64)>> {
        let config = shared.config;
        let window = config.window;
        let lr0 = config.initial_lr;
        let mut per_epoch = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            let mut loss_sum = 0.0;
            let mut examples = 0u64;
            for (s, sentence) in sentences.iter().enumerate() {
                let done = shared.progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                let lr = lr0 * (1.0 - done as f32 / shared.scheduled as f32).max(MIN_LR_FRACTION);

                self.kept.clear();
                for &w in sentence {
                    if shared.subsampler.keep(w as usize, rng) {
                        self.kept.push(w);
                    }
                }
                let kept = std::mem::take(&mut self.kept);
                for pos in 0..kept.len() {
                    let lo = pos.saturating_sub(window);
                    let hi = (pos + window + 1).min(kept.len());
                    let mut context = std::mem::take(&mut self.context);
                    context.clear();
                    context.extend_from_slice(&kept[lo..pos]);
                    context.extend_from_slice(&kept[pos + 1..hi]);
                    if context.is_empty() {
                        self.context = context;
                        continue;
                    }
                    let center = kept[pos];
                    self.negatives.clear();
                    for _ in 0..config.negatives {
                        let n = shared.noise.sample(rng);
                        if n != center {
                            self.negatives.push(n);
                        }
                    }
                    let negatives = std::mem::take(&mut self.negatives);
                    let loss = self.update(&context, center, &negatives, lr);
                    self.negatives = negatives;
                    self.context = context;
                    if !loss.is_finite() {
                        return Err(Error::NonFinite {
                            epoch,
                            sentence: first_sentence + s,
                            position: pos,
                        });
                    }
                    loss_sum += loss;
                    examples += 1;
                }
                self.kept = kept;
            }
            per_epoch.push((loss_sum, examples));
        }
        Ok(per_epoch)
    }
}

fn initial_input(vocab_len: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..vocab_len * dim)
        .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
        .collect()
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64 + 1);
    rng
}

/// Trains a CBOW model on an in-memory corpus.
///
/// With `config.workers == 1` the result depends only on the corpus, the
/// configuration and the seed, down to the last bit.
pub fn train_cbow<S: AsRef<[String]>>(
    sentences: &[S],
    config: &EmbeddingConfig,
) -> Result<(EmbeddingModel, TrainReport)> {
    config.validate()?;
    let vocab = Vocab::build(sentences.iter().map(AsRef::as_ref), config.min_count)?;
    let encoded: Vec<Vec<u32>> = sentences
        .iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .filter_map(|t| vocab.index_of(t).map(|i| i as u32))
                .collect()
        })
        .collect();
    let subsampler = Subsampler::new(&vocab, config.rho);
    let noise = NoiseDistribution::new(&vocab)?;

    let dim = config.dim;
    let mut input = initial_input(vocab.len(), dim, &mut ChaCha8Rng::seed_from_u64(config.seed));
    let mut output = vec![0.0f32; vocab.len() * dim];

    let tokens: u64 = encoded.iter().map(|s| s.len() as u64).sum();
    let progress = AtomicU64::new(0);
    let shared = RunContext {
        noise: &noise,
        subsampler: &subsampler,
        config,
        progress: &progress,
        scheduled: (tokens * config.epochs as u64).max(1),
    };

    let per_worker = if config.workers == 1 {
        let mut worker = Worker::new(
            Dense { data: &mut input, dim },
            Dense { data: &mut output, dim },
            dim,
        );
        vec![worker.run(&encoded, 0, &shared, &mut worker_rng(config.seed, 0))?]
    } else {
        let shared_in: Vec<AtomicU32> = input.iter().map(|v| AtomicU32::new(v.to_bits())).collect();
        let shared_out: Vec<AtomicU32> = output.iter().map(|v| AtomicU32::new(v.to_bits())).collect();
        let chunk = encoded.len().div_ceil(config.workers).max(1);
        let results: Vec<Result<Vec<(f64, u64)>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = encoded
                .chunks(chunk)
                .enumerate()
                .map(|(w, part)| {
                    let shared = &shared;
                    let params_in = Shared { data: &shared_in, dim };
                    let params_out = Shared { data: &shared_out, dim };
                    scope.spawn(move || {
                        let mut worker = Worker::new(params_in, params_out, dim);
                        worker.run(part, w * chunk, shared, &mut worker_rng(config.seed, w))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });
        input = shared_in.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        output = shared_out.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        results.into_iter().collect::<Result<_>>()?
    };

    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        let (loss, n) = per_worker
            .iter()
            .map(|w| w[epoch])
            .fold((0.0, 0), |(l, n), (wl, wn)| (l + wl, n + wn));
        report.epoch_losses.push(if n > 0 { loss / n as f64 } else { 0.0 });
        report.epoch_examples.push(n);
    }

    let n = vocab.len();
    let model = EmbeddingModel::new(
        vocab,
        Matrix::from_vec(n, dim, input)?,
        Matrix::from_vec(n, dim, output)?,
        config.clone(),
    )?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    fn small_config() -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 8,
            negatives: 3,
            rho: 1.0,
            window: 2,
            epochs: 3,
            min_count: 1,
            initial_lr: 0.05,
            seed: 7,
            workers: 1,
        }
    }

    #[test]
    fn zero_learning_rate_leaves_initialization() {
        let sentences = corpus(&["a b c d"]);
        let config = small_config();
        let vocab = Vocab::build(&sentences, 1).unwrap();
        let encoded: Vec<Vec<u32>> = vec![(0..4).collect()];
        let init = initial_input(vocab.len(), config.dim, &mut ChaCha8Rng::seed_from_u64(config.seed));
        let mut input = init.clone();
        let mut output = vec![0.0f32; vocab.len() * config.dim];
        let subsampler = Subsampler::new(&vocab, config.rho);
        let noise = NoiseDistribution::new(&vocab).unwrap();
        let progress = AtomicU64::new(0);
        let zero_lr = EmbeddingConfig {
            initial_lr: 0.0,
            epochs: 1,
            ..config.clone()
        };
        let shared = RunContext {
            noise: &noise,
            subsampler: &subsampler,
            config: &zero_lr,
            progress: &progress,
            scheduled: 4,
        };
        let dim = config.dim;
        let mut worker = Worker::new(
            Dense { data: &mut input, dim },
            Dense { data: &mut output, dim },
            dim,
        );
        worker.run(&encoded, 0, &shared, &mut worker_rng(1, 0)).unwrap();
        assert_eq!(input, init);
        assert!(output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kernel_step_follows_analytic_gradient() {
        let dim = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = 6;
        let mut input: Vec<f32> = (0..rows * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut output: Vec<f32> = (0..rows * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let (input0, output0) = (input.clone(), output.clone());
        let row = |m: &[f32], r: usize| -> Vec<f64> {
            m[r * dim..(r + 1) * dim].iter().map(|&x| x as f64).collect()
        };
        let context = [0u32, 1, 2];
        let (center, negatives) = (3u32, [4u32, 5]);
        let lr = 0.1f32;

        let ctx: Vec<Vec<f64>> = context.iter().map(|&c| row(&input0, c as usize)).collect();
        let negs: Vec<Vec<f64>> = negatives.iter().map(|&n| row(&output0, n as usize)).collect();
        let grad = negative_sampling_gradient(&ctx, &row(&output0, center as usize), &negs);
        let expected_loss = negative_sampling_loss(&ctx, &row(&output0, center as usize), &negs);

        let mut worker = Worker::new(
            Dense { data: &mut input, dim },
            Dense { data: &mut output, dim },
            dim,
        );
        let loss = worker.update(&context, center, &negatives, lr);
        assert!((loss - expected_loss).abs() < 1e-5);

        let check = |after: &[f32], before: &[f32], r: u32, g: &[f64]| {
            for j in 0..dim {
                let step = after[r as usize * dim + j] as f64 - before[r as usize * dim + j] as f64;
                assert!((step + lr as f64 * g[j]).abs() < 1e-5, "row {r} col {j}");
            }
        };
        check(&output, &output0, center, &grad.positive);
        for (k, &n) in negatives.iter().enumerate() {
            check(&output, &output0, n, &grad.negatives[k]);
        }
        for (k, &c) in context.iter().enumerate() {
            check(&input, &input0, c, &grad.context[k]);
        }
    }

    #[test]
    fn deterministic_training_is_bit_identical() {
        let sentences = corpus(&["a b c d e", "b c d e f", "c d e f a", "d e f a b"]);
        let config = small_config();
        let (m1, r1) = train_cbow(&sentences, &config).unwrap();
        let (m2, r2) = train_cbow(&sentences, &config).unwrap();
        assert_eq!(m1.input_vectors(), m2.input_vectors());
        assert_eq!(m1.output_vectors(), m2.output_vectors());
        assert_eq!(r1, r2);
    }

    #[test]
    fn parallel_training_produces_finite_model() {
        let sentences: Vec<Vec<String>> = (0..200)
            .map(|i| (0..8).map(|j| format!("w{}", (i + j) % 13)).collect())
            .collect();
        let config = EmbeddingConfig {
            workers: 4,
            ..small_config()
        };
        let (model, report) = train_cbow(&sentences, &config).unwrap();
        assert_eq!(model.vocab().len(), 13);
        assert_eq!(report.epoch_losses.len(), 3);
        assert!(model.input_vectors().as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn divergent_learning_rate_is_reported() {
        let sentences = corpus(&["a b a b a b a b", "b a b a b a"]);
        let config = EmbeddingConfig {
            initial_lr: f32::MAX,
            epochs: 5,
            ..small_config()
        };
        match train_cbow(&sentences, &config) {
            Err(Error::NonFinite { .. }) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn noise_distribution_uses_three_quarter_power() {
        let sentences = corpus(&["a a a a a a a a a a a a a a a a b"]);
        let vocab = Vocab::build(&sentences, 1).unwrap();
        let noise = NoiseDistribution::new(&vocab).unwrap();
        let (wa, wb) = (16f64.powf(0.75), 1.0);
        assert!((noise.probability(0) - wa / (wa + wb)).abs() < 1e-12);
    }
}
