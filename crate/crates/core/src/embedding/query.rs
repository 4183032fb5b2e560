//! Brute-force cosine similarity queries.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::EmbeddingModel;
use crate::error::{Error, Result};

/// Above this many multiply-adds a scan is split across threads.
const PARALLEL_SCAN_WORK: usize = 1 << 20;

/// A vocabulary word and its cosine similarity to a query.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityHit {
    pub word: String,
    pub score: f64,
}

pub(crate) fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// `a·b / (‖a‖‖b‖)`, computed in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Degenerate(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("zero-norm vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    Ok(dot / (na * nb))
}

fn by_score_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

impl EmbeddingModel {
    fn lookup(&self, word: &str) -> Result<usize> {
        self.vocab()
            .index_of(word)
            .ok_or_else(|| Error::UnknownWord(word.to_owned()))
    }

    fn row_f64(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.input_vectors().row(index).iter().map(|&x| x as f64)
    }

    /// Cosine similarity between two vocabulary words.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.lookup(a)?, self.lookup(b)?);
        cosine(self.input_vectors().row(ia), self.input_vectors().row(ib))
    }

    fn score_against(&self, query: &[f64], query_norm: f64, index: usize) -> f64 {
        let row_norm = self.norms[index];
        if row_norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .input_vectors()
            .row(index)
            .iter()
            .zip(query)
            .map(|(&x, q)| x as f64 * q)
            .sum();
        dot / (query_norm * row_norm)
    }

    /// The `topn` vocabulary words closest to `query` by cosine, excluding
    /// the given indices. Sorted by score descending, ties by index ascending.
    pub fn nearest_to_vector(
        &self,
        query: &[f64],
        exclude: &[usize],
        topn: usize,
    ) -> Result<Vec<SimilarityHit>> {
        self.rank(query, None, exclude, topn)
    }

    /// Like [`most_similar`](Self::most_similar) for a single word, but only
    /// the vocabulary indices in `candidates` are considered.
    pub fn most_similar_within(
        &self,
        word: &str,
        candidates: &[usize],
        topn: usize,
    ) -> Result<Vec<SimilarityHit>> {
        if topn == 0 {
            return Err(Error::Contract("topn must be at least 1".into()));
        }
        let i = self.lookup(word)?;
        let query: Vec<f64> = self.row_f64(i).collect();
        self.rank(&query, Some(candidates), &[i], topn)
    }

    fn rank(
        &self,
        query: &[f64],
        candidates: Option<&[usize]>,
        exclude: &[usize],
        topn: usize,
    ) -> Result<Vec<SimilarityHit>> {
        if query.len() != self.dim() {
            return Err(Error::Degenerate(format!(
                "query has dimension {}, model has {}",
                query.len(),
                self.dim()
            )));
        }
        let query_norm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        if query_norm == 0.0 || !query_norm.is_finite() {
            return Err(Error::Degenerate("query vector has zero norm".into()));
        }
        let v = self.vocab().len();
        let score = |i: usize| (self.score_against(query, query_norm, i), i);
        let mut scored: Vec<(f64, usize)> = match candidates {
            Some(c) => {
                if let Some(&bad) = c.iter().find(|&&i| i >= v) {
                    return Err(Error::Contract(format!("candidate index {bad} outside vocabulary")));
                }
                c.iter().map(|&i| score(i)).collect()
            }
            None if v * self.dim() >= PARALLEL_SCAN_WORK => (0..v).into_par_iter().map(score).collect(),
            None => (0..v).map(score).collect(),
        };
        scored.retain(|(_, i)| !exclude.contains(i));
        scored.sort_unstable_by_key(|&(_, i)| i);
        scored.dedup_by_key(|&mut (_, i)| i);

        let k = topn.min(scored.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_score_then_index);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_score_then_index);
        Ok(scored
            .into_iter()
            .map(|(score, i)| SimilarityHit {
                word: self.vocab().word(i).to_owned(),
                score,
            })
            .collect())
    }

    /// Words most similar to the mean of the query words' vectors. Query
    /// words never appear in the result.
    pub fn most_similar(&self, words: &[&str], topn: usize) -> Result<Vec<SimilarityHit>> {
        if topn == 0 {
            return Err(Error::Contract("topn must be at least 1".into()));
        }
        if words.is_empty() {
            return Err(Error::Contract("most_similar needs at least one word".into()));
        }
        let mut indices = Vec::with_capacity(words.len());
        for w in words {
            let i = self.lookup(w)?;
            if !indices.contains(&i) {
                indices.push(i);
            }
        }
        let mut query = vec![0.0; self.dim()];
        for w in words {
            for (q, x) in query.iter_mut().zip(self.row_f64(self.lookup(w)?)) {
                *q += x;
            }
        }
        let n = words.len() as f64;
        query.iter_mut().for_each(|q| *q /= n);
        self.nearest_to_vector(&query, &indices, topn)
    }

    /// Solves "`b` is to `a` as `c` is to ?": the word (other than the three
    /// inputs) closest to `vec(a) - vec(b) + vec(c)`.
    pub fn analogy(&self, a: &str, b: &str, c: &str) -> Result<SimilarityHit> {
        let (ia, ib, ic) = (self.lookup(a)?, self.lookup(b)?, self.lookup(c)?);
        let query: Vec<f64> = self
            .row_f64(ia)
            .zip(self.row_f64(ib))
            .zip(self.row_f64(ic))
            .map(|((x, y), z)| x - y + z)
            .collect();
        self.nearest_to_vector(&query, &[ia, ib, ic], 1)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Degenerate("no candidate word outside the query".into()))
    }
}
