//! Accuracy, average score difference and Kendall's tau distance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::score::Score;

/// A prediction next to its ground truth. Scores are reals so the metrics
/// also work on unrounded predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub subject: String,
    pub object: String,
    pub predicted: f64,
    pub truth: f64,
}

impl ScoredPair {
    pub fn new(subject: impl Into<String>, object: impl Into<String>, predicted: f64, truth: f64) -> Self {
        ScoredPair {
            subject: subject.into(),
            object: object.into(),
            predicted,
            truth,
        }
    }
}

fn non_empty(pairs: &[ScoredPair], metric: &str) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric(format!("{metric} of an empty set")));
    }
    Ok(())
}

/// Share of pairs predicted within ±2 of the truth.
pub fn accuracy(pairs: &[ScoredPair]) -> Result<f64> {
    non_empty(pairs, "accuracy")?;
    let hits = pairs
        .iter()
        .filter(|p| (p.predicted - p.truth).abs() <= 2.0)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Mean absolute difference between prediction and truth.
pub fn average_score_difference(pairs: &[ScoredPair]) -> Result<f64> {
    non_empty(pairs, "average score difference")?;
    let sum: f64 = pairs.iter().map(|p| (p.predicted - p.truth).abs()).sum();
    Ok(sum / pairs.len() as f64)
}

/// Share of transposed pairs per subject, averaged over subjects.
///
/// Within a subject only pairs with different truths are considered. A pair
/// counts 1 if the predictions order it the other way and 0.5 if they tie
/// it. Subjects with no such pair are left out. Lower is better.
pub fn kendall_tau(pairs: &[ScoredPair]) -> Result<f64> {
    let mut by_subject: BTreeMap<&str, Vec<&ScoredPair>> = BTreeMap::new();
    for p in pairs {
        by_subject.entry(&p.subject).or_default().push(p);
    }
    let mut total = 0.0;
    let mut subjects = 0usize;
    for group in by_subject.values() {
        let mut considered = 0usize;
        let mut transposed = 0.0;
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                if a.truth == b.truth {
                    continue;
                }
                considered += 1;
                let truth_order = a.truth < b.truth;
                if a.predicted == b.predicted {
                    transposed += 0.5;
                } else if (a.predicted < b.predicted) != truth_order {
                    transposed += 1.0;
                }
            }
        }
        if considered > 0 {
            total += transposed / considered as f64;
            subjects += 1;
        }
    }
    if subjects == 0 {
        return Err(Error::UndefinedMetric(
            "Kendall's tau needs a subject with two differently scored triples".into(),
        ));
    }
    Ok(total / subjects as f64)
}

/// Clamps a score into `2..=5`.
pub fn truncate_2_5(score: Score) -> Score {
    Score::new(score.get().clamp(2, 5)).expect("clamped into range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub average_score_difference: f64,
    /// `None` when no subject has two differently scored triples.
    pub kendall_tau: Option<f64>,
    pub n_triples: usize,
    pub n_subjects: usize,
}

pub fn evaluate(pairs: &[ScoredPair]) -> Result<EvaluationReport> {
    let kendall_tau = match kendall_tau(pairs) {
        Ok(t) => Some(t),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EvaluationReport {
        accuracy: accuracy(pairs)?,
        average_score_difference: average_score_difference(pairs)?,
        kendall_tau,
        n_triples: pairs.len(),
        n_subjects: pairs.iter().map(|p| p.subject.as_str()).collect::<BTreeSet<_>>().len(),
    })
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ACC={:.4} ASD={:.4} ", self.accuracy, self.average_score_difference)?;
        match self.kendall_tau {
            Some(t) => write!(f, "TAU={t:.4}")?,
            None => write!(f, "TAU=nan")?,
        }
        write!(f, " n_triples={} n_subjects={}", self.n_triples, self.n_subjects)
    }
}
