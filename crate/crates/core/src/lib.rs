//! Relevance scoring for type-like knowledge-base relations.
//!
//! Given a corpus of sentences with entity annotations, `kbscore` trains
//! CBOW word embeddings, spreads known person–profession scores to
//! embedding neighbors, scores nationalities from per-person documents, and
//! evaluates predictions on the 0–7 relevance scale.
//!
//! ```
//! use kbscore::profession::{normalize_score, ScoredEvidence};
//!
//! let evidence = [
//!     ScoredEvidence::new(7.0, 0.9)?,
//!     ScoredEvidence::new(5.0, 0.6)?,
//! ];
//! let n = normalize_score(&evidence)?;
//! assert_eq!(n.score.get(), 6);
//! # Ok::<(), kbscore::Error>(())
//! ```

pub mod corpus;
pub mod embedding;
mod error;
pub mod metrics;
pub mod nationality;
pub mod profession;
mod score;
mod triple;

pub use error::{Error, Result};
pub use score::{round_half_away, Score, MAX_SCORE};
pub use triple::Triple;
