use crate::score::Score;

/// A (person, value) fact, optionally with its relevance score.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: String,
    pub value: String,
    pub score: Option<Score>,
}

impl Triple {
    pub fn new(subject: impl Into<String>, value: impl Into<String>, score: Option<Score>) -> Self {
        Triple {
            subject: subject.into(),
            value: value.into(),
            score,
        }
    }

    pub fn scored(subject: impl Into<String>, value: impl Into<String>, score: Score) -> Self {
        Triple::new(subject, value, Some(score))
    }
}
