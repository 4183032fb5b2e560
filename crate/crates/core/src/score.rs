//! The 0–7 relevance scale shared by every relation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Highest relevance a triple can receive (seven judges, one vote each).
pub const MAX_SCORE: u8 = 7;

/// An integer relevance score in `0..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(u8);

impl Score {
    pub const MIN: Score = Score(0);
    pub const MAX: Score = Score(MAX_SCORE);

    pub fn new(value: u8) -> Result<Self> {
        if value > MAX_SCORE {
            return Err(Error::Contract(format!(
                "score {value} outside 0..={MAX_SCORE}"
            )));
        }
        Ok(Score(value))
    }

    /// Rounds a real value to the nearest integer (halves away from zero)
    /// and clamps it onto the scale.
    pub fn from_real(value: f64) -> Self {
        let rounded = round_half_away(value);
        Score(rounded.clamp(0.0, MAX_SCORE as f64) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<i64> for Score {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        u8::try_from(value)
            .map_err(|_| Error::Contract(format!("score {value} outside 0..={MAX_SCORE}")))
            .and_then(Score::new)
    }
}

impl FromStr for Score {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value: i64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Contract(format!("score {s:?} is not an integer")))?;
        Score::try_from(value)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Nearest integer, halves rounded away from zero (6.5 → 7, −6.5 → −7).
pub fn round_half_away(value: f64) -> f64 {
    value.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_halves_go_up() {
        assert_eq!(Score::from_real(6.5).get(), 7);
        assert_eq!(Score::from_real(6.4999).get(), 6);
        assert_eq!(Score::from_real(3.5).get(), 4);
        assert_eq!(round_half_away(-2.5), -3.0);
    }

    #[test]
    fn from_real_clamps() {
        assert_eq!(Score::from_real(9.2), Score::MAX);
        assert_eq!(Score::from_real(-1.0), Score::MIN);
    }

    #[test]
    fn parse_rejects_out_of_range() {
        assert_eq!("7".parse::<Score>().unwrap().get(), 7);
        assert!("8".parse::<Score>().is_err());
        assert!("-1".parse::<Score>().is_err());
        assert!("x".parse::<Score>().is_err());
    }
}
