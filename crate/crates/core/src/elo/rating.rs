use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub k: f64,
    pub initial_rating: f64,
    pub allow_ties: bool,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self { k: 32.0, initial_rating: 1000.0, allow_ties: true }
    }
}

impl EloConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0 && self.initial_rating.is_finite()) {
            return Err(Error::Config(format!("invalid elo config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    A,
    B,
    Tie,
}

impl Verdict {
    /// Score of contender A.
    pub fn score_a(self) -> f64 {
        match self {
            Verdict::A => 1.0,
            Verdict::B => 0.0,
            Verdict::Tie => 0.5,
        }
    }
}

/// Expected score of a player rated `r` against `opponent`.
pub fn expected_score(r: f64, opponent: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((opponent - r) / 400.0))
}

/// New `(a, b)` ratings after one game. The update is zero-sum.
pub fn elo_update(a: f64, b: f64, verdict: Verdict, k: f64) -> (f64, f64) {
    let delta = k * (verdict.score_a() - expected_score(a, b));
    (a + delta, b - delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_win() {
        assert_eq!(elo_update(1000.0, 1000.0, Verdict::A, 32.0), (1016.0, 984.0));
        assert_eq!(elo_update(1000.0, 1000.0, Verdict::Tie, 32.0), (1000.0, 1000.0));
    }

    #[test]
    fn underdog_gains_more() {
        let (a, _) = elo_update(1000.0, 1200.0, Verdict::A, 32.0);
        assert!(a - 1000.0 > 16.0);
    }
}
