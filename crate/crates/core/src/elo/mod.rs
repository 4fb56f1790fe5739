//! Pairwise listening studies ranked with Elo ratings, plus MOS collection.

mod rating;
mod store;
mod study;

pub use rating::{elo_update, expected_score, EloConfig, Verdict};
pub use store::{read_events, StudyStore};
pub use study::{
    Comparison, Contender, ContenderSpec, EloStudy, MeanStd, MosAggregate, MosRating, MosScores, StudyDefinition,
    StudyEvent, StudySample,
};

/// Guidance shown to listeners, one entry per rated aspect.
pub const RATING_GUIDE: [(&str, &str); 3] = [
    ("quality", "How clean and natural the edited clip sounds, ignoring the instruction."),
    ("relevance", "How completely the edited clip carries out the written instruction."),
    ("faithfulness", "How well the parts of the input that the instruction leaves alone are kept intact."),
];
