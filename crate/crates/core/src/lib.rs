pub mod audio;
pub mod bayesopt;
pub mod dsp;
pub mod edits;
pub mod elo;
pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod manifest;
pub mod objective;
pub mod pipeline;
pub mod prompts;
pub mod remote;

pub use error::{Error, Result};
