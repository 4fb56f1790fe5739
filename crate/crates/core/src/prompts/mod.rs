//! Caption, instruction and candidate generation through model clients.

mod candidates;
mod instructions;
mod judge;
mod llm;
mod mock;
mod triplets;
mod types;

pub use candidates::{candidate_search, CandidateRecord, CandidateSearch, CandidateSearchConfig};
pub use instructions::{
    generate_instruction, run_instruction_stages, InstructionTrace, StagePlan, STAGE_PROBABILITY,
};
pub use judge::{checked_score, JudgeClient, JUDGE_MAX, JUDGE_MIN};
pub use llm::{
    complete_structured, InstructionResponse, LlmClient, LlmExchange, LlmRequest, LlmTask, RecordingLlm,
    RetryPolicy, TripletResponse,
};
pub use mock::{split_elements, EmbeddingJudge, MockLlm};
pub use triplets::{filter_by_elements, generate_prompt_triplet, MAX_ELEMENTS};
pub use types::{CandidateConfig, PromptTriplet};
