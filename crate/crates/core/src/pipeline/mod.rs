//! End-to-end flows that turn a captioned corpus into manifest records.

mod corpus;
mod flows;
mod manual;
mod seeds;

pub use corpus::{apply_split, check_disjoint, load_corpus, load_split, CorpusEntry};
pub use flows::{
    generate_prompts, optimize_ddpm, optimize_p2p, read_jsonl, run_candidate_search, study_log_path, write_jsonl,
    CandidateEntry, ItemFailure, PromptEntry, PromptSummary, StudyLog, StudySummary, CANDIDATE_STAGE, DDPM_STAGE,
    P2P_STAGE,
};
pub use manual::{make_manual, manual_record_id, ManualOptions, ManualSummary, SampleIssue, MANUAL_STAGE};
pub use seeds::{derive_seed, item_rng, stage_rng};
