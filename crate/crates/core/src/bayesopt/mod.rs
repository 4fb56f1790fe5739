//! Parameter search for the generative editors.

pub mod backend;
pub mod space;
pub mod study;
pub mod synthetic;
pub mod tpe;

pub use backend::{GenerateRequest, GeneratorBackend, P2PRequest, ZetaRequest};
pub use space::{P2PParams, P2PSpace, SearchSpace, ZetaParams, ZetaSpace};
pub use study::{
    best_trial, run_p2p_study, run_zeta_study, P2PStudy, StudyConfig, StudyResult, TrialOutcome, TrialParams,
    TrialRecord, ZetaStudy,
};
pub use synthetic::{make_synthetic_backend, SyntheticBackend, SyntheticProfile, P2P_OPTIMUM, ZETA_OPTIMUM};
pub use tpe::{Observation, TpeConfig, TpeSampler};
