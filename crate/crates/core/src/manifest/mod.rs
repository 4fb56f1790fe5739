//! Line-delimited triplet manifests: appending, assembly and integrity checks.
//!
//! Each line is one JSON-encoded [`TripletRecord`]. WAV paths are relative
//! to the manifest's directory unless absolute.

mod assemble;
mod io;
mod record;
mod stats;
mod storage;
mod verify;

pub use assemble::{assemble, assemble_files, DatasetSpec};
pub use io::{append_record, read_manifest, read_manifest_lenient, recover_manifest, write_manifest, BadLine};
pub(crate) use io::truncate_partial_tail;
pub use record::{now_unix_ms, Method, TripletRecord};
pub use stats::{manifest_stats, ManifestStats};
pub use storage::{sha256_hex, store_audio};
pub use verify::{
    check_record_files, verify, IntegrityFailure, IntegrityReport, CHECK_DURATION, CHECK_FIELDS, CHECK_FORMAT,
    CHECK_PARSE, CHECK_PROVENANCE, CHECK_READABLE, CHECK_UNIQUE_ID,
};
