use std::path::{Path, PathBuf};

use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::audio::{write_wav, AudioClip, WavEncoding, DATASET_CHANNELS, DATASET_SAMPLE_RATE};
use crate::error::{Error, Result};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Stores `clip` as 16-bit WAV under `dir/<sha256>.wav` and returns the
/// file name. Identical audio maps to the same file and is written once.
pub fn store_audio(dir: &Path, clip: &AudioClip) -> Result<PathBuf> {
    if clip.sample_rate() != DATASET_SAMPLE_RATE || clip.num_channels() != DATASET_CHANNELS {
        return Err(Error::Validation(format!(
            "dataset audio must be {DATASET_SAMPLE_RATE} Hz with {DATASET_CHANNELS} channels, got {} Hz / {}",
            clip.sample_rate(),
            clip.num_channels()
        )));
    }
    let bytes = write_wav(clip, WavEncoding::Pcm16)?;
    let name = PathBuf::from(format!("{}.wav", sha256_hex(&bytes)));
    let path = dir.join(&name);
    if !path.exists() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = dir.join(format!(".{}.{}.{n}.tmp", sha256_hex(&bytes), std::process::id()));
        std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    }
    Ok(name)
}
