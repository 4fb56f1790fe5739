use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

/// Sample encoding used when writing WAV files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, SampleFormat::Int),
            WavEncoding::Pcm24 => (24, SampleFormat::Int),
            WavEncoding::Float32 => (32, SampleFormat::Float),
        };
        WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Header facts of a WAV file, read without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: usize,
    pub frames: u64,
}

impl WavInfo {
    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }
}

pub fn probe_wav(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| match map_hound(e) {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    let spec = reader.spec();
    Ok(WavInfo {
        sample_rate: spec.sample_rate,
        channels: spec.channels as usize,
        frames: reader.duration() as u64,
    })
}

/// Decodes an in-memory RIFF/WAVE payload.
pub fn read_wav(bytes: &[u8]) -> Result<AudioClip> {
    decode(Cursor::new(bytes))
}

fn decode<R: Read>(reader: R) -> Result<AudioClip> {
    let reader = WavReader::new(reader).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::Unsupported(format!("{} channels", spec.channels)));
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        (format, bits) => {
            return Err(Error::Unsupported(format!("{bits}-bit {format:?} samples")));
        }
    };
    let n = spec.channels as usize;
    if interleaved.len() % n != 0 {
        return Err(Error::Format("data chunk ends mid-frame".into()));
    }
    let frames = interleaved.len() / n;
    let mut channels = vec![Vec::with_capacity(frames); n];
    for frame in interleaved.chunks_exact(n) {
        for (c, &s) in channels.iter_mut().zip(frame) {
            c.push(s);
        }
    }
    AudioClip::new(channels, spec.sample_rate)
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        // hound reports short reads as `Other`.
        hound::Error::IoError(io)
            if matches!(io.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::Format("truncated data chunk".into())
        }
        hound::Error::IoError(io) => Error::Io {
            path: Default::default(),
            source: io,
        },
        hound::Error::FormatError(msg) => Error::Format(msg.into()),
        hound::Error::Unsupported => Error::Unsupported("wave feature not supported".into()),
        hound::Error::TooWide | hound::Error::InvalidSampleFormat => {
            Error::Unsupported("sample format".into())
        }
        hound::Error::UnfinishedSample => Error::Format("unfinished sample".into()),
    }
}

/// Writes `clip` as 16-bit PCM.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    save_wav_with(clip, path, WavEncoding::Pcm16)
}

pub fn save_wav_with(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    encode(clip, std::io::BufWriter::new(file), encoding).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Encodes `clip` into an in-memory WAV payload.
pub fn write_wav(clip: &AudioClip, encoding: WavEncoding) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    encode(clip, &mut cursor, encoding)?;
    Ok(cursor.into_inner())
}

fn encode<W: Write + Seek>(clip: &AudioClip, writer: W, encoding: WavEncoding) -> Result<()> {
    let spec = encoding.spec(clip.num_channels() as u16, clip.sample_rate());
    let mut w = WavWriter::new(writer, spec).map_err(map_hound)?;
    for i in 0..clip.len() {
        for c in clip.channels() {
            let s = c[i];
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    w.write_sample(v).map_err(map_hound)?;
                }
                WavEncoding::Pcm24 => {
                    let v = (s as f64 * 8_388_608.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32;
                    w.write_sample(v).map_err(map_hound)?;
                }
                WavEncoding::Float32 => w.write_sample(s).map_err(map_hound)?,
            }
        }
    }
    w.finalize().map_err(map_hound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn silence_round_trips() {
        let clip = AudioClip::silence(2, 44_100, 44_100).unwrap();
        let bytes = write_wav(&clip, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&bytes).unwrap();
        assert_eq!(back.len(), 44_100);
        assert_eq!(back.num_channels(), 2);
        assert!(back.is_silent());
    }

    #[test]
    fn most_negative_pcm16_is_minus_one() {
        let spec = WavEncoding::Pcm16.spec(1, 8000);
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            w.write_sample(i16::MIN).unwrap();
            w.write_sample(16384i16).unwrap();
            w.finalize().unwrap();
        }
        let clip = read_wav(cursor.get_ref()).unwrap();
        assert_eq!(clip.channel(0), &[-1.0, 0.5]);
    }

    #[test]
    fn truncated_data_is_a_format_error() {
        let clip = AudioClip::silence(2, 8000, 1000).unwrap();
        let mut bytes = write_wav(&clip, WavEncoding::Pcm16).unwrap();
        bytes.truncate(bytes.len() - 101);
        let r = read_wav(&bytes);
        assert!(matches!(r, Err(Error::Format(_))), "{r:?}");
    }

    #[test]
    fn garbage_header_is_a_format_error() {
        assert!(matches!(read_wav(b"RIFX0000WAVEjunk"), Err(Error::Format(_))));
    }

    #[test]
    fn eight_bit_pcm_is_unsupported() {
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            w.write_sample(3i8).unwrap();
            w.finalize().unwrap();
        }
        assert!(matches!(read_wav(cursor.get_ref()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn noise_round_trip_within_one_lsb() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = crate::audio::synth::white_noise(0.25, 0.5, 44_100, 2, &mut rng)
            .map_samples(|s| s.clamp(-1.0, 1.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noise.wav");
        save_wav(&noise, &path).unwrap();
        let back = load_wav(&path).unwrap();
        let max_err = noise
            .channels()
            .iter()
            .flatten()
            .zip(back.channels().iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 2f32.powi(-15), "max error {max_err}");
    }

    #[test]
    fn mono_and_float_encodings() {
        let clip = AudioClip::mono(vec![0.25, -0.5, 0.125], 22_050).unwrap();
        for enc in [WavEncoding::Pcm16, WavEncoding::Pcm24, WavEncoding::Float32] {
            let back = read_wav(&write_wav(&clip, enc).unwrap()).unwrap();
            assert_eq!(back.num_channels(), 1);
            assert_eq!(back, clip);
        }
    }

    #[test]
    fn saving_to_a_directory_fails_with_io() {
        let dir = tempfile::tempdir().unwrap();
        let clip = AudioClip::silence(1, 8000, 10).unwrap();
        assert!(matches!(save_wav(&clip, dir.path()), Err(Error::Io { .. })));
    }
}
