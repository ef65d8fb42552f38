//! Corpus loading and validation: manifests that bind utterances to
//! speakers, systems, MOS labels and splits, plus 16-bit PCM WAV decoding.
//!
//! The manifest is UTF-8 comma-separated text with the fixed header
//! `utt_id,speaker_id,system_id,mos,split,audio_path` and LF line endings.
//! Fields may not contain commas; there is no quoting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

/// Expected manifest header, in order.
pub const MANIFEST_HEADER: &str = "utt_id,speaker_id,system_id,mos,split,audio_path";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest header mismatch: expected `{MANIFEST_HEADER}`, got `{got}`")]
    BadHeader { got: String },
    #[error("manifest line {line}: expected 6 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("manifest line {line}: empty utt_id")]
    EmptyUttId { line: usize },
    #[error("duplicate utt_id `{utt_id}` (line {line})")]
    DuplicateUttId { utt_id: String, line: usize },
    #[error("utterance `{utt_id}`: mos {mos} outside [{min}, {max}]")]
    MosOutOfRange {
        utt_id: String,
        mos: f64,
        min: f64,
        max: f64,
    },
    #[error("utterance `{utt_id}`: unparseable mos `{text}`")]
    BadMos { utt_id: String, text: String },
    #[error("utterance `{utt_id}`: unknown split `{token}` (expected train, val or test)")]
    BadSplit { utt_id: String, token: String },
    #[error("invalid scale: scale_min {min} must be < scale_max {max}")]
    BadScale { min: f64, max: f64 },
    #[error("wav {path}: not a RIFF/WAVE file")]
    NotRiff { path: String },
    #[error("wav {path}: unsupported format tag {tag} (only PCM = 1)")]
    NotPcm { path: String, tag: u16 },
    #[error("wav {path}: {channels} channels (only mono accepted, no downmix)")]
    Multichannel { path: String, channels: u16 },
    #[error("wav {path}: {bits} bits per sample (only 16 accepted)")]
    BadBitDepth { path: String, bits: u16 },
    #[error("wav {path}: truncated or malformed ({detail})")]
    MalformedWav { path: String, detail: String },
    #[error("audio sample {value} outside [-1, 1]")]
    SampleOutOfRange { value: f64 },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

/// Which partition an utterance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn parse(token: &str) -> Option<Split> {
        match token {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One manifest row: an utterance with its speaker, system, optional MOS
/// label, split assignment and audio location (relative path).
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub speaker_id: String,
    pub system_id: String,
    /// Absent for unlabeled utterances.
    pub mos: Option<f64>,
    pub split: Split,
    pub audio_path: String,
}

/// A validated corpus manifest. `scale_min`/`scale_max` bound every MOS
/// label present in `records`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub records: Vec<UtteranceRecord>,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl CorpusManifest {
    /// Builds a manifest from records, enforcing utt_id uniqueness and the
    /// MOS scale bounds.
    pub fn new(
        records: Vec<UtteranceRecord>,
        scale_min: f64,
        scale_max: f64,
    ) -> Result<CorpusManifest, CorpusError> {
        if !(scale_min < scale_max) {
            return Err(CorpusError::BadScale {
                min: scale_min,
                max: scale_max,
            });
        }
        let mut seen = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.utt_id.is_empty() {
                return Err(CorpusError::EmptyUttId { line: i + 2 });
            }
            if !seen.insert(r.utt_id.as_str()) {
                return Err(CorpusError::DuplicateUttId {
                    utt_id: r.utt_id.clone(),
                    line: i + 2,
                });
            }
            if let Some(m) = r.mos {
                if !(m >= scale_min && m <= scale_max) {
                    return Err(CorpusError::MosOutOfRange {
                        utt_id: r.utt_id.clone(),
                        mos: m,
                        min: scale_min,
                        max: scale_max,
                    });
                }
            }
        }
        Ok(CorpusManifest {
            records,
            scale_min,
            scale_max,
        })
    }

    /// Records belonging to `split`.
    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &UtteranceRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Record lookup by utterance id.
    pub fn find(&self, utt_id: &str) -> Option<&UtteranceRecord> {
        self.records.iter().find(|r| r.utt_id == utt_id)
    }
}

/// Decoded mono audio, samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<AudioBuffer, CorpusError> {
        if sample_rate == 0 {
            return Err(CorpusError::ZeroSampleRate);
        }
        for &s in &samples {
            if !(-1.0..=1.0).contains(&s) {
                return Err(CorpusError::SampleOutOfRange { value: s });
            }
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }
}

/// Loads and validates a manifest file. Empty `mos` fields parse to an
/// absent label; every rejected row is reported with its utt_id or line
/// number.
pub fn load_manifest(
    path: &Path,
    scale_min: f64,
    scale_max: f64,
) -> Result<CorpusManifest, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text, scale_min, scale_max)
}

/// Parses manifest text (see [`MANIFEST_HEADER`] for the expected layout).
pub fn parse_manifest(
    text: &str,
    scale_min: f64,
    scale_max: f64,
) -> Result<CorpusManifest, CorpusError> {
    if !(scale_min < scale_max) {
        return Err(CorpusError::BadScale {
            min: scale_min,
            max: scale_max,
        });
    }
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != MANIFEST_HEADER {
        return Err(CorpusError::BadHeader {
            got: header.to_string(),
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CorpusError::FieldCount {
                line: line_no,
                got: fields.len(),
            });
        }
        let utt_id = fields[0].to_string();
        if utt_id.is_empty() {
            return Err(CorpusError::EmptyUttId { line: line_no });
        }
        let mos = if fields[3].is_empty() {
            None
        } else {
            let m: f64 = fields[3].parse().map_err(|_| CorpusError::BadMos {
                utt_id: utt_id.clone(),
                text: fields[3].to_string(),
            })?;
            Some(m)
        };
        let split = Split::parse(fields[4]).ok_or_else(|| CorpusError::BadSplit {
            utt_id: utt_id.clone(),
            token: fields[4].to_string(),
        })?;
        records.push(UtteranceRecord {
            utt_id,
            speaker_id: fields[1].to_string(),
            system_id: fields[2].to_string(),
            mos,
            split,
            audio_path: fields[5].to_string(),
        });
    }
    CorpusManifest::new(records, scale_min, scale_max)
}

/// Serializes a manifest back to its text form. `load` of the written text
/// is the identity on valid manifests.
pub fn manifest_to_string(manifest: &CorpusManifest) -> String {
    let mut out = String::with_capacity(64 * (manifest.records.len() + 1));
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for r in &manifest.records {
        let mos = match r.mos {
            Some(m) => format!("{m}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.utt_id, r.speaker_id, r.system_id, mos, r.split, r.audio_path
        ));
    }
    out
}

/// Writes a manifest file (LF endings).
pub fn write_manifest(path: &Path, manifest: &CorpusManifest) -> Result<(), CorpusError> {
    fs::write(path, manifest_to_string(manifest)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Lists speakers that appear in more than one split, sorted. An empty
/// report means train/val/test speaker sets are pairwise disjoint; overlap
/// is a warning, not an error.
pub fn validate_speaker_disjointness(manifest: &CorpusManifest) -> Vec<String> {
    let mut splits_by_speaker: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
    for r in &manifest.records {
        splits_by_speaker
            .entry(r.speaker_id.as_str())
            .or_default()
            .insert(r.split);
    }
    splits_by_speaker
        .into_iter()
        .filter(|(_, splits)| splits.len() > 1)
        .map(|(speaker, _)| speaker.to_string())
        .collect()
}

fn read_u32_le(buf: &[u8], at: usize) -> Option<u32> {
    buf.get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn read_u16_le(buf: &[u8], at: usize) -> Option<u16> {
    buf.get(at..at + 2).map(|b| u16::from_le_bytes([b[0], b[1]]))
}

/// Reads a RIFF/WAVE file: PCM (format tag 1), 16-bit, mono,
/// little-endian. Sample value `s` maps to `s / 32768`.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, CorpusError> {
    let p = path.display().to_string();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| CorpusError::Io {
            path: p.clone(),
            source,
        })?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(CorpusError::NotRiff { path: p });
    }

    let malformed = |detail: &str| CorpusError::MalformedWav {
        path: p.clone(),
        detail: detail.to_string(),
    };

    // Walk chunks; fmt must precede data.
    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // tag, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32_le(&bytes, pos + 4).ok_or_else(|| malformed("chunk size"))? as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed("chunk overruns file"))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                let tag = read_u16_le(&bytes, body_start).unwrap();
                let channels = read_u16_le(&bytes, body_start + 2).unwrap();
                let rate = read_u32_le(&bytes, body_start + 4).unwrap();
                let bits = read_u16_le(&bytes, body_start + 14).unwrap();
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => {
                data = Some(&bytes[body_start..body_end]);
            }
            _ => {}
        }
        // Chunks are word-aligned: odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let (tag, channels, rate, bits) = fmt.ok_or_else(|| malformed("missing fmt chunk"))?;
    if tag != 1 {
        return Err(CorpusError::NotPcm { path: p, tag });
    }
    if channels != 1 {
        return Err(CorpusError::Multichannel { path: p, channels });
    }
    if bits != 16 {
        return Err(CorpusError::BadBitDepth { path: p, bits });
    }
    if rate == 0 {
        return Err(CorpusError::ZeroSampleRate);
    }
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(malformed("odd data chunk length"));
    }
    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok(AudioBuffer {
        samples,
        sample_rate: rate,
    })
}

/// Writes a 16-bit PCM mono WAV. Sample `s` is stored as
/// `round(s * 32768)` clamped to the i16 range, the inverse of
/// [`read_wav`]'s scaling.
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<(), CorpusError> {
    let p = path.display().to_string();
    let n = audio.samples.len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate.to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    for &s in &audio.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| CorpusError::Io { path: p, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(utt: &str, speaker: &str, split: Split, mos: Option<f64>) -> UtteranceRecord {
        UtteranceRecord {
            utt_id: utt.to_string(),
            speaker_id: speaker.to_string(),
            system_id: "sys0".to_string(),
            mos,
            split,
            audio_path: format!("audio/{utt}.wav"),
        }
    }

    #[test]
    fn parses_well_formed_manifest() {
        let text = "utt_id,speaker_id,system_id,mos,split,audio_path\n\
                    u1,a,s1,5,train,audio/u1.wav\n\
                    u2,a,s1,7.5,val,audio/u2.wav\n\
                    u3,b,s2,,test,audio/u3.wav\n";
        let m = parse_manifest(text, 1.0, 10.0).unwrap();
        assert_eq!(m.records.len(), 3);
        assert_eq!(m.records[0].mos, Some(5.0));
        assert_eq!(m.records[2].mos, None);
        assert_eq!(m.records[2].split, Split::Test);
    }

    #[test]
    fn rejects_mos_out_of_range_naming_utterance() {
        let text = "utt_id,speaker_id,system_id,mos,split,audio_path\n\
                    u1,a,s1,11,train,audio/u1.wav\n";
        let err = parse_manifest(text, 1.0, 10.0).unwrap_err();
        match err {
            CorpusError::MosOutOfRange { utt_id, mos, .. } => {
                assert_eq!(utt_id, "u1");
                assert_eq!(mos, 11.0);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_duplicate_utt_id() {
        let text = "utt_id,speaker_id,system_id,mos,split,audio_path\n\
                    u1,a,s1,5,train,audio/u1.wav\n\
                    u1,b,s1,6,train,audio/u1b.wav\n";
        let err = parse_manifest(text, 1.0, 10.0).unwrap_err();
        match err {
            CorpusError::DuplicateUttId { utt_id, line } => {
                assert_eq!(utt_id, "u1");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_unknown_split_and_missing_column() {
        let bad_split = "utt_id,speaker_id,system_id,mos,split,audio_path\n\
                         u1,a,s1,5,dev,audio/u1.wav\n";
        assert!(matches!(
            parse_manifest(bad_split, 1.0, 10.0),
            Err(CorpusError::BadSplit { .. })
        ));
        let bad_header = "utt_id,speaker_id,mos,split,audio_path\nu1,a,5,train,u1.wav\n";
        assert!(matches!(
            parse_manifest(bad_header, 1.0, 10.0),
            Err(CorpusError::BadHeader { .. })
        ));
        let short_row = "utt_id,speaker_id,system_id,mos,split,audio_path\nu1,a,s1,5,train\n";
        assert!(matches!(
            parse_manifest(short_row, 1.0, 10.0),
            Err(CorpusError::FieldCount { line: 2, got: 5 })
        ));
    }

    #[test]
    fn scale_bounds_are_configurable() {
        let text = "utt_id,speaker_id,system_id,mos,split,audio_path\n\
                    u1,a,s1,4.5,train,audio/u1.wav\n";
        assert!(parse_manifest(text, 1.0, 5.0).is_ok());
        assert!(matches!(
            parse_manifest(text, 1.0, 4.0),
            Err(CorpusError::MosOutOfRange { .. })
        ));
        assert!(matches!(
            parse_manifest(text, 5.0, 5.0),
            Err(CorpusError::BadScale { .. })
        ));
    }

    #[test]
    fn manifest_round_trip_is_identity() {
        let m = CorpusManifest::new(
            vec![
                record("u1", "a", Split::Train, Some(5.0)),
                record("u2", "a", Split::Val, Some(7.25)),
                record("u3", "b", Split::Test, None),
                record("u4", "c", Split::Test, Some(9.999)),
            ],
            1.0,
            10.0,
        )
        .unwrap();
        let text = manifest_to_string(&m);
        let back = parse_manifest(&text, 1.0, 10.0).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn disjointness_report_lists_overlapping_speakers() {
        let m = CorpusManifest::new(
            vec![
                record("u1", "a", Split::Train, None),
                record("u2", "b", Split::Train, None),
                record("u3", "c", Split::Val, None),
                record("u4", "d", Split::Test, None),
            ],
            1.0,
            10.0,
        )
        .unwrap();
        assert!(validate_speaker_disjointness(&m).is_empty());

        let overlap = CorpusManifest::new(
            vec![
                record("u1", "a", Split::Train, None),
                record("u2", "a", Split::Test, None),
                record("u3", "b", Split::Val, None),
            ],
            1.0,
            10.0,
        )
        .unwrap();
        assert_eq!(validate_speaker_disjointness(&overlap), vec!["a"]);
    }

    #[test]
    fn disjointness_on_empty_manifest_is_empty() {
        let m = CorpusManifest::new(vec![], 1.0, 10.0).unwrap();
        assert!(validate_speaker_disjointness(&m).is_empty());
    }

    fn wav_bytes(samples: &[i16], channels: u16, bits: u16, tag: u16) -> Vec<u8> {
        let data_bytes = (samples.len() * 2) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&16000u32.to_le_bytes());
        out.extend_from_slice(&(16000u32 * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_bytes.to_le_bytes());
        for s in samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    #[test]
    fn wav_scaling_convention() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        fs::write(&path, wav_bytes(&[0x7FFF, -0x8000, 0], 1, 16, 1)).unwrap();
        let audio = read_wav(&path).unwrap();
        assert_eq!(audio.sample_rate, 16000);
        assert_eq!(audio.samples[0], 32767.0 / 32768.0);
        assert_eq!(audio.samples[1], -1.0);
        assert_eq!(audio.samples[2], 0.0);
    }

    #[test]
    fn wav_rejects_stereo_float_and_8bit() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("stereo.wav");
        fs::write(&stereo, wav_bytes(&[0, 0], 2, 16, 1)).unwrap();
        assert!(matches!(
            read_wav(&stereo),
            Err(CorpusError::Multichannel { channels: 2, .. })
        ));

        let float = dir.path().join("float.wav");
        fs::write(&float, wav_bytes(&[0], 1, 16, 3)).unwrap();
        assert!(matches!(
            read_wav(&float),
            Err(CorpusError::NotPcm { tag: 3, .. })
        ));

        let eight = dir.path().join("eight.wav");
        fs::write(&eight, wav_bytes(&[0], 1, 8, 1)).unwrap();
        assert!(matches!(
            read_wav(&eight),
            Err(CorpusError::BadBitDepth { bits: 8, .. })
        ));
    }

    #[test]
    fn wav_rejects_non_riff_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.wav");
        fs::write(&bad, b"OggS aint a wav").unwrap();
        assert!(matches!(read_wav(&bad), Err(CorpusError::NotRiff { .. })));

        let mut bytes = wav_bytes(&[1, 2, 3, 4], 1, 16, 1);
        bytes.truncate(bytes.len() - 3);
        let trunc = dir.path().join("trunc.wav");
        fs::write(&trunc, bytes).unwrap();
        assert!(matches!(
            read_wav(&trunc),
            Err(CorpusError::MalformedWav { .. })
        ));
    }

    #[test]
    fn wav_length_matches_data_chunk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("len.wav");
        let samples: Vec<i16> = (0..777).map(|i| (i % 100) as i16).collect();
        fs::write(&path, wav_bytes(&samples, 1, 16, 1)).unwrap();
        let audio = read_wav(&path).unwrap();
        // data chunk holds 2 bytes per sample
        assert_eq!(audio.samples.len(), 777);
    }

    #[test]
    fn wav_write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let samples: Vec<f64> = (0..512)
            .map(|i| ((i as f64) * 0.013).sin() * 0.8)
            .collect();
        let audio = AudioBuffer::new(samples, 16000).unwrap();
        write_wav(&path, &audio).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 16000);
        assert_eq!(back.samples.len(), audio.samples.len());
        for (a, b) in audio.samples.iter().zip(&back.samples) {
            // one quantization step of 16-bit PCM
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn audio_buffer_validates_range_and_rate() {
        assert!(AudioBuffer::new(vec![0.0, 1.0, -1.0], 8000).is_ok());
        assert!(matches!(
            AudioBuffer::new(vec![1.1], 8000),
            Err(CorpusError::SampleOutOfRange { .. })
        ));
        assert!(matches!(
            AudioBuffer::new(vec![0.0], 0),
            Err(CorpusError::ZeroSampleRate)
        ));
    }
}
