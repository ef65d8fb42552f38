//! Model inputs: magnitude-spectrogram frame matrices computed from audio,
//! and fixed-dimension utterance embeddings loaded from files. Both persist
//! in a bit-exact little-endian binary format (magic `FEAT`).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::corpus::AudioBuffer;

const MAGIC: &[u8; 4] = b"FEAT";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty feature matrix (rows and cols must be >= 1)")]
    EmptyMatrix,
    #[error("data length {got} does not match rows*cols = {expected}")]
    DataLength { got: usize, expected: usize },
    #[error("embedding matrices must have exactly 1 column, got {cols}")]
    EmbeddingCols { cols: usize },
    #[error("non-finite feature value at index {index}")]
    NonFinite { index: usize },
    #[error("invalid stft config: hop {hop} must satisfy 0 < hop <= fft_size {fft_size}")]
    BadHop { hop: usize, fft_size: usize },
    #[error("invalid stft config: fft_size {0} must be a power of two")]
    FftNotPowerOfTwo(usize),
    #[error("audio has {samples} samples, shorter than one frame of {fft_size}")]
    AudioTooShort { samples: usize, fft_size: usize },
    #[error("{path}: bad magic (not a feature file)")]
    BadMagic { path: String },
    #[error("{path}: unsupported feature format version {got}")]
    BadVersion { path: String, got: u32 },
    #[error("{path}: unknown feature kind byte {got}")]
    BadKind { path: String, got: u8 },
    #[error("{path}: truncated feature file ({detail})")]
    Truncated { path: String, detail: String },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected kind {expected:?}, got {got:?}")]
    KindMismatch {
        expected: FeatureKind,
        got: FeatureKind,
    },
    #[error("cannot fit normalizer: matrices disagree on kind")]
    MixedKinds,
    #[error("cannot fit normalizer: column counts differ ({a} vs {b})")]
    MixedCols { a: usize, b: usize },
    #[error("cannot fit normalizer: need at least 2 total rows, got {0}")]
    TooFewRows(usize),
    #[error("normalizer has {expected} columns but matrix has {got}")]
    NormalizerCols { expected: usize, got: usize },
}

/// What a [`FeatureMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// T x F frame matrix of linear magnitudes.
    Spectrogram,
    /// D x 1 fixed-dimension utterance embedding.
    Embedding,
}

impl FeatureKind {
    fn to_byte(self) -> u8 {
        match self {
            FeatureKind::Spectrogram => 0,
            FeatureKind::Embedding => 1,
        }
    }

    fn from_byte(b: u8) -> Option<FeatureKind> {
        match b {
            0 => Some(FeatureKind::Spectrogram),
            1 => Some(FeatureKind::Embedding),
            _ => None,
        }
    }
}

/// Row-major real matrix used as model input. All entries finite; internal
/// precision is f64, persisted as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        kind: FeatureKind,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<FeatureMatrix, FeatureError> {
        if rows == 0 || cols == 0 {
            return Err(FeatureError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(FeatureError::DataLength {
                got: data.len(),
                expected: rows * cols,
            });
        }
        if kind == FeatureKind::Embedding && cols != 1 {
            return Err(FeatureError::EmbeddingCols { cols });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { index });
        }
        Ok(FeatureMatrix {
            kind,
            rows,
            cols,
            data,
        })
    }

    /// D x 1 embedding from a plain vector.
    pub fn embedding(values: Vec<f64>) -> Result<FeatureMatrix, FeatureError> {
        let rows = values.len();
        FeatureMatrix::new(FeatureKind::Embedding, rows, 1, values)
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    Hamming,
    Rect,
}

impl WindowKind {
    pub fn parse(token: &str) -> Option<WindowKind> {
        match token {
            "hann" => Some(WindowKind::Hann),
            "hamming" => Some(WindowKind::Hamming),
            "rect" => Some(WindowKind::Rect),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rect => "rect",
        }
    }
}

/// Short-time analysis parameters. Defaults follow the conventional
/// 512/256/Hann setup with linear magnitudes; `log_compress` switches to
/// `ln(1 + m)` compression and is off by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    pub log_compress: bool,
}

impl Default for StftConfig {
    fn default() -> StftConfig {
        StftConfig {
            fft_size: 512,
            hop: 256,
            window: WindowKind::Hann,
            log_compress: false,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !self.fft_size.is_power_of_two() || self.fft_size == 0 {
            return Err(FeatureError::FftNotPowerOfTwo(self.fft_size));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(FeatureError::BadHop {
                hop: self.hop,
                fft_size: self.fft_size,
            });
        }
        Ok(())
    }

    /// Number of frequency bins in the one-sided spectrum.
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for `n` samples: `1 + floor((n - fft_size) / hop)`.
    pub fn n_frames(&self, n: usize) -> Option<usize> {
        if n < self.fft_size {
            None
        } else {
            Some(1 + (n - self.fft_size) / self.hop)
        }
    }
}

fn window_values(kind: WindowKind, n: usize) -> Vec<f64> {
    match kind {
        WindowKind::Rect => vec![1.0; n],
        WindowKind::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
        WindowKind::Hamming => (0..n)
            .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

/// Sliding-window magnitude spectrogram: T x (fft_size/2 + 1) linear
/// magnitudes of the one-sided spectrum, stride `hop`, no padding.
pub fn stft_magnitude(
    audio: &AudioBuffer,
    cfg: &StftConfig,
) -> Result<FeatureMatrix, FeatureError> {
    cfg.validate()?;
    let n = audio.samples.len();
    let frames = cfg.n_frames(n).ok_or(FeatureError::AudioTooShort {
        samples: n,
        fft_size: cfg.fft_size,
    })?;
    let bins = cfg.n_bins();
    let window = window_values(cfg.window, cfg.fft_size);

    let mut planner = FftPlanner::<f64>::new();
    let fft: Arc<dyn Fft<f64>> = planner.plan_fft_forward(cfg.fft_size);
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];

    let mut data = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = t * cfg.hop;
        for (i, c) in buf.iter_mut().enumerate() {
            *c = Complex::new(audio.samples[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for c in buf.iter().take(bins) {
            let m = c.norm();
            data.push(if cfg.log_compress { (1.0 + m).ln() } else { m });
        }
    }
    FeatureMatrix::new(FeatureKind::Spectrogram, frames, bins, data)
}

/// Writes the binary feature format: magic `FEAT`, version u32, kind u8,
/// rows u32, cols u32, then rows*cols f32 values row-major, little-endian.
pub fn write_features(path: &Path, m: &FeatureMatrix) -> Result<(), FeatureError> {
    let mut out = Vec::with_capacity(17 + m.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(m.kind.to_byte());
    out.extend_from_slice(&(m.rows as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols as u32).to_le_bytes());
    for &v in &m.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Reads the binary feature format. `read(write(m))` is bit-exact once a
/// matrix has passed through the f32 cast.
pub fn read_features(path: &Path) -> Result<FeatureMatrix, FeatureError> {
    let p = path.display().to_string();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| FeatureError::Io {
            path: p.clone(),
            source,
        })?;
    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(FeatureError::BadMagic { path: p });
    }
    if bytes.len() < 17 {
        return Err(FeatureError::Truncated {
            path: p,
            detail: "header".to_string(),
        });
    }
    let version = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]);
    if version != FORMAT_VERSION {
        return Err(FeatureError::BadVersion {
            path: p,
            got: version,
        });
    }
    let kind = FeatureKind::from_byte(bytes[8]).ok_or(FeatureError::BadKind {
        path: p.clone(),
        got: bytes[8],
    })?;
    let rows = u32::from_le_bytes([bytes[9], bytes[10], bytes[11], bytes[12]]) as usize;
    let cols = u32::from_le_bytes([bytes[13], bytes[14], bytes[15], bytes[16]]) as usize;
    let need = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(17))
        .ok_or_else(|| FeatureError::Truncated {
            path: p.clone(),
            detail: "size overflow".to_string(),
        })?;
    if bytes.len() < need {
        return Err(FeatureError::Truncated {
            path: p,
            detail: format!("expected {} bytes, got {}", need, bytes.len()),
        });
    }
    let data: Vec<f64> = bytes[17..need]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    FeatureMatrix::new(kind, rows, cols, data)
}

/// Loads a D x 1 embedding, optionally enforcing its dimension.
pub fn load_embedding(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<FeatureMatrix, FeatureError> {
    let m = read_features(path)?;
    if m.kind != FeatureKind::Embedding {
        return Err(FeatureError::KindMismatch {
            expected: FeatureKind::Embedding,
            got: m.kind,
        });
    }
    if let Some(d) = expected_dim {
        if m.rows != d {
            return Err(FeatureError::DimensionMismatch {
                expected: d,
                got: m.rows,
            });
        }
    }
    Ok(m)
}

/// Per-column standardization fitted on a training set. Columns with zero
/// variance keep a unit divisor so constant features pass through centered
/// but unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    kind: FeatureKind,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Normalizer {
    pub fn from_parts(kind: FeatureKind, mean: Vec<f64>, sd: Vec<f64>) -> Normalizer {
        assert_eq!(mean.len(), sd.len());
        Normalizer { kind, mean, sd }
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn cols(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }
}

/// Fits a per-column mean/sd normalizer over all rows of the given
/// matrices (population standard deviation).
pub fn fit_normalizer(train_features: &[FeatureMatrix]) -> Result<Normalizer, FeatureError> {
    let first = train_features.first().ok_or(FeatureError::TooFewRows(0))?;
    let kind = first.kind;
    let cols = first.cols;
    let mut total_rows = 0usize;
    for m in train_features {
        if m.kind != kind {
            return Err(FeatureError::MixedKinds);
        }
        if m.cols != cols {
            return Err(FeatureError::MixedCols { a: cols, b: m.cols });
        }
        total_rows += m.rows;
    }
    if total_rows < 2 {
        return Err(FeatureError::TooFewRows(total_rows));
    }

    let mut mean = vec![0.0f64; cols];
    for m in train_features {
        for r in 0..m.rows {
            for (c, v) in m.row(r).iter().enumerate() {
                mean[c] += v;
            }
        }
    }
    for v in &mut mean {
        *v /= total_rows as f64;
    }

    let mut var = vec![0.0f64; cols];
    for m in train_features {
        for r in 0..m.rows {
            for (c, v) in m.row(r).iter().enumerate() {
                let d = v - mean[c];
                var[c] += d * d;
            }
        }
    }
    let sd: Vec<f64> = var
        .into_iter()
        .map(|v| {
            let s = (v / total_rows as f64).sqrt();
            if s == 0.0 {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(Normalizer { kind, mean, sd })
}

/// Applies a fitted normalizer: `(x - mean) / sd` per column.
pub fn apply_normalizer(
    n: &Normalizer,
    m: &FeatureMatrix,
) -> Result<FeatureMatrix, FeatureError> {
    if m.kind != n.kind {
        return Err(FeatureError::KindMismatch {
            expected: n.kind,
            got: m.kind,
        });
    }
    if m.cols != n.cols() {
        return Err(FeatureError::NormalizerCols {
            expected: n.cols(),
            got: m.cols,
        });
    }
    let data: Vec<f64> = m
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| (v - n.mean[i % m.cols]) / n.sd[i % m.cols])
        .collect();
    FeatureMatrix::new(m.kind, m.rows, m.cols, data)
}
