//! Predictor assembly and lifecycle: the two architectures, the
//! alpha-weighted frame/utterance loss, training with early stopping,
//! grid search selected on speaker-level SRCC, and model serialization.
//!
//! Two architectures exist:
//!
//! * **low-capacity CNN** — maps a D x 1 embedding to one MOS estimate via
//!   Conv1D x2, MaxPool(3), Conv1D x2, GlobalAvgPool, Dropout, Dense(1),
//!   with optional batch normalization at the input.
//! * **frame model** — maps a T x F spectrogram to per-frame scores via
//!   Conv1D x2, MaxPool(3), Conv1D x2, Dense(1) per frame position; the
//!   utterance score is the mean of the frame scores.

mod grid;
mod io;
mod loss;
mod train;

pub use grid::{grid_search, leaderboard_to_csv, GridEntry, Leaderboard, LeaderboardEntry};
pub use io::{load_model, save_model};
pub use loss::dual_loss;
pub use train::{train, EpochStats, LabeledExample, TrainingHistory};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{
    apply_normalizer, FeatureError, FeatureKind, FeatureMatrix, Normalizer, StftConfig,
};
use crate::metrics::MetricsError;
use crate::nn::{min_input_rows, LayerSpec, Mode, Network, NnError, Tensor2D};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input dimension {got} too small for the layer stack (needs >= {needed})")]
    InputDimTooSmall { needed: usize, got: usize },
    #[error("feature kind mismatch: model expects {expected:?}, got {got:?}")]
    KindMismatch {
        expected: FeatureKind,
        got: FeatureKind,
    },
    #[error("feature shape mismatch: model expects {expected} {axis}, got {got}")]
    ShapeMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("alpha {0} outside [0, 1]")]
    BadAlpha(f64),
    #[error("batch_size must be >= 1")]
    ZeroBatchSize,
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error("non-finite loss at epoch {epoch}; training aborted")]
    NonFiniteLoss { epoch: usize },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("degenerate validation set: {speakers} speaker(s) with labeled utterances (need >= 2)")]
    DegenerateValSet { speakers: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic (not a model file)")]
    BadMagic { path: String },
    #[error("{path}: unsupported model format version {got}")]
    BadVersion { path: String, got: u32 },
    #[error("{path}: truncated model file ({detail})")]
    TruncatedModel { path: String, detail: String },
    #[error("{path}: malformed config block: {detail}")]
    BadConfig { path: String, detail: String },
    #[error("{path}: layer {layer} expects {expected} values, file has {got}")]
    WeightShape {
        path: String,
        layer: usize,
        expected: usize,
        got: usize,
    },
}

/// Which predictor a model file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    LowCapacity,
    Frame,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::LowCapacity => "low_capacity",
            Architecture::Frame => "frame",
        }
    }

    pub fn parse(token: &str) -> Option<Architecture> {
        match token {
            "low_capacity" => Some(Architecture::LowCapacity),
            "frame" => Some(Architecture::Frame),
            _ => None,
        }
    }
}

/// Hyperparameters of the embedding-input CNN. Kernel and pool sizes are
/// fixed by the architecture; the other fields carry the searched grids
/// as associated constants, with the best reported configuration as the
/// default.
#[derive(Debug, Clone, PartialEq)]
pub struct LowCapacityCnnConfig {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub dropout_rate: f64,
    pub l2: f64,
    pub input_batchnorm: bool,
    pub batch_size: usize,
    pub seed: u64,
}

impl LowCapacityCnnConfig {
    pub const FILTER_GRID: [usize; 4] = [16, 32, 64, 128];
    pub const DROPOUT_GRID: [f64; 3] = [0.1, 0.2, 0.3];
    pub const L2_GRID: [f64; 4] = [0.0001, 0.001, 0.01, 0.1];
    pub const BATCH_GRID: [usize; 3] = [16, 64, 128];
}

impl Default for LowCapacityCnnConfig {
    /// The best reported configuration: 16 filters, dropout 0.2,
    /// L2 0.0001, no batch normalization, batch size 1.
    fn default() -> LowCapacityCnnConfig {
        LowCapacityCnnConfig {
            filters: 16,
            kernel: 10,
            pool: 3,
            dropout_rate: 0.2,
            l2: 0.0001,
            input_batchnorm: false,
            batch_size: 1,
            seed: 0,
        }
    }
}

/// Hyperparameters of the spectrogram frame model. `alpha` weights the
/// frame-level loss term against the utterance-level term.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameModelConfig {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub alpha: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl FrameModelConfig {
    pub const ALPHA_GRID: [f64; 3] = [0.0, 0.5, 1.0];
}

impl Default for FrameModelConfig {
    fn default() -> FrameModelConfig {
        FrameModelConfig {
            filters: 32,
            kernel: 10,
            pool: 3,
            alpha: 1.0,
            l2: 0.0,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// Architecture-tagged configuration echo carried by every model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    LowCapacity(LowCapacityCnnConfig),
    Frame(FrameModelConfig),
}

impl ModelConfig {
    pub fn architecture(&self) -> Architecture {
        match self {
            ModelConfig::LowCapacity(_) => Architecture::LowCapacity,
            ModelConfig::Frame(_) => Architecture::Frame,
        }
    }

    pub fn batch_size(&self) -> usize {
        match self {
            ModelConfig::LowCapacity(c) => c.batch_size,
            ModelConfig::Frame(c) => c.batch_size,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::LowCapacity(c) => c.seed,
            ModelConfig::Frame(c) => c.seed,
        }
    }

    /// Frame-loss weight: embedding models have no frame term.
    pub fn alpha(&self) -> f64 {
        match self {
            ModelConfig::LowCapacity(_) => 0.0,
            ModelConfig::Frame(c) => c.alpha,
        }
    }

    pub fn expected_kind(&self) -> FeatureKind {
        match self {
            ModelConfig::LowCapacity(_) => FeatureKind::Embedding,
            ModelConfig::Frame(_) => FeatureKind::Spectrogram,
        }
    }
}

fn low_capacity_specs(cfg: &LowCapacityCnnConfig) -> Vec<LayerSpec> {
    let conv = LayerSpec::Conv1D {
        filters: cfg.filters,
        kernel: cfg.kernel,
        l2: cfg.l2,
    };
    let mut specs = Vec::new();
    if cfg.input_batchnorm {
        specs.push(LayerSpec::BatchNorm);
    }
    specs.extend([
        conv.clone(),
        LayerSpec::Relu,
        conv.clone(),
        LayerSpec::Relu,
        LayerSpec::MaxPool1D { pool: cfg.pool },
        conv.clone(),
        LayerSpec::Relu,
        conv,
        LayerSpec::Relu,
        LayerSpec::GlobalAvgPool,
        LayerSpec::Dropout {
            rate: cfg.dropout_rate,
        },
        LayerSpec::Dense { units: 1, l2: 0.0 },
    ]);
    specs
}

fn frame_specs(cfg: &FrameModelConfig) -> Vec<LayerSpec> {
    let conv = LayerSpec::Conv1D {
        filters: cfg.filters,
        kernel: cfg.kernel,
        l2: cfg.l2,
    };
    vec![
        conv.clone(),
        LayerSpec::Relu,
        conv.clone(),
        LayerSpec::Relu,
        LayerSpec::MaxPool1D { pool: cfg.pool },
        conv.clone(),
        LayerSpec::Relu,
        conv,
        LayerSpec::Relu,
        LayerSpec::Dense { units: 1, l2: 0.0 },
    ]
}

/// An assembled but untrained predictor: the network plus everything that
/// must ride along into the trained artifact.
#[derive(Debug, Clone)]
pub struct UntrainedModel {
    pub(crate) network: Network,
    pub(crate) config: ModelConfig,
    pub(crate) input_dim: usize,
    pub(crate) normalizer: Option<Normalizer>,
    pub(crate) stft: Option<StftConfig>,
    pub(crate) scale_min: f64,
    pub(crate) scale_max: f64,
}

impl UntrainedModel {
    pub fn with_normalizer(mut self, n: Normalizer) -> UntrainedModel {
        self.normalizer = Some(n);
        self
    }

    pub fn with_stft(mut self, cfg: StftConfig) -> UntrainedModel {
        self.stft = Some(cfg);
        self
    }

    /// Sets the MOS scale echo and re-centers the untrained output bias at
    /// mid-scale.
    pub fn with_scale(mut self, scale_min: f64, scale_max: f64) -> UntrainedModel {
        self.scale_min = scale_min;
        self.scale_max = scale_max;
        init_output_bias(&mut self.network, (scale_min + scale_max) / 2.0);
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.network
    }

    /// Freezes the current (initial) weights into a TrainedModel without
    /// training. Mostly useful for tests and round-trip checks.
    pub fn freeze(self) -> TrainedModel {
        TrainedModel {
            network: self.network,
            config: self.config,
            input_dim: self.input_dim,
            normalizer: self.normalizer,
            stft: self.stft,
            scale_min: self.scale_min,
            scale_max: self.scale_max,
        }
    }
}

/// Sets every bias of the final dense layer. Regression converges much
/// faster starting from mid-scale than from zero at the trained learning
/// rate, and the choice washes out once training moves the bias.
fn init_output_bias(net: &mut Network, value: f64) {
    use crate::nn::Layer;
    if let Some(Layer::Dense(dense)) = net
        .layers_mut()
        .iter_mut()
        .rev()
        .find(|l| matches!(l, Layer::Dense(_)))
    {
        for b in &mut dense.bias {
            *b = value;
        }
    }
}

/// Builds the embedding-input CNN for `input_dim`-dimensional embeddings.
/// Weights are seeded from `cfg.seed`.
pub fn build_low_capacity_cnn(
    cfg: &LowCapacityCnnConfig,
    input_dim: usize,
) -> Result<UntrainedModel, ModelError> {
    if cfg.batch_size == 0 {
        return Err(ModelError::ZeroBatchSize);
    }
    let specs = low_capacity_specs(cfg);
    let needed = min_input_rows(&specs);
    if input_dim < needed {
        return Err(ModelError::InputDimTooSmall {
            needed,
            got: input_dim,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(cfg.seed, &[0]));
    let mut network = Network::build(&specs, 1, &mut rng)?;
    init_output_bias(&mut network, 5.5);
    Ok(UntrainedModel {
        network,
        config: ModelConfig::LowCapacity(cfg.clone()),
        input_dim,
        normalizer: None,
        stft: None,
        scale_min: 1.0,
        scale_max: 10.0,
    })
}

/// Builds the spectrogram frame model for `n_bins` frequency bins.
pub fn build_frame_model(
    cfg: &FrameModelConfig,
    n_bins: usize,
) -> Result<UntrainedModel, ModelError> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(ModelError::BadAlpha(cfg.alpha));
    }
    if cfg.batch_size == 0 {
        return Err(ModelError::ZeroBatchSize);
    }
    let specs = frame_specs(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(cfg.seed, &[0]));
    let mut network = Network::build(&specs, n_bins, &mut rng)?;
    init_output_bias(&mut network, 5.5);
    Ok(UntrainedModel {
        network,
        config: ModelConfig::Frame(cfg.clone()),
        input_dim: n_bins,
        normalizer: None,
        stft: None,
        scale_min: 1.0,
        scale_max: 10.0,
    })
}

/// A trained predictor with its configuration echo, optional feature
/// normalizer and (for frame models) the STFT settings it was trained on.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub(crate) network: Network,
    pub config: ModelConfig,
    pub input_dim: usize,
    pub normalizer: Option<Normalizer>,
    pub stft: Option<StftConfig>,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl TrainedModel {
    pub fn architecture(&self) -> Architecture {
        self.config.architecture()
    }

    /// Smallest number of spectrogram frames a frame model can score.
    pub fn min_frames(&self) -> usize {
        self.network.min_input_rows()
    }

    /// Deterministic MOS estimate (eval mode, raw value, not clamped to
    /// the scale).
    pub fn predict(&self, features: &FeatureMatrix) -> Result<f64, ModelError> {
        Ok(self.predict_detailed(features)?.0)
    }

    /// Utterance score plus per-frame scores (empty for embedding models).
    pub fn predict_detailed(
        &self,
        features: &FeatureMatrix,
    ) -> Result<(f64, Vec<f64>), ModelError> {
        let mut net = self.network.clone();
        let out = forward_features(
            &mut net,
            &self.config,
            self.input_dim,
            self.normalizer.as_ref(),
            features,
        )?;
        Ok(score_output(&self.config, &out))
    }
}

/// Validates feature kind and shape against a model's expectations.
pub(crate) fn check_features(
    config: &ModelConfig,
    input_dim: usize,
    features: &FeatureMatrix,
) -> Result<(), ModelError> {
    let expected = config.expected_kind();
    if features.kind() != expected {
        return Err(ModelError::KindMismatch {
            expected,
            got: features.kind(),
        });
    }
    match config.architecture() {
        Architecture::LowCapacity => {
            if features.rows() != input_dim {
                return Err(ModelError::ShapeMismatch {
                    axis: "rows",
                    expected: input_dim,
                    got: features.rows(),
                });
            }
        }
        Architecture::Frame => {
            if features.cols() != input_dim {
                return Err(ModelError::ShapeMismatch {
                    axis: "cols",
                    expected: input_dim,
                    got: features.cols(),
                });
            }
        }
    }
    Ok(())
}

/// Shared forward path: validates, normalizes if configured, reshapes to
/// the architecture's tensor layout, and runs the network in eval mode.
pub(crate) fn forward_features(
    net: &mut Network,
    config: &ModelConfig,
    input_dim: usize,
    normalizer: Option<&Normalizer>,
    features: &FeatureMatrix,
) -> Result<Tensor2D, ModelError> {
    check_features(config, input_dim, features)?;
    let owned;
    let m = match normalizer {
        Some(n) => {
            owned = apply_normalizer(n, features)?;
            &owned
        }
        None => features,
    };
    let x = features_to_tensor(config, m);
    Ok(net.forward(&x, Mode::Eval, None)?)
}

/// Embeddings become D x 1 tensors (positions x 1 channel); spectrograms
/// are already T x F.
pub(crate) fn features_to_tensor(config: &ModelConfig, m: &FeatureMatrix) -> Tensor2D {
    match config.architecture() {
        Architecture::LowCapacity => Tensor2D::new(m.rows(), 1, m.data().to_vec()),
        Architecture::Frame => Tensor2D::new(m.rows(), m.cols(), m.data().to_vec()),
    }
}

/// Collapses the network output to (utterance score, frame scores). The
/// utterance score of a frame model is the mean of its frame scores.
pub(crate) fn score_output(config: &ModelConfig, out: &Tensor2D) -> (f64, Vec<f64>) {
    match config.architecture() {
        Architecture::LowCapacity => (out.data()[0], Vec::new()),
        Architecture::Frame => {
            let frames: Vec<f64> = out.data().to_vec();
            let utt = frames.iter().sum::<f64>() / frames.len() as f64;
            (utt, frames)
        }
    }
}
