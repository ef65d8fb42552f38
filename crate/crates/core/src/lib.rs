//! Toolkit for training and evaluating neural MOS (mean opinion score)
//! predictors for synthetic speech, and for ranking speakers and systems by
//! predicted quality.
//!
//! The pipeline runs in stages, each backed by a module here:
//!
//! 1. [`corpus`] — manifests binding utterances to speakers, systems, MOS
//!    labels and splits, plus WAV decoding.
//! 2. [`features`] — magnitude spectrograms and precomputed utterance
//!    embeddings, persisted in a compact binary format.
//! 3. [`nn`] — a small 1-D CNN layer zoo with backprop, Adam and a
//!    finite-difference gradient checker.
//! 4. [`model`] — the two predictor architectures, the alpha-weighted
//!    frame/utterance loss, training with early stopping, grid search and
//!    model serialization.
//! 5. [`metrics`] — LCC, SRCC, MSE, Kendall tau-b and group aggregation.
//! 6. [`analysis`] — speaker/system rankings, best/worst tables and scatter
//!    reports.
//! 7. [`synth`] — a synthetic multi-speaker, multi-system corpus generator
//!    with known ground-truth quality for end-to-end testing.

pub mod analysis;
pub mod corpus;
pub mod features;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod synth;

pub use corpus::{AudioBuffer, CorpusManifest, Split, UtteranceRecord};
pub use features::{FeatureKind, FeatureMatrix, Normalizer, StftConfig, WindowKind};
pub use metrics::{GroupAggregate, GroupLevel, Level, MetricBundle, PredictionSet};
pub use model::{
    Architecture, FrameModelConfig, LabeledExample, LowCapacityCnnConfig, TrainedModel,
};
pub use nn::{EarlyStopConfig, OptimizerConfig};
pub use synth::SynthSpec;
