//! Minimal neural-network core: the 1-D CNN layer set with forward and
//! backward passes, L2 regularization, Adam, dropout, optional batch
//! normalization and a finite-difference gradient checker.
//!
//! Computation is 64-bit throughout so gradient checks are meaningful;
//! serialized weights are cast to 32-bit by the model I/O layer.

mod adam;
mod gradcheck;
mod layers;
mod tensor;

pub use adam::{adam_step, AdamOptimizer, AdamState, OptimizerConfig};
pub use gradcheck::{compare_gradients, gradient_check, GradCheckReport};
pub use layers::{
    BatchNorm, Conv1D, Dense, Dropout, GlobalAvgPool, Layer, LayerSpec, MaxPool1D, Relu,
};
pub use tensor::Tensor2D;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("layer {layer}: input has {got} rows, needs at least {needed}")]
    RowsTooShort {
        layer: usize,
        needed: usize,
        got: usize,
    },
    #[error("layer {layer}: input has {got} columns, expected {expected}")]
    ColsMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("network input needs at least {needed} rows, got {got}")]
    InputTooShort { needed: usize, got: usize },
    #[error("train-mode dropout requires an rng")]
    MissingRng,
    #[error("non-finite gradient at parameter {index}; step aborted")]
    NonFiniteGradient { index: usize },
    #[error("layer state length mismatch: expected {expected}, got {got}")]
    StateLength { expected: usize, got: usize },
}

/// Whether stochastic layers (dropout) and batch statistics are live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Early-stopping policy: stop once validation MSE has not improved by
/// more than `min_delta` for `patience` consecutive epochs, or at
/// `max_epochs`; training keeps the best-validation weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopConfig {
    pub patience: usize,
    pub max_epochs: usize,
    pub min_delta: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> EarlyStopConfig {
        EarlyStopConfig {
            patience: 10,
            max_epochs: 200,
            min_delta: 0.0,
        }
    }
}

/// A feed-forward stack of [`Layer`]s built from [`LayerSpec`]s.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    input_cols: usize,
    min_input_rows: usize,
}

impl Network {
    /// Builds the stack, validating specs and resolving every layer's
    /// column count from `input_cols`. Weights are Glorot-uniform
    /// initialized from `rng`; biases start at zero.
    pub fn build(
        specs: &[LayerSpec],
        input_cols: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Network, NnError> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut cols = input_cols;
        for spec in specs {
            spec.validate()?;
            let layer = match *spec {
                LayerSpec::Conv1D { filters, kernel, l2 } => {
                    let mut conv = Conv1D::new(filters, kernel, cols, l2);
                    conv.init_glorot(rng);
                    cols = filters;
                    Layer::Conv1D(conv)
                }
                LayerSpec::MaxPool1D { pool } => Layer::MaxPool1D(MaxPool1D::new(pool)),
                LayerSpec::GlobalAvgPool => Layer::GlobalAvgPool(GlobalAvgPool::new()),
                LayerSpec::Dense { units, l2 } => {
                    let mut dense = Dense::new(units, cols, l2);
                    dense.init_glorot(rng);
                    cols = units;
                    Layer::Dense(dense)
                }
                LayerSpec::Dropout { rate } => Layer::Dropout(Dropout::new(rate)),
                LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(cols)),
                LayerSpec::Relu => Layer::Relu(Relu::new()),
            };
            layers.push(layer);
        }
        Ok(Network {
            layers,
            input_cols,
            min_input_rows: min_input_rows(specs),
        })
    }

    pub fn input_cols(&self) -> usize {
        self.input_cols
    }

    /// Smallest input row count that survives the whole shape chain.
    pub fn min_input_rows(&self) -> usize {
        self.min_input_rows
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn forward(
        &mut self,
        x: &Tensor2D,
        mode: Mode,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor2D, NnError> {
        if x.rows() < self.min_input_rows {
            return Err(NnError::InputTooShort {
                needed: self.min_input_rows,
                got: x.rows(),
            });
        }
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            cur = layer.forward(&cur, mode, rng.as_deref_mut(), i)?;
        }
        Ok(cur)
    }

    /// Backpropagates `out_grad` through the stack, accumulating parameter
    /// gradients, and returns the input gradient. Must follow a forward
    /// pass on this instance.
    pub fn backward(&mut self, out_grad: &Tensor2D) -> Tensor2D {
        let mut cur = out_grad.clone();
        for layer in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur);
        }
        cur
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }

    pub fn visit_trainables(&mut self, f: &mut dyn FnMut(&mut Vec<f64>, &Vec<f64>)) {
        for layer in &mut self.layers {
            layer.visit_trainables(f);
        }
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_trainables(&mut |p, _| n += p.len());
        n
    }

    pub fn params_flat(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_trainables(&mut |p, _| out.extend_from_slice(p));
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        self.visit_trainables(&mut |p, _| {
            let len = p.len();
            p.copy_from_slice(&flat[at..at + len]);
            at += len;
        });
        assert_eq!(at, flat.len(), "flat parameter length mismatch");
    }

    pub fn grads_flat(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_trainables(&mut |_, g| out.extend_from_slice(g));
        out
    }

    pub fn set_grads_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for layer in &mut self.layers {
            layer.visit_grads_mut(&mut |g| {
                let len = g.len();
                g.copy_from_slice(&flat[at..at + len]);
                at += len;
            });
        }
        assert_eq!(at, flat.len(), "flat gradient length mismatch");
    }

    /// Sum of per-layer `l2 * sum(w^2)` penalties.
    pub fn l2_penalty(&self) -> f64 {
        self.layers.iter().map(|l| l.l2_penalty()).sum()
    }

    /// Batch statistics of every batchnorm layer from the last train-mode
    /// forward, in layer order.
    pub fn bn_batch_stats(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::BatchNorm(bn) => Some(bn.batch_stats()),
                _ => None,
            })
            .collect()
    }

    /// Folds batch statistics (as returned by [`bn_batch_stats`]) into the
    /// running averages, in layer order.
    ///
    /// [`bn_batch_stats`]: Network::bn_batch_stats
    pub fn commit_bn_stats(&mut self, stats: &[(Vec<f64>, Vec<f64>)]) {
        let mut it = stats.iter();
        for layer in &mut self.layers {
            if let Layer::BatchNorm(bn) = layer {
                if let Some((mean, var)) = it.next() {
                    bn.commit_batch_stats(mean, var);
                }
            }
        }
    }
}

/// Walks the shape chain backward to find the minimal input row count for
/// which every layer's row constraint holds.
pub fn min_input_rows(specs: &[LayerSpec]) -> usize {
    let mut need = 1usize;
    for spec in specs.iter().rev() {
        need = match *spec {
            LayerSpec::Conv1D { kernel, .. } => need + kernel - 1,
            LayerSpec::MaxPool1D { pool } => need * pool,
            LayerSpec::GlobalAvgPool => 1,
            _ => need,
        };
    }
    need
}
