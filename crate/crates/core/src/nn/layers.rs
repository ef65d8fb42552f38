//! Layer implementations: Conv1D (valid padding, stride 1), MaxPool1D,
//! global average pooling, Dense, inverted dropout, batch normalization and
//! ReLU. Each layer caches what its backward pass needs; parameter
//! gradients accumulate until [`zero_grads`](Layer::zero_grads).
//!
//! L2 regularization follows the `l2 * sum(w^2)` penalty convention:
//! every backward call adds `2 * l2 * w` to the weight gradients (biases
//! stay unregularized).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor2D;
use super::{Mode, NnError};

/// Architecture description consumed by
/// [`Network::build`](super::Network::build).
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv1D { filters: usize, kernel: usize, l2: f64 },
    MaxPool1D { pool: usize },
    GlobalAvgPool,
    Dense { units: usize, l2: f64 },
    Dropout { rate: f64 },
    BatchNorm,
    Relu,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        match *self {
            LayerSpec::Conv1D { filters, kernel, l2 } => {
                if filters == 0 || kernel == 0 || l2 < 0.0 {
                    return Err(NnError::InvalidSpec(format!(
                        "conv1d filters={filters} kernel={kernel} l2={l2}"
                    )));
                }
            }
            LayerSpec::MaxPool1D { pool } => {
                if pool == 0 {
                    return Err(NnError::InvalidSpec("maxpool pool=0".to_string()));
                }
            }
            LayerSpec::Dense { units, l2 } => {
                if units == 0 || l2 < 0.0 {
                    return Err(NnError::InvalidSpec(format!(
                        "dense units={units} l2={l2}"
                    )));
                }
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(NnError::InvalidSpec(format!("dropout rate={rate}")));
                }
            }
            LayerSpec::GlobalAvgPool | LayerSpec::BatchNorm | LayerSpec::Relu => {}
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// 1-D convolution over rows, valid padding, stride 1.
/// `out(t, f) = bias(f) + sum_{k,c} w(f,k,c) * x(t+k, c)`.
#[derive(Debug, Clone)]
pub struct Conv1D {
    pub filters: usize,
    pub kernel: usize,
    pub c_in: usize,
    pub l2: f64,
    /// Flat `[filters][kernel * c_in]`, each filter contiguous in the same
    /// layout as a row-major input window.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
    cached_input: Option<Tensor2D>,
}

impl Conv1D {
    pub fn new(filters: usize, kernel: usize, c_in: usize, l2: f64) -> Conv1D {
        let wlen = filters * kernel * c_in;
        Conv1D {
            filters,
            kernel,
            c_in,
            l2,
            weights: vec![0.0; wlen],
            bias: vec![0.0; filters],
            dw: vec![0.0; wlen],
            db: vec![0.0; filters],
            cached_input: None,
        }
    }

    pub fn init_glorot(&mut self, rng: &mut ChaCha8Rng) {
        let fan_in = (self.kernel * self.c_in) as f64;
        let fan_out = (self.kernel * self.filters) as f64;
        let limit = (6.0 / (fan_in + fan_out)).sqrt();
        for w in &mut self.weights {
            *w = rng.gen_range(-limit..limit);
        }
    }

    pub fn out_rows(&self, in_rows: usize) -> Option<usize> {
        if in_rows < self.kernel {
            None
        } else {
            Some(in_rows - self.kernel + 1)
        }
    }

    fn forward(&mut self, x: &Tensor2D, layer_index: usize) -> Result<Tensor2D, NnError> {
        if x.cols() != self.c_in {
            return Err(NnError::ColsMismatch {
                layer: layer_index,
                expected: self.c_in,
                got: x.cols(),
            });
        }
        let t_out = self
            .out_rows(x.rows())
            .ok_or(NnError::RowsTooShort {
                layer: layer_index,
                needed: self.kernel,
                got: x.rows(),
            })?;
        let wlen = self.kernel * self.c_in;
        let mut out = Tensor2D::zeros(t_out, self.filters);
        for t in 0..t_out {
            let win = x.rows_window(t, self.kernel);
            let row = out.row_mut(t);
            for f in 0..self.filters {
                row[f] = self.bias[f] + dot(&self.weights[f * wlen..(f + 1) * wlen], win);
            }
        }
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let x = self
            .cached_input
            .as_ref()
            .expect("conv1d backward before forward");
        let wlen = self.kernel * self.c_in;
        let mut dx = Tensor2D::zeros(x.rows(), x.cols());
        for t in 0..grad.rows() {
            let win = x.rows_window(t, self.kernel);
            let g_row = grad.row(t);
            for f in 0..self.filters {
                let g = g_row[f];
                if g == 0.0 {
                    continue;
                }
                self.db[f] += g;
                axpy(g, win, &mut self.dw[f * wlen..(f + 1) * wlen]);
                let dx_win = &mut dx.data_mut()[t * self.c_in..(t + self.kernel) * self.c_in];
                axpy(g, &self.weights[f * wlen..(f + 1) * wlen], dx_win);
            }
        }
        if self.l2 > 0.0 {
            for (dw, w) in self.dw.iter_mut().zip(&self.weights) {
                *dw += 2.0 * self.l2 * w;
            }
        }
        dx
    }
}

/// Max pooling with stride = pool size; trailing remainder dropped.
/// Backward routes each window's gradient to its argmax (first index on
/// ties).
#[derive(Debug, Clone)]
pub struct MaxPool1D {
    pub pool: usize,
    cached_argmax: Vec<usize>,
    cached_in_rows: usize,
    cached_cols: usize,
}

impl MaxPool1D {
    pub fn new(pool: usize) -> MaxPool1D {
        MaxPool1D {
            pool,
            cached_argmax: Vec::new(),
            cached_in_rows: 0,
            cached_cols: 0,
        }
    }

    pub fn out_rows(&self, in_rows: usize) -> Option<usize> {
        if in_rows < self.pool {
            None
        } else {
            Some(in_rows / self.pool)
        }
    }

    fn forward(&mut self, x: &Tensor2D, layer_index: usize) -> Result<Tensor2D, NnError> {
        let t_out = self.out_rows(x.rows()).ok_or(NnError::RowsTooShort {
            layer: layer_index,
            needed: self.pool,
            got: x.rows(),
        })?;
        let cols = x.cols();
        let mut out = Tensor2D::zeros(t_out, cols);
        self.cached_argmax = vec![0; t_out * cols];
        for t in 0..t_out {
            for c in 0..cols {
                let mut best = x.get(t * self.pool, c);
                let mut best_row = t * self.pool;
                for i in 1..self.pool {
                    let v = x.get(t * self.pool + i, c);
                    if v > best {
                        best = v;
                        best_row = t * self.pool + i;
                    }
                }
                out.set(t, c, best);
                self.cached_argmax[t * cols + c] = best_row;
            }
        }
        self.cached_in_rows = x.rows();
        self.cached_cols = cols;
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let mut dx = Tensor2D::zeros(self.cached_in_rows, self.cached_cols);
        for t in 0..grad.rows() {
            for c in 0..grad.cols() {
                let src = self.cached_argmax[t * grad.cols() + c];
                let cur = dx.get(src, c);
                dx.set(src, c, cur + grad.get(t, c));
            }
        }
        dx
    }
}

/// Mean over rows: T x C -> 1 x C. Backward spreads grad / T to every row.
#[derive(Debug, Clone)]
pub struct GlobalAvgPool {
    cached_in_rows: usize,
}

impl GlobalAvgPool {
    pub fn new() -> GlobalAvgPool {
        GlobalAvgPool { cached_in_rows: 0 }
    }

    fn forward(&mut self, x: &Tensor2D) -> Tensor2D {
        let t = x.rows();
        let mut out = Tensor2D::zeros(1, x.cols());
        for r in 0..t {
            for (c, v) in x.row(r).iter().enumerate() {
                out.data_mut()[c] += v;
            }
        }
        for v in out.data_mut() {
            *v /= t as f64;
        }
        self.cached_in_rows = t;
        out
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let t = self.cached_in_rows;
        let mut dx = Tensor2D::zeros(t, grad.cols());
        for r in 0..t {
            for (c, g) in grad.row(0).iter().enumerate() {
                dx.set(r, c, g / t as f64);
            }
        }
        dx
    }
}

impl Default for GlobalAvgPool {
    fn default() -> Self {
        GlobalAvgPool::new()
    }
}

/// Affine map applied independently to each row: rows x n_in -> rows x
/// units. With a single row this is the ordinary dense layer; with T rows
/// it acts per frame position.
#[derive(Debug, Clone)]
pub struct Dense {
    pub units: usize,
    pub n_in: usize,
    pub l2: f64,
    /// Flat `[units][n_in]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
    cached_input: Option<Tensor2D>,
}

impl Dense {
    pub fn new(units: usize, n_in: usize, l2: f64) -> Dense {
        Dense {
            units,
            n_in,
            l2,
            weights: vec![0.0; units * n_in],
            bias: vec![0.0; units],
            dw: vec![0.0; units * n_in],
            db: vec![0.0; units],
            cached_input: None,
        }
    }

    pub fn init_glorot(&mut self, rng: &mut ChaCha8Rng) {
        let limit = (6.0 / (self.n_in + self.units) as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.gen_range(-limit..limit);
        }
    }

    fn forward(&mut self, x: &Tensor2D, layer_index: usize) -> Result<Tensor2D, NnError> {
        if x.cols() != self.n_in {
            return Err(NnError::ColsMismatch {
                layer: layer_index,
                expected: self.n_in,
                got: x.cols(),
            });
        }
        let mut out = Tensor2D::zeros(x.rows(), self.units);
        for r in 0..x.rows() {
            let xin = x.row(r);
            let row = out.row_mut(r);
            for u in 0..self.units {
                row[u] = self.bias[u] + dot(&self.weights[u * self.n_in..(u + 1) * self.n_in], xin);
            }
        }
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let x = self
            .cached_input
            .as_ref()
            .expect("dense backward before forward");
        let mut dx = Tensor2D::zeros(x.rows(), x.cols());
        for r in 0..grad.rows() {
            let xin = x.row(r);
            let g_row = grad.row(r);
            let dx_row = &mut dx.data_mut()[r * self.n_in..(r + 1) * self.n_in];
            for u in 0..self.units {
                let g = g_row[u];
                if g == 0.0 {
                    continue;
                }
                self.db[u] += g;
                axpy(g, xin, &mut self.dw[u * self.n_in..(u + 1) * self.n_in]);
                axpy(g, &self.weights[u * self.n_in..(u + 1) * self.n_in], dx_row);
            }
        }
        if self.l2 > 0.0 {
            for (dw, w) in self.dw.iter_mut().zip(&self.weights) {
                *dw += 2.0 * self.l2 * w;
            }
        }
        dx
    }
}

/// Inverted dropout: in train mode each unit is zeroed with probability
/// `rate` and survivors scale by 1/(1-rate); eval mode is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    cached_mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Dropout {
        Dropout {
            rate,
            cached_mask: None,
        }
    }

    fn forward(
        &mut self,
        x: &Tensor2D,
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor2D, NnError> {
        if mode == Mode::Eval || self.rate == 0.0 {
            self.cached_mask = None;
            return Ok(x.clone());
        }
        let rng = rng.ok_or(NnError::MissingRng)?;
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.data().len())
            .map(|_| {
                if rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        let data: Vec<f64> = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.cached_mask = Some(mask);
        Ok(Tensor2D::new(x.rows(), x.cols(), data))
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        match &self.cached_mask {
            None => grad.clone(),
            Some(mask) => {
                let data: Vec<f64> = grad.data().iter().zip(mask).map(|(g, m)| g * m).collect();
                Tensor2D::new(grad.rows(), grad.cols(), data)
            }
        }
    }
}

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.99;

/// Per-column batch normalization. Train mode normalizes by the statistics
/// of the rows seen in the current forward call and records them for the
/// running-average update; eval mode uses the running statistics.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub cols: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub dgamma: Vec<f64>,
    pub dbeta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    /// Batch statistics from the last train-mode forward, consumed by
    /// [`commit_batch_stats`](BatchNorm::commit_batch_stats).
    last_mean: Vec<f64>,
    last_var: Vec<f64>,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    rows: usize,
    mode: Mode,
}

impl BatchNorm {
    pub fn new(cols: usize) -> BatchNorm {
        BatchNorm {
            cols,
            gamma: vec![1.0; cols],
            beta: vec![0.0; cols],
            dgamma: vec![0.0; cols],
            dbeta: vec![0.0; cols],
            running_mean: vec![0.0; cols],
            running_var: vec![1.0; cols],
            last_mean: vec![0.0; cols],
            last_var: vec![1.0; cols],
            cache: None,
        }
    }

    /// Batch statistics observed by the last train-mode forward.
    pub fn batch_stats(&self) -> (Vec<f64>, Vec<f64>) {
        (self.last_mean.clone(), self.last_var.clone())
    }

    /// Folds batch statistics into the running averages
    /// (`running = momentum * running + (1 - momentum) * batch`).
    pub fn commit_batch_stats(&mut self, mean: &[f64], var: &[f64]) {
        for c in 0..self.cols {
            self.running_mean[c] = BN_MOMENTUM * self.running_mean[c] + (1.0 - BN_MOMENTUM) * mean[c];
            self.running_var[c] = BN_MOMENTUM * self.running_var[c] + (1.0 - BN_MOMENTUM) * var[c];
        }
    }

    fn forward(&mut self, x: &Tensor2D, mode: Mode, layer_index: usize) -> Result<Tensor2D, NnError> {
        if x.cols() != self.cols {
            return Err(NnError::ColsMismatch {
                layer: layer_index,
                expected: self.cols,
                got: x.cols(),
            });
        }
        let rows = x.rows();
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; self.cols];
                for r in 0..rows {
                    for (c, v) in x.row(r).iter().enumerate() {
                        mean[c] += v;
                    }
                }
                for m in &mut mean {
                    *m /= rows as f64;
                }
                let mut var = vec![0.0; self.cols];
                for r in 0..rows {
                    for (c, v) in x.row(r).iter().enumerate() {
                        let d = v - mean[c];
                        var[c] += d * d;
                    }
                }
                for v in &mut var {
                    *v /= rows as f64;
                }
                self.last_mean = mean.clone();
                self.last_var = var.clone();
                (mean, var)
            }
            Mode::Eval => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = vec![0.0; rows * self.cols];
        let mut out = Tensor2D::zeros(rows, self.cols);
        for r in 0..rows {
            for c in 0..self.cols {
                let h = (x.get(r, c) - mean[c]) * inv_std[c];
                xhat[r * self.cols + c] = h;
                out.set(r, c, self.gamma[c] * h + self.beta[c]);
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            rows,
            mode,
        });
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let cache = self.cache.as_ref().expect("batchnorm backward before forward");
        let rows = cache.rows;
        let n = rows as f64;
        let mut dx = Tensor2D::zeros(rows, self.cols);
        for c in 0..self.cols {
            let mut sum_g = 0.0;
            let mut sum_gh = 0.0;
            for r in 0..rows {
                let g = grad.get(r, c);
                sum_g += g;
                sum_gh += g * cache.xhat[r * self.cols + c];
            }
            self.dbeta[c] += sum_g;
            self.dgamma[c] += sum_gh;
            match cache.mode {
                Mode::Train => {
                    // backprop through the batch statistics
                    let k = self.gamma[c] * cache.inv_std[c];
                    for r in 0..rows {
                        let g = grad.get(r, c);
                        let h = cache.xhat[r * self.cols + c];
                        dx.set(r, c, k * (g - sum_g / n - h * sum_gh / n));
                    }
                }
                Mode::Eval => {
                    // running stats are constants
                    let k = self.gamma[c] * cache.inv_std[c];
                    for r in 0..rows {
                        dx.set(r, c, k * grad.get(r, c));
                    }
                }
            }
        }
        dx
    }
}

/// Elementwise `max(x, 0)`.
#[derive(Debug, Clone)]
pub struct Relu {
    cached_positive: Vec<bool>,
    cached_rows: usize,
    cached_cols: usize,
}

impl Relu {
    pub fn new() -> Relu {
        Relu {
            cached_positive: Vec::new(),
            cached_rows: 0,
            cached_cols: 0,
        }
    }

    fn forward(&mut self, x: &Tensor2D) -> Tensor2D {
        self.cached_positive = x.data().iter().map(|&v| v > 0.0).collect();
        self.cached_rows = x.rows();
        self.cached_cols = x.cols();
        let data: Vec<f64> = x.data().iter().map(|&v| v.max(0.0)).collect();
        Tensor2D::new(x.rows(), x.cols(), data)
    }

    fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        let data: Vec<f64> = grad
            .data()
            .iter()
            .zip(&self.cached_positive)
            .map(|(g, &p)| if p { *g } else { 0.0 })
            .collect();
        Tensor2D::new(self.cached_rows, self.cached_cols, data)
    }
}

impl Default for Relu {
    fn default() -> Self {
        Relu::new()
    }
}

/// Uniform wrapper dispatching forward/backward/parameter access.
#[derive(Debug, Clone)]
pub enum Layer {
    Conv1D(Conv1D),
    MaxPool1D(MaxPool1D),
    GlobalAvgPool(GlobalAvgPool),
    Dense(Dense),
    Dropout(Dropout),
    BatchNorm(BatchNorm),
    Relu(Relu),
}

impl Layer {
    pub fn forward(
        &mut self,
        x: &Tensor2D,
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
        layer_index: usize,
    ) -> Result<Tensor2D, NnError> {
        match self {
            Layer::Conv1D(l) => l.forward(x, layer_index),
            Layer::MaxPool1D(l) => l.forward(x, layer_index),
            Layer::GlobalAvgPool(l) => Ok(l.forward(x)),
            Layer::Dense(l) => l.forward(x, layer_index),
            Layer::Dropout(l) => l.forward(x, mode, rng),
            Layer::BatchNorm(l) => l.forward(x, mode, layer_index),
            Layer::Relu(l) => Ok(l.forward(x)),
        }
    }

    pub fn backward(&mut self, grad: &Tensor2D) -> Tensor2D {
        match self {
            Layer::Conv1D(l) => l.backward(grad),
            Layer::MaxPool1D(l) => l.backward(grad),
            Layer::GlobalAvgPool(l) => l.backward(grad),
            Layer::Dense(l) => l.backward(grad),
            Layer::Dropout(l) => l.backward(grad),
            Layer::BatchNorm(l) => l.backward(grad),
            Layer::Relu(l) => l.backward(grad),
        }
    }

    pub fn zero_grads(&mut self) {
        match self {
            Layer::Conv1D(l) => {
                l.dw.iter_mut().for_each(|v| *v = 0.0);
                l.db.iter_mut().for_each(|v| *v = 0.0);
            }
            Layer::Dense(l) => {
                l.dw.iter_mut().for_each(|v| *v = 0.0);
                l.db.iter_mut().for_each(|v| *v = 0.0);
            }
            Layer::BatchNorm(l) => {
                l.dgamma.iter_mut().for_each(|v| *v = 0.0);
                l.dbeta.iter_mut().for_each(|v| *v = 0.0);
            }
            _ => {}
        }
    }

    /// Visits (params, grads) pairs in a fixed order.
    pub fn visit_trainables(&mut self, f: &mut dyn FnMut(&mut Vec<f64>, &Vec<f64>)) {
        match self {
            Layer::Conv1D(l) => {
                f(&mut l.weights, &l.dw);
                f(&mut l.bias, &l.db);
            }
            Layer::Dense(l) => {
                f(&mut l.weights, &l.dw);
                f(&mut l.bias, &l.db);
            }
            Layer::BatchNorm(l) => {
                f(&mut l.gamma, &l.dgamma);
                f(&mut l.beta, &l.dbeta);
            }
            _ => {}
        }
    }

    /// Visits gradient tensors mutably, in the same order as
    /// [`visit_trainables`](Layer::visit_trainables).
    pub fn visit_grads_mut(&mut self, f: &mut dyn FnMut(&mut Vec<f64>)) {
        match self {
            Layer::Conv1D(l) => {
                f(&mut l.dw);
                f(&mut l.db);
            }
            Layer::Dense(l) => {
                f(&mut l.dw);
                f(&mut l.db);
            }
            Layer::BatchNorm(l) => {
                f(&mut l.dgamma);
                f(&mut l.dbeta);
            }
            _ => {}
        }
    }

    /// Full persistent state (trainables plus batchnorm running stats),
    /// concatenated in a fixed order.
    pub fn state(&self) -> Vec<f64> {
        match self {
            Layer::Conv1D(l) => l.weights.iter().chain(&l.bias).copied().collect(),
            Layer::Dense(l) => l.weights.iter().chain(&l.bias).copied().collect(),
            Layer::BatchNorm(l) => l
                .gamma
                .iter()
                .chain(&l.beta)
                .chain(&l.running_mean)
                .chain(&l.running_var)
                .copied()
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn set_state(&mut self, state: &[f64]) -> Result<(), NnError> {
        let expected = self.state().len();
        if state.len() != expected {
            return Err(NnError::StateLength {
                expected,
                got: state.len(),
            });
        }
        match self {
            Layer::Conv1D(l) => {
                let nw = l.weights.len();
                l.weights.copy_from_slice(&state[..nw]);
                l.bias.copy_from_slice(&state[nw..]);
            }
            Layer::Dense(l) => {
                let nw = l.weights.len();
                l.weights.copy_from_slice(&state[..nw]);
                l.bias.copy_from_slice(&state[nw..]);
            }
            Layer::BatchNorm(l) => {
                let c = l.cols;
                l.gamma.copy_from_slice(&state[..c]);
                l.beta.copy_from_slice(&state[c..2 * c]);
                l.running_mean.copy_from_slice(&state[2 * c..3 * c]);
                l.running_var.copy_from_slice(&state[3 * c..4 * c]);
            }
            _ => {}
        }
        Ok(())
    }

    /// L2 penalty contribution: `l2 * sum(w^2)` over weights (not biases).
    pub fn l2_penalty(&self) -> f64 {
        match self {
            Layer::Conv1D(l) if l.l2 > 0.0 => {
                l.l2 * l.weights.iter().map(|w| w * w).sum::<f64>()
            }
            Layer::Dense(l) if l.l2 > 0.0 => l.l2 * l.weights.iter().map(|w| w * w).sum::<f64>(),
            _ => 0.0,
        }
    }
}
