//! Adam with bias correction. One [`AdamState`] tracks the moments of one
//! parameter tensor; [`AdamOptimizer`] drives a whole [`Network`].

use super::{Network, NnError};

/// Optimizer hyperparameters. The learning-rate default follows the
/// trained setup; beta/epsilon are the conventional values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> OptimizerConfig {
        OptimizerConfig {
            learning_rate: 0.0001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate >= 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(NnError::InvalidSpec(format!(
                "optimizer lr={} beta1={} beta2={} eps={}",
                self.learning_rate, self.beta1, self.beta2, self.epsilon
            )));
        }
        Ok(())
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(len: usize) -> AdamState {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update at step `t` (1-based):
/// `p -= lr * m_hat / (sqrt(v_hat) + eps)` with bias-corrected moments.
/// A non-finite gradient aborts the step before any parameter moves.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &OptimizerConfig,
    t: u64,
) -> Result<(), NnError> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    assert!(t >= 1, "adam step index is 1-based");
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(NnError::NonFiniteGradient { index });
    }
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Network-wide Adam: one moment pair per parameter tensor, stepped in the
/// network's fixed traversal order.
#[derive(Debug, Clone)]
pub struct AdamOptimizer {
    cfg: OptimizerConfig,
    states: Vec<AdamState>,
    t: u64,
}

impl AdamOptimizer {
    pub fn new(cfg: OptimizerConfig, net: &mut Network) -> AdamOptimizer {
        let mut states = Vec::new();
        net.visit_trainables(&mut |p, _| states.push(AdamState::zeros(p.len())));
        AdamOptimizer { cfg, states, t: 0 }
    }

    pub fn step_index(&self) -> u64 {
        self.t
    }

    /// Applies one update from the network's accumulated gradients. The
    /// whole step aborts (no tensor is touched) if any gradient is
    /// non-finite.
    pub fn step(&mut self, net: &mut Network) -> Result<(), NnError> {
        let mut bad: Option<usize> = None;
        let mut offset = 0usize;
        net.visit_trainables(&mut |_, g| {
            if bad.is_none() {
                if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                    bad = Some(offset + i);
                }
            }
            offset += g.len();
        });
        if let Some(index) = bad {
            return Err(NnError::NonFiniteGradient { index });
        }
        self.t += 1;
        let t = self.t;
        let cfg = self.cfg;
        let mut idx = 0usize;
        let states = &mut self.states;
        let mut result = Ok(());
        net.visit_trainables(&mut |p, g| {
            if result.is_ok() {
                result = adam_step(p, g, &mut states[idx], &cfg, t);
            }
            idx += 1;
        });
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_first_step_leaves_params_unchanged() {
        let mut params = vec![1.0, -2.0, 3.5];
        let grads = vec![0.0, 0.0, 0.0];
        let mut state = AdamState::zeros(3);
        adam_step(&mut params, &grads, &mut state, &OptimizerConfig::default(), 1).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_with_constant_gradient_is_signed_lr() {
        let cfg = OptimizerConfig::default();
        for &g in &[0.5, -3.0, 1e-3] {
            let mut params = vec![0.0];
            let mut state = AdamState::zeros(1);
            adam_step(&mut params, &[g], &mut state, &cfg, 1).unwrap();
            // bias-corrected first step: update = -lr * g / (|g| + eps)
            let expected = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((params[0] - expected).abs() < 1e-15);
            assert!((params[0] + cfg.learning_rate * g.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn updates_decay_after_gradient_goes_quiet() {
        let cfg = OptimizerConfig::default();
        let mut params = vec![0.0];
        let mut state = AdamState::zeros(1);
        adam_step(&mut params, &[2.0], &mut state, &cfg, 1).unwrap();
        let p1 = params[0];
        adam_step(&mut params, &[0.0], &mut state, &cfg, 2).unwrap();
        let p2 = params[0];
        adam_step(&mut params, &[0.0], &mut state, &cfg, 3).unwrap();
        let p3 = params[0];
        let step2 = (p2 - p1).abs();
        let step3 = (p3 - p2).abs();
        assert!(step2 > 0.0);
        assert!(step3 > 0.0);
        assert!(step3 < step2, "momentum decays: {step3} < {step2}");
    }

    #[test]
    fn non_finite_gradient_aborts_without_touching_params() {
        let mut params = vec![1.0, 2.0];
        let mut state = AdamState::zeros(2);
        let err = adam_step(
            &mut params,
            &[0.1, f64::NAN],
            &mut state,
            &OptimizerConfig::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient { index: 1 }));
        assert_eq!(params, vec![1.0, 2.0]);
        assert!(state.m.iter().all(|&v| v == 0.0));
    }
}
