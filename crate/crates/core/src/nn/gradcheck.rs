//! Central finite-difference gradient verification. Runs the network in
//! eval mode so dropout is off and batch statistics stay frozen; the loss
//! under test is `data_loss(output) + l2_penalty`.

use super::tensor::Tensor2D;
use super::{Mode, Network, NnError};

/// Differentiable loss head: maps the network output tensor to the scalar
/// data loss and its gradient w.r.t. that output.
pub type DataLoss<'a> = &'a dyn Fn(&Tensor2D) -> (f64, Tensor2D);

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub params_checked: usize,
}

/// Analytic parameter gradients of `data_loss + l2_penalty` via one
/// forward/backward pass, flattened in network traversal order.
pub fn analytic_gradients(
    net: &mut Network,
    input: &Tensor2D,
    data_loss: DataLoss,
) -> Result<Vec<f64>, NnError> {
    net.zero_grads();
    let out = net.forward(input, Mode::Eval, None)?;
    let (_, out_grad) = data_loss(&out);
    net.backward(&out_grad);
    Ok(net.grads_flat())
}

fn loss_at(net: &mut Network, input: &Tensor2D, data_loss: DataLoss) -> Result<f64, NnError> {
    let out = net.forward(input, Mode::Eval, None)?;
    Ok(data_loss(&out).0 + net.l2_penalty())
}

/// Compares supplied analytic gradients against central finite
/// differences. Relative error per parameter is
/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn compare_gradients(
    net: &mut Network,
    analytic: &[f64],
    input: &Tensor2D,
    data_loss: DataLoss,
    h: f64,
) -> Result<GradCheckReport, NnError> {
    let base = net.params_flat();
    assert_eq!(analytic.len(), base.len(), "gradient length mismatch");
    let mut probe = base.clone();
    let mut max_rel_error = 0.0f64;
    let mut worst_param = 0usize;
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        net.set_params_flat(&probe);
        let plus = loss_at(net, input, data_loss)?;
        probe[i] = base[i] - h;
        net.set_params_flat(&probe);
        let minus = loss_at(net, input, data_loss)?;
        probe[i] = base[i];
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_param = i;
        }
    }
    net.set_params_flat(&base);
    Ok(GradCheckReport {
        max_rel_error,
        worst_param,
        params_checked: base.len(),
    })
}

/// Full check: computes analytic gradients, then compares them against
/// central finite differences over every parameter.
pub fn gradient_check(
    net: &mut Network,
    input: &Tensor2D,
    data_loss: DataLoss,
    h: f64,
) -> Result<GradCheckReport, NnError> {
    let analytic = analytic_gradients(net, input, data_loss)?;
    compare_gradients(net, &analytic, input, data_loss, h)
}
