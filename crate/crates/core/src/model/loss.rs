//! Alpha-weighted dual loss: utterance squared error plus `alpha` times
//! the mean frame squared error against the shared utterance target.
//! Frame targets do not exist; the utterance label supervises every frame.

/// `loss = (utt_pred - target)^2 + alpha * mean_t (frame_preds[t] - target)^2`.
///
/// With `alpha == 0` (or no frame predictions) this is bitwise the squared
/// utterance error; the frame term is never computed.
pub fn dual_loss(utt_pred: f64, frame_preds: &[f64], target: f64, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha), "alpha out of range");
    let utt_err = (utt_pred - target) * (utt_pred - target);
    if alpha == 0.0 || frame_preds.is_empty() {
        return utt_err;
    }
    let frame_mse = frame_preds
        .iter()
        .map(|&f| (f - target) * (f - target))
        .sum::<f64>()
        / frame_preds.len() as f64;
    utt_err + alpha * frame_mse
}

/// Gradient of [`dual_loss`] w.r.t. the frame-score vector of a frame
/// model, where the utterance score is the mean of the frames:
/// `d/df_t = 2(utt - y)/T + alpha * 2(f_t - y)/T`.
pub(crate) fn frame_loss_grad(frames: &[f64], utt_pred: f64, target: f64, alpha: f64) -> Vec<f64> {
    let t = frames.len() as f64;
    let utt_term = 2.0 * (utt_pred - target) / t;
    frames
        .iter()
        .map(|&f| utt_term + alpha * 2.0 * (f - target) / t)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_zero_for_any_alpha() {
        for alpha in [0.0, 0.5, 1.0] {
            assert_eq!(dual_loss(5.0, &[5.0, 5.0], 5.0, alpha), 0.0);
        }
    }

    #[test]
    fn alpha_zero_reduces_to_utterance_mse() {
        assert_eq!(dual_loss(4.0, &[100.0, -3.0], 5.0, 0.0), 1.0);
        assert_eq!(dual_loss(4.0, &[], 5.0, 0.0), 1.0);
    }

    #[test]
    fn hand_evaluated_fixture() {
        // (4-5)^2 + 1 * ((3-5)^2 + (5-5)^2)/2 = 1 + 2 = 3
        assert_eq!(dual_loss(4.0, &[3.0, 5.0], 5.0, 1.0), 3.0);
    }

    #[test]
    fn alpha_zero_is_bitwise_squared_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let utt: f64 = rng.gen_range(-20.0..20.0);
            let target: f64 = rng.gen_range(-20.0..20.0);
            let frames: Vec<f64> = (0..rng.gen_range(0..8))
                .map(|_| rng.gen_range(-20.0..20.0))
                .collect();
            let direct = (utt - target) * (utt - target);
            assert_eq!(dual_loss(utt, &frames, target, 0.0).to_bits(), direct.to_bits());
        }
    }

    #[test]
    fn loss_is_nonnegative_and_zero_iff_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let target: f64 = rng.gen_range(1.0..10.0);
            let utt: f64 = rng.gen_range(1.0..10.0);
            let frames: Vec<f64> = (0..3).map(|_| rng.gen_range(1.0..10.0)).collect();
            let alpha: f64 = rng.gen_range(0.0..=1.0);
            let l = dual_loss(utt, &frames, target, alpha);
            assert!(l >= 0.0);
        }
        assert_eq!(dual_loss(7.0, &[7.0, 7.0, 7.0], 7.0, 1.0), 0.0);
        assert!(dual_loss(7.0, &[7.0, 7.1, 7.0], 7.0, 1.0) > 0.0);
    }

    #[test]
    fn loss_is_monotone_in_alpha_when_frames_err() {
        let alphas = [0.0, 0.5, 1.0];
        let losses: Vec<f64> = alphas
            .iter()
            .map(|&a| dual_loss(5.0, &[4.0, 6.5], 5.0, a))
            .collect();
        assert!(losses[0] <= losses[1] && losses[1] <= losses[2]);
        assert!(losses[0] < losses[2]);
    }

    #[test]
    fn frame_gradient_matches_finite_differences() {
        let frames = vec![3.0, 5.0, 6.5];
        let target = 5.0;
        let alpha = 0.7;
        let utt = frames.iter().sum::<f64>() / frames.len() as f64;
        let grad = frame_loss_grad(&frames, utt, target, alpha);
        let h = 1e-7;
        for i in 0..frames.len() {
            let mut plus = frames.clone();
            plus[i] += h;
            let mut minus = frames.clone();
            minus[i] -= h;
            let lp = dual_loss(
                plus.iter().sum::<f64>() / 3.0,
                &plus,
                target,
                alpha,
            );
            let lm = dual_loss(
                minus.iter().sum::<f64>() / 3.0,
                &minus,
                target,
                alpha,
            );
            let numeric = (lp - lm) / (2.0 * h);
            assert!((grad[i] - numeric).abs() < 1e-6);
        }
    }
}
