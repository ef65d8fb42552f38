//! Mini-batch training with Adam, seeded shuffling and early stopping on
//! validation MSE. Per-sample gradients within a batch fan out across
//! worker threads; the reduction runs serially in sample order, so results
//! are bit-identical regardless of thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::{apply_normalizer, FeatureMatrix};
use crate::nn::{AdamOptimizer, EarlyStopConfig, Mode, Network, OptimizerConfig, Tensor2D};

use super::loss::{dual_loss, frame_loss_grad};
use super::{
    features_to_tensor, score_output, Architecture, ModelConfig, ModelError, TrainedModel,
    UntrainedModel,
};

/// One training or validation item: raw (un-normalized) features plus the
/// MOS target.
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub utt_id: String,
    pub features: FeatureMatrix,
    pub mos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

/// Stop rule: an epoch "improves" when val MSE drops below the best seen
/// by more than `min_delta`; `patience` consecutive non-improving epochs
/// end training.
pub(crate) struct EarlyStopper {
    cfg: EarlyStopConfig,
    best: f64,
    best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopper {
    pub fn new(cfg: EarlyStopConfig) -> EarlyStopper {
        EarlyStopper {
            cfg,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    /// Returns true when this epoch set a new best (caller snapshots).
    pub fn observe(&mut self, epoch: usize, val_mse: f64) -> bool {
        if val_mse < self.best - self.cfg.min_delta {
            self.best = val_mse;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            true
        } else {
            self.bad_epochs += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.bad_epochs >= self.cfg.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

struct SamplePass {
    loss: f64,
    grads: Vec<f64>,
    bn_stats: Vec<(Vec<f64>, Vec<f64>)>,
}

fn sample_pass(
    template: &Network,
    config: &ModelConfig,
    x: &Tensor2D,
    target: f64,
    dropout_seed: u64,
) -> Result<SamplePass, ModelError> {
    let mut net = template.clone();
    net.zero_grads();
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let out = net.forward(x, Mode::Train, Some(&mut rng))?;
    let (loss, out_grad) = match config.architecture() {
        Architecture::LowCapacity => {
            let u = out.data()[0];
            let mut g = Tensor2D::zeros(out.rows(), out.cols());
            g.data_mut()[0] = 2.0 * (u - target);
            (dual_loss(u, &[], target, 0.0), g)
        }
        Architecture::Frame => {
            let frames = out.data();
            let u = frames.iter().sum::<f64>() / frames.len() as f64;
            let alpha = config.alpha();
            let g = frame_loss_grad(frames, u, target, alpha);
            (
                dual_loss(u, frames, target, alpha),
                Tensor2D::new(out.rows(), out.cols(), g),
            )
        }
    };
    net.backward(&out_grad);
    Ok(SamplePass {
        loss,
        grads: net.grads_flat(),
        bn_stats: net.bn_batch_stats(),
    })
}

fn prepare_tensors(
    model: &UntrainedModel,
    set: &[LabeledExample],
) -> Result<Vec<(Tensor2D, f64)>, ModelError> {
    set.iter()
        .map(|ex| {
            super::check_features(&model.config, model.input_dim, &ex.features)?;
            let m = match &model.normalizer {
                Some(n) => apply_normalizer(n, &ex.features)?,
                None => ex.features.clone(),
            };
            Ok((features_to_tensor(&model.config, &m), ex.mos))
        })
        .collect()
}

fn validation_mse(net: &Network, config: &ModelConfig, val: &[(Tensor2D, f64)]) -> f64 {
    // eval on a scratch clone so the parameter-store network never carries
    // activation caches into the per-sample worker clones
    let mut scratch = net.clone();
    let mut total = 0.0;
    for (x, target) in val {
        let out = scratch
            .forward(x, Mode::Eval, None)
            .expect("validation shapes were checked up front");
        let (utt, _) = score_output(config, &out);
        total += (utt - target) * (utt - target);
    }
    total / val.len() as f64
}

/// Trains `model` until early stopping or `stop.max_epochs`, returning the
/// weights from the best-validation-MSE epoch plus the per-epoch history.
/// Shuffling, dropout and weight init all derive from the config seed.
pub fn train(
    model: UntrainedModel,
    train_set: &[LabeledExample],
    val_set: &[LabeledExample],
    opt: &OptimizerConfig,
    stop: &EarlyStopConfig,
) -> Result<(TrainedModel, TrainingHistory), ModelError> {
    if train_set.is_empty() {
        return Err(ModelError::EmptySet("train"));
    }
    if val_set.is_empty() {
        return Err(ModelError::EmptySet("val"));
    }
    opt.validate()?;

    let batch_size = model.config.batch_size();
    let train_tensors = prepare_tensors(&model, train_set)?;
    let val_tensors = prepare_tensors(&model, val_set)?;

    let UntrainedModel {
        network: mut net,
        config,
        input_dim,
        normalizer,
        stft,
        scale_min,
        scale_max,
    } = model;
    let mut optimizer = AdamOptimizer::new(*opt, &mut net);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(config.seed(), &[1]));

    let mut stopper = EarlyStopper::new(*stop);
    let mut best_net = net.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_tensors.len()).collect();

    for epoch in 1..=stop.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            // pre-draw dropout streams serially so the fan-out stays
            // deterministic under any thread schedule
            let seeds: Vec<u64> = batch.iter().map(|_| rng.gen()).collect();
            let passes: Vec<SamplePass> = batch
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(&idx, &seed)| {
                    let (x, target) = &train_tensors[idx];
                    sample_pass(&net, &config, x, *target, seed)
                })
                .collect::<Result<_, _>>()?;

            let mut grads = vec![0.0; passes[0].grads.len()];
            for pass in &passes {
                if !pass.loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch });
                }
                epoch_loss_sum += pass.loss;
                for (acc, g) in grads.iter_mut().zip(&pass.grads) {
                    *acc += g;
                }
                net.commit_bn_stats(&pass.bn_stats);
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            net.set_grads_flat(&grads);
            optimizer
                .step(&mut net)
                .map_err(|_| ModelError::NonFiniteLoss { epoch })?;
        }

        let train_loss = epoch_loss_sum / train_tensors.len() as f64 + net.l2_penalty();
        let val_mse = validation_mse(&net, &config, &val_tensors);
        if !train_loss.is_finite() || !val_mse.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_mse,
        });
        log::debug!("epoch {epoch}: train loss {train_loss:.6}, val mse {val_mse:.6}");

        if stopper.observe(epoch, val_mse) {
            best_net = net.clone();
        }
        if stopper.should_stop() {
            break;
        }
    }

    let trained = TrainedModel {
        network: best_net,
        config,
        input_dim,
        normalizer,
        stft,
        scale_min,
        scale_max,
    };
    let history = TrainingHistory {
        epochs: history,
        best_epoch: stopper.best_epoch(),
        best_val_mse: stopper.best(),
    };
    Ok((trained, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::model::{build_frame_model, build_low_capacity_cnn, LowCapacityCnnConfig};

    fn embedding_example(utt: &str, dim: usize, fill: f64, mos: f64) -> LabeledExample {
        LabeledExample {
            utt_id: utt.to_string(),
            features: FeatureMatrix::embedding(vec![fill; dim]).unwrap(),
            mos,
        }
    }

    fn random_embedding_example(
        utt: &str,
        dim: usize,
        mos: f64,
        rng: &mut ChaCha8Rng,
    ) -> LabeledExample {
        let values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        LabeledExample {
            utt_id: utt.to_string(),
            features: FeatureMatrix::embedding(values).unwrap(),
            mos,
        }
    }

    #[test]
    fn early_stopper_follows_the_declared_rule() {
        // val MSE strictly increasing from epoch 1, patience 3:
        // epoch 1 improves, epochs 2-4 do not, stop after epoch 4,
        // best weights are epoch 1's
        let mut stopper = EarlyStopper::new(EarlyStopConfig {
            patience: 3,
            max_epochs: 100,
            min_delta: 0.0,
        });
        assert!(stopper.observe(1, 1.0));
        assert!(!stopper.should_stop());
        assert!(!stopper.observe(2, 1.1));
        assert!(!stopper.should_stop());
        assert!(!stopper.observe(3, 1.2));
        assert!(!stopper.should_stop());
        assert!(!stopper.observe(4, 1.3));
        assert!(stopper.should_stop());
        assert_eq!(stopper.best_epoch(), 1);
    }

    #[test]
    fn early_stopper_min_delta_counts_marginal_gains_as_stagnation() {
        let mut stopper = EarlyStopper::new(EarlyStopConfig {
            patience: 2,
            max_epochs: 100,
            min_delta: 0.1,
        });
        assert!(stopper.observe(1, 1.0));
        assert!(!stopper.observe(2, 0.95)); // improved, but under min_delta
        assert!(!stopper.observe(3, 0.92));
        assert!(stopper.should_stop());
        assert_eq!(stopper.best_epoch(), 1);
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let cfg = LowCapacityCnnConfig {
            dropout_rate: 0.1,
            batch_size: 2,
            seed: 5,
            ..LowCapacityCnnConfig::default()
        };
        let mut untrained = build_low_capacity_cnn(&cfg, 80).unwrap();
        let before = untrained.network_mut().params_flat();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train_set: Vec<LabeledExample> = (0..4)
            .map(|i| random_embedding_example(&format!("t{i}"), 80, 5.0, &mut rng))
            .collect();
        let val_set = vec![random_embedding_example("v0", 80, 5.0, &mut rng)];
        let opt = OptimizerConfig {
            learning_rate: 0.0,
            ..OptimizerConfig::default()
        };
        let stop = EarlyStopConfig {
            max_epochs: 1,
            ..EarlyStopConfig::default()
        };
        let (trained, history) = train(untrained, &train_set, &val_set, &opt, &stop).unwrap();
        let mut net = trained.network.clone();
        assert_eq!(net.params_flat(), before);
        assert_eq!(history.epochs.len(), 1);
    }

    #[test]
    fn constant_target_dataset_converges_to_it() {
        let cfg = LowCapacityCnnConfig {
            dropout_rate: 0.1,
            batch_size: 4,
            seed: 11,
            ..LowCapacityCnnConfig::default()
        };
        let untrained = build_low_capacity_cnn(&cfg, 80).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train_set: Vec<LabeledExample> = (0..24)
            .map(|i| random_embedding_example(&format!("t{i}"), 80, 5.0, &mut rng))
            .collect();
        let val_set: Vec<LabeledExample> = (0..8)
            .map(|i| random_embedding_example(&format!("v{i}"), 80, 5.0, &mut rng))
            .collect();
        let opt = OptimizerConfig {
            learning_rate: 0.01,
            ..OptimizerConfig::default()
        };
        let stop = EarlyStopConfig {
            max_epochs: 60,
            ..EarlyStopConfig::default()
        };
        let (trained, _) = train(untrained, &train_set, &val_set, &opt, &stop).unwrap();
        for ex in &train_set {
            let p = trained.predict(&ex.features).unwrap();
            assert!((p - 5.0).abs() < 0.5, "prediction {p} not within 0.5 of 5");
        }
    }

    #[test]
    fn empty_sets_are_rejected() {
        let cfg = LowCapacityCnnConfig::default();
        let untrained = build_low_capacity_cnn(&cfg, 80).unwrap();
        let example = embedding_example("a", 80, 0.1, 5.0);
        let opt = OptimizerConfig::default();
        let stop = EarlyStopConfig::default();
        assert!(matches!(
            train(untrained.clone(), &[], &[example.clone()], &opt, &stop),
            Err(ModelError::EmptySet("train"))
        ));
        assert!(matches!(
            train(untrained, &[example], &[], &opt, &stop),
            Err(ModelError::EmptySet("val"))
        ));
    }

    #[test]
    fn training_is_bit_deterministic_for_a_fixed_seed() {
        let run = || {
            let cfg = LowCapacityCnnConfig {
                dropout_rate: 0.2,
                input_batchnorm: true,
                batch_size: 3,
                seed: 77,
                ..LowCapacityCnnConfig::default()
            };
            let untrained = build_low_capacity_cnn(&cfg, 80).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let train_set: Vec<LabeledExample> = (0..10)
                .map(|i| {
                    random_embedding_example(&format!("t{i}"), 80, 3.0 + (i % 5) as f64, &mut rng)
                })
                .collect();
            let val_set: Vec<LabeledExample> = (0..4)
                .map(|i| random_embedding_example(&format!("v{i}"), 80, 4.0, &mut rng))
                .collect();
            let opt = OptimizerConfig {
                learning_rate: 0.003,
                ..OptimizerConfig::default()
            };
            let stop = EarlyStopConfig {
                max_epochs: 5,
                ..EarlyStopConfig::default()
            };
            let (trained, history) = train(untrained, &train_set, &val_set, &opt, &stop).unwrap();
            (trained.network.clone().params_flat(), history)
        };
        let (params_a, history_a) = run();
        let (params_b, history_b) = run();
        assert_eq!(params_a, params_b);
        assert_eq!(history_a, history_b);
    }

    #[test]
    fn frame_model_trains_and_returns_history() {
        use rand::Rng;
        let cfg = crate::model::FrameModelConfig {
            filters: 4,
            batch_size: 4,
            seed: 9,
            ..crate::model::FrameModelConfig::default()
        };
        let untrained = build_frame_model(&cfg, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut example = |utt: &str, mos: f64| {
            let rows = 80;
            let data: Vec<f64> = (0..rows * 5).map(|_| rng.gen_range(0.0..mos)).collect();
            LabeledExample {
                utt_id: utt.to_string(),
                features: FeatureMatrix::new(FeatureKind::Spectrogram, rows, 5, data).unwrap(),
                mos,
            }
        };
        let train_set: Vec<LabeledExample> = (0..8)
            .map(|i| example(&format!("t{i}"), 2.0 + (i % 4) as f64))
            .collect();
        let val_set: Vec<LabeledExample> =
            (0..3).map(|i| example(&format!("v{i}"), 4.0)).collect();
        let opt = OptimizerConfig {
            learning_rate: 0.001,
            ..OptimizerConfig::default()
        };
        let stop = EarlyStopConfig {
            max_epochs: 3,
            ..EarlyStopConfig::default()
        };
        let (trained, history) = train(untrained, &train_set, &val_set, &opt, &stop).unwrap();
        assert_eq!(history.epochs.len(), 3);
        assert!(history.best_epoch >= 1);
        let (utt, frames) = trained.predict_detailed(&train_set[0].features).unwrap();
        assert!(utt.is_finite());
        assert!(!frames.is_empty());
    }
}
