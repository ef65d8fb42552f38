//! Hyperparameter grid search for the low-capacity CNN. Configurations
//! are ranked by speaker-level SRCC on the validation set (ties broken by
//! lower validation MSE, then config order), matching the selection rule
//! used for every reported model.

use std::collections::BTreeMap;

use crate::corpus::CorpusManifest;
use crate::features::Normalizer;
use crate::metrics::{aggregate_by, spearman, GroupLevel, PredictionSet};
use crate::nn::{EarlyStopConfig, OptimizerConfig};

use super::train::{train, LabeledExample};
use super::{build_low_capacity_cnn, LowCapacityCnnConfig, ModelError, TrainedModel};

/// One grid point: model hyperparameters plus the optimizer used to train
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub model: LowCapacityCnnConfig,
    pub opt: OptimizerConfig,
}

/// One leaderboard row, ranked 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub config_index: usize,
    pub config: LowCapacityCnnConfig,
    pub learning_rate: f64,
    pub val_speaker_srcc: Option<f64>,
    pub val_mse: f64,
}

pub type Leaderboard = Vec<LeaderboardEntry>;

/// The full §-grid cartesian product over the declared hyperparameter
/// values, with `base` supplying kernel/pool/seed and the optimizer.
pub fn full_grid(base: &GridEntry) -> Vec<GridEntry> {
    let mut entries = Vec::new();
    for &batchnorm in &[false, true] {
        for &l2 in &LowCapacityCnnConfig::L2_GRID {
            for &dropout in &LowCapacityCnnConfig::DROPOUT_GRID {
                for &filters in &LowCapacityCnnConfig::FILTER_GRID {
                    for &batch_size in &LowCapacityCnnConfig::BATCH_GRID {
                        entries.push(GridEntry {
                            model: LowCapacityCnnConfig {
                                filters,
                                dropout_rate: dropout,
                                l2,
                                input_batchnorm: batchnorm,
                                batch_size,
                                ..base.model.clone()
                            },
                            opt: base.opt,
                        });
                    }
                }
            }
        }
    }
    entries
}

/// Speaker-level SRCC of validation predictions, via per-speaker mean
/// true/predicted MOS.
fn val_speaker_srcc(
    preds: &PredictionSet,
    manifest: &CorpusManifest,
) -> Result<Option<f64>, ModelError> {
    let aggregates = aggregate_by(preds, manifest, GroupLevel::Speaker, None)?;
    if aggregates.len() < 2 {
        return Err(ModelError::DegenerateValSet {
            speakers: aggregates.len(),
        });
    }
    let truths: Vec<f64> = aggregates.iter().map(|a| a.mean_true).collect();
    let predictions: Vec<f64> = aggregates.iter().map(|a| a.mean_pred).collect();
    Ok(spearman(&truths, &predictions)?)
}

/// Trains every grid entry (seed offset by config index) and returns the
/// winner plus the leaderboard sorted by the selection rule. The val set
/// must cover at least 2 speakers with labeled utterances.
pub fn grid_search(
    entries: &[GridEntry],
    input_dim: usize,
    train_set: &[LabeledExample],
    val_set: &[LabeledExample],
    manifest: &CorpusManifest,
    stop: &EarlyStopConfig,
    normalizer: Option<&Normalizer>,
    scale: (f64, f64),
) -> Result<(TrainedModel, Leaderboard), ModelError> {
    if entries.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let speaker_of: BTreeMap<&str, &str> = manifest
        .records
        .iter()
        .map(|r| (r.utt_id.as_str(), r.speaker_id.as_str()))
        .collect();
    let val_speakers: std::collections::BTreeSet<&str> = val_set
        .iter()
        .filter_map(|ex| speaker_of.get(ex.utt_id.as_str()).copied())
        .collect();
    if val_speakers.len() < 2 {
        return Err(ModelError::DegenerateValSet {
            speakers: val_speakers.len(),
        });
    }

    let mut models: Vec<Option<TrainedModel>> = Vec::with_capacity(entries.len());
    let mut rows: Vec<LeaderboardEntry> = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        let mut cfg = entry.model.clone();
        cfg.seed = entry.model.seed.wrapping_add(index as u64);
        let mut untrained = build_low_capacity_cnn(&cfg, input_dim)?.with_scale(scale.0, scale.1);
        if let Some(n) = normalizer {
            untrained = untrained.with_normalizer(n.clone());
        }
        let (trained, history) = train(untrained, train_set, val_set, &entry.opt, stop)?;

        let mut preds = PredictionSet::new();
        for ex in val_set {
            preds.insert(&ex.utt_id, trained.predict(&ex.features)?)?;
        }
        let srcc = val_speaker_srcc(&preds, manifest)?;
        log::info!(
            "grid config {index}: filters={} dropout={} l2={} bn={} batch={} lr={} -> val speaker SRCC {:?}, val MSE {:.6}",
            cfg.filters,
            cfg.dropout_rate,
            cfg.l2,
            cfg.input_batchnorm,
            cfg.batch_size,
            entry.opt.learning_rate,
            srcc,
            history.best_val_mse
        );
        models.push(Some(trained));
        rows.push(LeaderboardEntry {
            rank: 0,
            config_index: index,
            config: cfg,
            learning_rate: entry.opt.learning_rate,
            val_speaker_srcc: srcc,
            val_mse: history.best_val_mse,
        });
    }

    rows.sort_by(|a, b| {
        use std::cmp::Ordering;
        let by_srcc = match (a.val_speaker_srcc, b.val_speaker_srcc) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_srcc
            .then(a.val_mse.total_cmp(&b.val_mse))
            .then(a.config_index.cmp(&b.config_index))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    let winner = models[rows[0].config_index].take().expect("winner exists");
    Ok((winner, rows))
}

/// Leaderboard CSV:
/// `rank,filters,dropout,l2,input_batchnorm,batch_size,seed,learning_rate,val_speaker_srcc,val_mse`.
pub fn leaderboard_to_csv(leaderboard: &Leaderboard) -> String {
    let mut out = String::from(
        "rank,filters,dropout,l2,input_batchnorm,batch_size,seed,learning_rate,val_speaker_srcc,val_mse\n",
    );
    for row in leaderboard {
        let srcc = match row.val_speaker_srcc {
            Some(v) => format!("{v}"),
            None => "NA".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.rank,
            row.config.filters,
            row.config.dropout_rate,
            row.config.l2,
            row.config.input_batchnorm,
            row.config.batch_size,
            row.config.seed,
            row.learning_rate,
            srcc,
            row.val_mse
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Split, UtteranceRecord};
    use crate::features::FeatureMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Embedding corpus with learnable signal: component 0 carries the
    /// (noisy) MOS, the rest is noise.
    fn synthetic_embedding_data(
        dim: usize,
    ) -> (CorpusManifest, Vec<LabeledExample>, Vec<LabeledExample>) {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut records = Vec::new();
        let mut train_set = Vec::new();
        let mut val_set = Vec::new();
        // speakers 0..5 with distinct base quality; first 4 train, last 2 val
        for speaker in 0..6usize {
            let base = 2.0 + speaker as f64 * 1.3;
            for utt in 0..8usize {
                let utt_id = format!("s{speaker}u{utt}");
                let mos = (base + rng.gen_range(-0.4..0.4)).clamp(1.0, 10.0);
                let split = if speaker < 4 { Split::Train } else { Split::Val };
                records.push(UtteranceRecord {
                    utt_id: utt_id.clone(),
                    speaker_id: format!("spk{speaker}"),
                    system_id: "sys0".to_string(),
                    mos: Some(mos),
                    split,
                    audio_path: format!("{utt_id}.wav"),
                });
                let mut values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
                values[0] = mos / 10.0 + rng.gen_range(-0.02..0.02);
                values[1] = -mos / 10.0;
                let example = LabeledExample {
                    utt_id,
                    features: FeatureMatrix::embedding(values).unwrap(),
                    mos,
                };
                if split == Split::Train {
                    train_set.push(example);
                } else {
                    val_set.push(example);
                }
            }
        }
        let manifest = CorpusManifest::new(records, 1.0, 10.0).unwrap();
        (manifest, train_set, val_set)
    }

    fn quick_stop() -> EarlyStopConfig {
        EarlyStopConfig {
            patience: 5,
            max_epochs: 25,
            min_delta: 0.0,
        }
    }

    #[test]
    fn single_config_grid_wins() {
        let (manifest, train_set, val_set) = synthetic_embedding_data(80);
        let entry = GridEntry {
            model: LowCapacityCnnConfig {
                filters: 16,
                batch_size: 8,
                seed: 1,
                ..LowCapacityCnnConfig::default()
            },
            opt: OptimizerConfig {
                learning_rate: 0.005,
                ..OptimizerConfig::default()
            },
        };
        let (winner, board) = grid_search(
            std::slice::from_ref(&entry),
            80,
            &train_set,
            &val_set,
            &manifest,
            &quick_stop(),
            None,
            (1.0, 10.0),
        )
        .unwrap();
        assert_eq!(board.len(), 1);
        assert_eq!(board[0].rank, 1);
        assert_eq!(board[0].config_index, 0);
        assert_eq!(winner.config.batch_size(), 8);
    }

    #[test]
    fn learning_config_beats_frozen_config_and_board_is_sorted() {
        let (manifest, train_set, val_set) = synthetic_embedding_data(80);
        let model = LowCapacityCnnConfig {
            filters: 16,
            batch_size: 8,
            seed: 2,
            ..LowCapacityCnnConfig::default()
        };
        let entries = vec![
            GridEntry {
                model: model.clone(),
                opt: OptimizerConfig {
                    learning_rate: 0.0,
                    ..OptimizerConfig::default()
                },
            },
            GridEntry {
                model,
                opt: OptimizerConfig {
                    learning_rate: 0.005,
                    ..OptimizerConfig::default()
                },
            },
        ];
        let (winner, board) = grid_search(
            &entries,
            80,
            &train_set,
            &val_set,
            &manifest,
            &quick_stop(),
            None,
            (1.0, 10.0),
        )
        .unwrap();
        assert_eq!(board[0].config_index, 1, "learning config should win");
        assert_eq!(winner.config.seed(), board[0].config.seed);
        // descending by SRCC (undefined last)
        for pair in board.windows(2) {
            match (pair[0].val_speaker_srcc, pair[1].val_speaker_srcc) {
                (Some(a), Some(b)) => assert!(a >= b),
                (None, Some(_)) => panic!("undefined ranked above defined"),
                _ => {}
            }
        }
        // winner's SRCC >= every other entry's
        let top = board[0].val_speaker_srcc.unwrap();
        for row in &board[1..] {
            if let Some(s) = row.val_speaker_srcc {
                assert!(top >= s);
            }
        }
    }

    #[test]
    fn degenerate_val_set_is_rejected() {
        let (manifest, train_set, val_set) = synthetic_embedding_data(80);
        let single_speaker: Vec<LabeledExample> = val_set
            .iter()
            .filter(|ex| ex.utt_id.starts_with("s4"))
            .cloned()
            .collect();
        let entry = GridEntry {
            model: LowCapacityCnnConfig::default(),
            opt: OptimizerConfig::default(),
        };
        assert!(matches!(
            grid_search(
                std::slice::from_ref(&entry),
                80,
                &train_set,
                &single_speaker,
                &manifest,
                &quick_stop(),
                None,
                (1.0, 10.0),
            ),
            Err(ModelError::DegenerateValSet { speakers: 1 })
        ));
        assert!(matches!(
            grid_search(
                &[],
                80,
                &train_set,
                &val_set,
                &manifest,
                &quick_stop(),
                None,
                (1.0, 10.0)
            ),
            Err(ModelError::EmptyGrid)
        ));
    }

    #[test]
    fn full_grid_enumerates_the_declared_product() {
        let base = GridEntry {
            model: LowCapacityCnnConfig::default(),
            opt: OptimizerConfig::default(),
        };
        let grid = full_grid(&base);
        // 2 batchnorm x 4 l2 x 3 dropout x 4 filters x 3 batch sizes
        assert_eq!(grid.len(), 2 * 4 * 3 * 4 * 3);
        assert!(grid.iter().any(|e| e.model.filters == 128
            && e.model.input_batchnorm
            && e.model.l2 == 0.1
            && e.model.batch_size == 64));
    }
}
