//! Evaluation metrics — LCC (Pearson), SRCC (Spearman over tie-averaged
//! ranks), MSE and Kendall tau-b — plus aggregation of utterance
//! predictions to speaker-level and system-level group means.
//!
//! Degenerate inputs (zero variance, all ties) surface as explicit
//! undefined flags, never as 0 or NaN: near-zero correlations are
//! meaningful results and must not be conflated with degenerate inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{CorpusManifest, Split};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("no labeled predictions to aggregate")]
    EmptyIntersection,
    #[error("need at least 2 groups after aggregation, got {0}")]
    TooFewGroups(usize),
    #[error("prediction for `{utt_id}` is not finite")]
    NonFinitePrediction { utt_id: String },
    #[error("duplicate prediction for `{utt_id}`")]
    DuplicatePrediction { utt_id: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("predictions file {path} line {line}: {detail}")]
    BadPredictions {
        path: String,
        line: usize,
        detail: String,
    },
}

/// Per-utterance predicted MOS keyed by utterance id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    entries: BTreeMap<String, f64>,
}

impl PredictionSet {
    pub fn new() -> PredictionSet {
        PredictionSet::default()
    }

    pub fn insert(&mut self, utt_id: &str, pred: f64) -> Result<(), MetricsError> {
        if !pred.is_finite() {
            return Err(MetricsError::NonFinitePrediction {
                utt_id: utt_id.to_string(),
            });
        }
        if self.entries.insert(utt_id.to_string(), pred).is_some() {
            return Err(MetricsError::DuplicatePrediction {
                utt_id: utt_id.to_string(),
            });
        }
        Ok(())
    }

    pub fn get(&self, utt_id: &str) -> Option<f64> {
        self.entries.get(utt_id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// CSV form: header `utt_id,pred_mos`, LF endings, ids in sorted order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("utt_id,pred_mos\n");
        for (id, v) in &self.entries {
            out.push_str(&format!("{id},{v}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        fs::write(path, self.to_csv()).map_err(|source| MetricsError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<PredictionSet, MetricsError> {
        let p = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| MetricsError::Io {
            path: p.clone(),
            source,
        })?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "utt_id,pred_mos")) => {}
            other => {
                return Err(MetricsError::BadPredictions {
                    path: p,
                    line: 1,
                    detail: format!("bad header {:?}", other.map(|(_, l)| l)),
                })
            }
        }
        let mut set = PredictionSet::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (id, value) = line.split_once(',').ok_or_else(|| MetricsError::BadPredictions {
                path: p.clone(),
                line: idx + 1,
                detail: "expected `utt_id,pred_mos`".to_string(),
            })?;
            let v: f64 = value.parse().map_err(|_| MetricsError::BadPredictions {
                path: p.clone(),
                line: idx + 1,
                detail: format!("unparseable value `{value}`"),
            })?;
            set.insert(id, v)?;
        }
        Ok(set)
    }
}

/// Aggregation granularity for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Utterance,
    Speaker,
    System,
}

impl Level {
    pub fn parse(token: &str) -> Option<Level> {
        match token {
            "utterance" => Some(Level::Utterance),
            "speaker" => Some(Level::Speaker),
            "system" => Some(Level::System),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Utterance => "utterance",
            Level::Speaker => "speaker",
            Level::System => "system",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grouping key for [`aggregate_by`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupLevel {
    Speaker,
    System,
}

impl GroupLevel {
    pub fn as_level(self) -> Level {
        match self {
            GroupLevel::Speaker => Level::Speaker,
            GroupLevel::System => Level::System,
        }
    }
}

/// Mean true/predicted MOS of one speaker or system over the same
/// utterance set.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAggregate {
    pub group_id: String,
    pub level: GroupLevel,
    pub mean_true: f64,
    pub mean_pred: f64,
    pub count: usize,
}

/// The LCC/SRCC/MSE/KTAU quadruple. Correlations may be undefined on
/// degenerate inputs; MSE is always defined when at least one pair exists.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBundle {
    pub lcc: Option<f64>,
    pub srcc: Option<f64>,
    pub mse: f64,
    pub ktau: Option<f64>,
}

impl MetricBundle {
    /// Flags naming each undefined metric, semicolon-joined in the CSV.
    pub fn flags(&self) -> Vec<&'static str> {
        let mut flags = Vec::new();
        if self.lcc.is_none() {
            flags.push("lcc_undefined");
        }
        if self.srcc.is_none() {
            flags.push("srcc_undefined");
        }
        if self.ktau.is_none() {
            flags.push("ktau_undefined");
        }
        flags
    }

    /// CSV row `level,lcc,srcc,mse,ktau,flags`; undefined metrics print as
    /// `NA`.
    pub fn to_csv_row(&self, level: Level) -> String {
        fn cell(v: Option<f64>) -> String {
            match v {
                Some(x) => format!("{x}"),
                None => "NA".to_string(),
            }
        }
        format!(
            "{},{},{},{},{},{}",
            level,
            cell(self.lcc),
            cell(self.srcc),
            self.mse,
            cell(self.ktau),
            self.flags().join(";")
        )
    }
}

fn check_lengths(x: &[f64], y: &[f64], needed: usize) -> Result<(), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            a: x.len(),
            b: y.len(),
        });
    }
    if x.len() < needed {
        return Err(MetricsError::TooShort {
            needed,
            got: x.len(),
        });
    }
    Ok(())
}

/// Pearson linear correlation in population form (the n factors cancel
/// against the sample form). `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    check_lengths(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (vx * vy).sqrt()))
}

/// Tie-averaged ranks (each tie group receives the mean of the rank
/// positions it spans, 1-based).
pub fn tied_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the mean rank
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson of tie-averaged ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    check_lengths(x, y, 2)?;
    pearson(&tied_ranks(x), &tied_ranks(y))
}

/// Mean squared elementwise difference.
pub fn mse(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(x, y, 1)?;
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / x.len() as f64)
}

/// Kendall tau-b: `(C - D) / sqrt((n0 - n1)(n0 - n2))` where C/D count
/// concordant/discordant pairs, `n0 = n(n-1)/2` and `n1`/`n2` count tied
/// pairs within x and y. `None` when either side is all ties.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    check_lengths(x, y, 2)?;
    let n = x.len();

    // tied-pair counts from sorted run lengths
    fn tied_pairs(values: &[f64]) -> f64 {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut total = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            total += t * (t - 1.0) / 2.0;
            i = j + 1;
        }
        total
    }

    let mut concordant = 0.0f64;
    let mut discordant = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            let s = dx * dy;
            if s > 0.0 {
                concordant += 1.0;
            } else if s < 0.0 {
                discordant += 1.0;
            }
        }
    }

    let n0 = n as f64 * (n as f64 - 1.0) / 2.0;
    let n1 = tied_pairs(x);
    let n2 = tied_pairs(y);
    let denom = (n0 - n1) * (n0 - n2);
    if denom <= 0.0 {
        return Ok(None);
    }
    Ok(Some((concordant - discordant) / denom.sqrt()))
}

/// Groups labeled, predicted utterances by speaker or system and returns
/// one aggregate per group, sorted by group id. Records filtered out by
/// `split` are ignored; predictions for unlabeled utterances are excluded
/// with a warning.
pub fn aggregate_by(
    preds: &PredictionSet,
    manifest: &CorpusManifest,
    level: GroupLevel,
    split: Option<Split>,
) -> Result<Vec<GroupAggregate>, MetricsError> {
    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for r in &manifest.records {
        if let Some(s) = split {
            if r.split != s {
                continue;
            }
        }
        let Some(pred) = preds.get(&r.utt_id) else {
            continue;
        };
        let Some(truth) = r.mos else {
            log::warn!(
                "utterance `{}` has a prediction but no MOS label; excluded from aggregation",
                r.utt_id
            );
            continue;
        };
        let key = match level {
            GroupLevel::Speaker => r.speaker_id.as_str(),
            GroupLevel::System => r.system_id.as_str(),
        };
        let entry = sums.entry(key).or_insert((0.0, 0.0, 0));
        entry.0 += truth;
        entry.1 += pred;
        entry.2 += 1;
    }
    if sums.is_empty() {
        return Err(MetricsError::EmptyIntersection);
    }
    Ok(sums
        .into_iter()
        .map(|(group_id, (st, sp, count))| GroupAggregate {
            group_id: group_id.to_string(),
            level,
            mean_true: st / count as f64,
            mean_pred: sp / count as f64,
            count,
        })
        .collect())
}

/// Labeled (true, pred) pairs at utterance granularity, ordered by
/// utterance id.
pub fn labeled_pairs(
    preds: &PredictionSet,
    manifest: &CorpusManifest,
    split: Option<Split>,
) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(&str, f64, f64)> = manifest
        .records
        .iter()
        .filter(|r| split.map_or(true, |s| r.split == s))
        .filter_map(|r| {
            let pred = preds.get(&r.utt_id)?;
            let truth = r.mos?;
            Some((r.utt_id.as_str(), truth, pred))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    let truths = pairs.iter().map(|p| p.1).collect();
    let predictions = pairs.iter().map(|p| p.2).collect();
    (truths, predictions)
}

/// Computes the four metrics at the requested level. Utterance level uses
/// raw (true, pred) pairs; speaker/system levels use the per-group mean
/// vectors from [`aggregate_by`]. Tau-b over means equals tau over the
/// ordinal rankings of the means, since tau-b is rank-based.
pub fn evaluate(
    preds: &PredictionSet,
    manifest: &CorpusManifest,
    level: Level,
    split: Option<Split>,
) -> Result<MetricBundle, MetricsError> {
    let (truths, predictions) = match level {
        Level::Utterance => {
            let (t, p) = labeled_pairs(preds, manifest, split);
            if t.is_empty() {
                return Err(MetricsError::EmptyIntersection);
            }
            if t.len() < 2 {
                return Err(MetricsError::TooFewGroups(t.len()));
            }
            (t, p)
        }
        Level::Speaker | Level::System => {
            let group_level = if level == Level::Speaker {
                GroupLevel::Speaker
            } else {
                GroupLevel::System
            };
            let aggregates = aggregate_by(preds, manifest, group_level, split)?;
            if aggregates.len() < 2 {
                return Err(MetricsError::TooFewGroups(aggregates.len()));
            }
            (
                aggregates.iter().map(|a| a.mean_true).collect(),
                aggregates.iter().map(|a| a.mean_pred).collect(),
            )
        }
    };
    Ok(MetricBundle {
        lcc: pearson(&truths, &predictions)?,
        srcc: spearman(&truths, &predictions)?,
        mse: mse(&truths, &predictions)?,
        ktau: kendall_tau_b(&truths, &predictions)?,
    })
}

/// CSV report for aggregates: `level,group_id,mean_true,mean_pred,count`.
pub fn aggregates_to_csv(aggregates: &[GroupAggregate]) -> String {
    let mut out = String::from("level,group_id,mean_true,mean_pred,count\n");
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            a.level.as_level(),
            a.group_id,
            a.mean_true,
            a.mean_pred,
            a.count
        ));
    }
    out
}
