//! Model persistence. Little-endian layout: magic `MOSR`, version u32,
//! architecture u8, a length-prefixed UTF-8 config block of key=value
//! lines, a normalizer block (present flag, then per-column mean/sd as
//! f32), then one weight block per layer as (layer index u32, parameter
//! count u64, f32 values). Weights are stored 32-bit and promoted to
//! 64-bit on load.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::features::{FeatureKind, Normalizer, StftConfig, WindowKind};

use super::{
    build_frame_model, build_low_capacity_cnn, Architecture, FrameModelConfig,
    LowCapacityCnnConfig, ModelConfig, ModelError, TrainedModel,
};

const MAGIC: &[u8; 4] = b"MOSR";
const FORMAT_VERSION: u32 = 1;

fn config_text(model: &TrainedModel) -> String {
    let mut lines = Vec::new();
    lines.push(format!("architecture={}", model.architecture().as_str()));
    lines.push(format!("input_dim={}", model.input_dim));
    lines.push(format!("scale_min={}", model.scale_min));
    lines.push(format!("scale_max={}", model.scale_max));
    match &model.config {
        ModelConfig::LowCapacity(c) => {
            lines.push(format!("filters={}", c.filters));
            lines.push(format!("kernel={}", c.kernel));
            lines.push(format!("pool={}", c.pool));
            lines.push(format!("dropout={}", c.dropout_rate));
            lines.push(format!("l2={}", c.l2));
            lines.push(format!("input_batchnorm={}", c.input_batchnorm));
            lines.push(format!("batch_size={}", c.batch_size));
            lines.push(format!("seed={}", c.seed));
        }
        ModelConfig::Frame(c) => {
            lines.push(format!("filters={}", c.filters));
            lines.push(format!("kernel={}", c.kernel));
            lines.push(format!("pool={}", c.pool));
            lines.push(format!("alpha={}", c.alpha));
            lines.push(format!("l2={}", c.l2));
            lines.push(format!("batch_size={}", c.batch_size));
            lines.push(format!("seed={}", c.seed));
        }
    }
    if let Some(stft) = &model.stft {
        lines.push(format!("stft_fft={}", stft.fft_size));
        lines.push(format!("stft_hop={}", stft.hop));
        lines.push(format!("stft_window={}", stft.window.as_str()));
        lines.push(format!("stft_log={}", stft.log_compress));
    }
    lines.join("\n")
}

/// Serializes a trained model.
pub fn save_model(path: &Path, model: &TrainedModel) -> Result<(), ModelError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(match model.architecture() {
        Architecture::LowCapacity => 0u8,
        Architecture::Frame => 1u8,
    });
    let config = config_text(model);
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(config.as_bytes());

    match &model.normalizer {
        None => out.push(0u8),
        Some(n) => {
            out.push(1u8);
            out.push(match n.kind() {
                FeatureKind::Spectrogram => 0u8,
                FeatureKind::Embedding => 1u8,
            });
            out.extend_from_slice(&(n.cols() as u32).to_le_bytes());
            for &m in n.mean() {
                out.extend_from_slice(&(m as f32).to_le_bytes());
            }
            for &s in n.sd() {
                out.extend_from_slice(&(s as f32).to_le_bytes());
            }
        }
    }

    let layers = model.network.layers();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for (i, layer) in layers.iter().enumerate() {
        let state = layer.state();
        out.extend_from_slice(&(i as u32).to_le_bytes());
        out.extend_from_slice(&(state.len() as u64).to_le_bytes());
        for v in state {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }

    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        if self.at + n > self.bytes.len() {
            return Err(ModelError::TruncatedModel {
                path: self.path.clone(),
                detail: what.to_string(),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelError> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, ModelError> {
        let b = self.take(n * 4, what)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}

fn parse_kv(path: &str, text: &str) -> Result<BTreeMap<String, String>, ModelError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ModelError::BadConfig {
            path: path.to_string(),
            detail: format!("line without `=`: {line}"),
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(
    path: &str,
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<T, ModelError> {
    let raw = map.get(key).ok_or_else(|| ModelError::BadConfig {
        path: path.to_string(),
        detail: format!("missing key `{key}`"),
    })?;
    raw.parse().map_err(|_| ModelError::BadConfig {
        path: path.to_string(),
        detail: format!("bad value for `{key}`: {raw}"),
    })
}

/// Loads a model saved by [`save_model`], rebuilding the architecture from
/// the config echo and then replacing the initialized weights with the
/// stored ones.
pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    let p = path.display().to_string();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| ModelError::Io {
            path: p.clone(),
            source,
        })?;
    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(ModelError::BadMagic { path: p });
    }
    let mut cur = Cursor {
        bytes: &bytes,
        at: 4,
        path: p.clone(),
    };
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(ModelError::BadVersion {
            path: p,
            got: version,
        });
    }
    let arch_byte = cur.u8("architecture")?;
    let config_len = cur.u32("config length")? as usize;
    let config_bytes = cur.take(config_len, "config block")?;
    let config_text = std::str::from_utf8(config_bytes).map_err(|_| ModelError::BadConfig {
        path: p.clone(),
        detail: "config block is not UTF-8".to_string(),
    })?;
    let kv = parse_kv(&p, config_text)?;

    let input_dim: usize = field(&p, &kv, "input_dim")?;
    let scale_min: f64 = field(&p, &kv, "scale_min")?;
    let scale_max: f64 = field(&p, &kv, "scale_max")?;
    let mut untrained = match arch_byte {
        0 => {
            let cfg = LowCapacityCnnConfig {
                filters: field(&p, &kv, "filters")?,
                kernel: field(&p, &kv, "kernel")?,
                pool: field(&p, &kv, "pool")?,
                dropout_rate: field(&p, &kv, "dropout")?,
                l2: field(&p, &kv, "l2")?,
                input_batchnorm: field(&p, &kv, "input_batchnorm")?,
                batch_size: field(&p, &kv, "batch_size")?,
                seed: field(&p, &kv, "seed")?,
            };
            build_low_capacity_cnn(&cfg, input_dim)?
        }
        1 => {
            let cfg = FrameModelConfig {
                filters: field(&p, &kv, "filters")?,
                kernel: field(&p, &kv, "kernel")?,
                pool: field(&p, &kv, "pool")?,
                alpha: field(&p, &kv, "alpha")?,
                l2: field(&p, &kv, "l2")?,
                batch_size: field(&p, &kv, "batch_size")?,
                seed: field(&p, &kv, "seed")?,
            };
            build_frame_model(&cfg, input_dim)?
        }
        other => {
            return Err(ModelError::BadConfig {
                path: p,
                detail: format!("unknown architecture byte {other}"),
            })
        }
    };
    untrained = untrained.with_scale(scale_min, scale_max);
    if kv.contains_key("stft_fft") {
        let window_token: String = field(&p, &kv, "stft_window")?;
        let window = WindowKind::parse(&window_token).ok_or_else(|| ModelError::BadConfig {
            path: p.clone(),
            detail: format!("unknown stft window `{window_token}`"),
        })?;
        untrained = untrained.with_stft(StftConfig {
            fft_size: field(&p, &kv, "stft_fft")?,
            hop: field(&p, &kv, "stft_hop")?,
            window,
            log_compress: field(&p, &kv, "stft_log")?,
        });
    }

    if cur.u8("normalizer flag")? == 1 {
        let kind = match cur.u8("normalizer kind")? {
            0 => FeatureKind::Spectrogram,
            1 => FeatureKind::Embedding,
            other => {
                return Err(ModelError::BadConfig {
                    path: p,
                    detail: format!("unknown normalizer kind byte {other}"),
                })
            }
        };
        let cols = cur.u32("normalizer cols")? as usize;
        let mean = cur.f32s(cols, "normalizer means")?;
        let sd = cur.f32s(cols, "normalizer sds")?;
        untrained = untrained.with_normalizer(Normalizer::from_parts(kind, mean, sd));
    }

    let n_layers = cur.u32("layer count")? as usize;
    let mut model = untrained.freeze();
    if n_layers != model.network.layer_count() {
        return Err(ModelError::BadConfig {
            path: p,
            detail: format!(
                "file has {n_layers} layers, architecture has {}",
                model.network.layer_count()
            ),
        });
    }
    for i in 0..n_layers {
        let index = cur.u32("layer index")? as usize;
        let count = cur.u64("layer param count")? as usize;
        let values = cur.f32s(count, "layer weights")?;
        if index != i {
            return Err(ModelError::BadConfig {
                path: p,
                detail: format!("layer block {i} carries index {index}"),
            });
        }
        let expected = model.network.layers()[i].state().len();
        if count != expected {
            return Err(ModelError::WeightShape {
                path: p,
                layer: i,
                expected,
                got: count,
            });
        }
        model.network.layers_mut()[i]
            .set_state(&values)
            .map_err(ModelError::Nn)?;
    }
    Ok(model)
}
