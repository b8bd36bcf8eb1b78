//! `GPQ1`: the int8 model format. Little-endian throughout.
//!
//! | size            | field                                      |
//! |-----------------|--------------------------------------------|
//! | 4               | magic `GPQ1`                               |
//! | 1               | version (1)                                |
//! | 1 each          | depth, kernel size, input channels, classes |
//! | 1 × depth       | channels per level                         |
//!
//! then for every conv in build order:
//!
//! | size            | field                                      |
//! |-----------------|--------------------------------------------|
//! | 4               | weight scale (f32)                         |
//! | 4               | input activation scale (f32)               |
//! | 1               | input activation zero point (i8)           |
//! | out · in · k    | weight codes (i8)                          |
//! | 4 × out         | biases (i32)                               |

use std::fmt::Write as _;

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::nn::int::QConvWeights;

use super::qmodel::resolved;
use super::{QLayer, QuantParams, QuantizedModel};

pub const QUANT_MAGIC: &[u8; 4] = b"GPQ1";
pub const QUANT_VERSION: u8 = 1;

const LAYER_META: usize = 4 + 4 + 1;

/// Serialized size of a model with this configuration.
pub fn serialized_len(config: &ModelConfig) -> usize {
    let header = 4 + 1 + 4 + config.depth;
    header
        + config
            .layer_shapes()
            .iter()
            .map(|&(out, inp, k)| LAYER_META + out * inp * k + 4 * out)
            .sum::<usize>()
}

fn byte(v: usize, what: &str) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::config(format!("{what} {v} does not fit the int8 format")))
}

pub fn serialize(model: &QuantizedModel) -> Result<Vec<u8>> {
    let cfg = model.config();
    let mut out = Vec::with_capacity(serialized_len(cfg));
    out.extend_from_slice(QUANT_MAGIC);
    out.push(QUANT_VERSION);
    out.push(byte(cfg.depth, "depth")?);
    out.push(byte(cfg.kernel_size, "kernel size")?);
    out.push(byte(cfg.in_channels, "input channels")?);
    out.push(byte(cfg.num_classes, "classes")?);
    for c in cfg.channels() {
        out.push(byte(c, "channel count")?);
    }
    for l in model.layers() {
        out.extend_from_slice(&l.weight_scale.to_le_bytes());
        out.extend_from_slice(&l.input.scale.to_le_bytes());
        out.push(l.input.zero_point as u8);
        out.extend(l.weights.weights().iter().map(|&w| w as u8));
        for b in l.weights.bias() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len(), serialized_len(cfg));
    Ok(out)
}

fn read_header(r: &mut Reader<'_>) -> Result<ModelConfig> {
    if r.take(4, "magic")? != QUANT_MAGIC {
        return Err(Error::format(0, "not a GPQ1 int8 model"));
    }
    let version = r.u8("version")?;
    if version != QUANT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let depth = r.u8("depth")? as usize;
    let kernel_size = r.u8("kernel size")? as usize;
    let in_channels = r.u8("input channels")? as usize;
    let num_classes = r.u8("classes")? as usize;
    let channels = (0..depth)
        .map(|_| r.u8("channels").map(usize::from))
        .collect::<Result<Vec<_>>>()?;
    let config = resolved(&ModelConfig {
        depth,
        kernel_size,
        in_channels,
        num_classes,
        channel_override: Some(channels.clone()),
        base_channels: channels.first().copied().unwrap_or(1).max(1),
        width_fraction: 1.0,
    });
    let at = r.pos();
    config
        .validate()
        .map_err(|e| Error::format(at, format!("invalid config: {e}")))?;
    Ok(config)
}

/// Parses a `GPQ1` blob; any defect yields a format error carrying the
/// byte offset, never a partial model.
pub fn deserialize(bytes: &[u8]) -> Result<QuantizedModel> {
    let mut r = Reader::new(bytes);
    let config = read_header(&mut r)?;
    let mut layers = Vec::new();
    for (out, inp, k) in config.layer_shapes() {
        let at = r.pos();
        let weight_scale = r.f32("weight scale")?;
        let scale = r.f32("activation scale")?;
        let zero_point = r.i8("activation zero point")?;
        let codes = r
            .take(out * inp * k, "weights")?
            .iter()
            .map(|&b| b as i8)
            .collect();
        let bias = (0..out)
            .map(|_| r.i32("bias"))
            .collect::<Result<Vec<_>>>()?;
        let weights = QConvWeights::new(out, inp, k, codes, bias)
            .map_err(|e| Error::format(at, e.to_string()))?;
        layers.push(QLayer {
            weights,
            weight_scale,
            input: QuantParams { scale, zero_point },
        });
    }
    let end = r.pos();
    r.finish()?;
    QuantizedModel::new(config, layers)
        .map_err(|e| Error::format(end, format!("inconsistent model: {e}")))
}

/// A named byte range of a serialized model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutField {
    pub offset: usize,
    pub len: usize,
    pub name: String,
}

/// Field-by-field layout of a `GPQ1` blob.
pub fn layout(bytes: &[u8]) -> Result<Vec<LayoutField>> {
    // validates the whole blob first
    let model = deserialize(bytes)?;
    let mut fields = Vec::new();
    let mut offset = 0;
    let mut push = |len: usize, name: String| {
        fields.push(LayoutField { offset, len, name });
        offset += len;
    };
    push(4, "magic".into());
    push(1, "version".into());
    push(1, "depth".into());
    push(1, "kernel_size".into());
    push(1, "in_channels".into());
    push(1, "num_classes".into());
    push(model.config().depth, "channels".into());
    for (idx, l) in model.layers().iter().enumerate() {
        let tag = match model.layer_kind(idx) {
            crate::model::LayerKind::Encoder(level) => format!("enc{level}"),
            crate::model::LayerKind::Decoder(level) => format!("dec{level}"),
            crate::model::LayerKind::Head => "head".to_string(),
        };
        push(4, format!("{tag}.weight_scale"));
        push(4, format!("{tag}.input_scale"));
        push(1, format!("{tag}.input_zero_point"));
        push(l.weights.weights().len(), format!("{tag}.weights"));
        push(4 * l.weights.bias().len(), format!("{tag}.bias"));
    }
    Ok(fields)
}

/// Human-readable dump: one line per field with offset, length, name and
/// the raw bytes in hex (16 per line).
pub fn hexdump(bytes: &[u8]) -> Result<String> {
    let mut s = String::new();
    for f in layout(bytes)? {
        let chunk = &bytes[f.offset..f.offset + f.len];
        for (i, line) in chunk.chunks(16).enumerate() {
            let hex: Vec<String> = line.iter().map(|b| format!("{b:02x}")).collect();
            if i == 0 {
                let _ = writeln!(
                    s,
                    "{:06x} {:5}  {:<24} {}",
                    f.offset,
                    f.len,
                    f.name,
                    hex.join(" ")
                );
            } else {
                let _ = writeln!(
                    s,
                    "{:06x} {:5}  {:<24} {}",
                    f.offset + 16 * i,
                    "",
                    "",
                    hex.join(" ")
                );
            }
        }
    }
    let _ = writeln!(s, "total {} bytes", bytes.len());
    Ok(s)
}
