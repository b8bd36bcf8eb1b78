//! `GPF1`: float model files.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size      | field                                         |
//! |--------|-----------|-----------------------------------------------|
//! | 0      | 4         | magic `GPF1`                                  |
//! | 4      | 1         | version (1)                                   |
//! | 5      | 1         | depth                                         |
//! | 6      | 1         | kernel size                                   |
//! | 7      | 1         | input channels                                |
//! | 8      | 1         | classes                                       |
//! | 9      | 4         | base channels (u32)                           |
//! | 13     | 8         | width fraction (f64)                          |
//! | 21     | 1         | channel override flag (0 or 1)                |
//! | 22     | 4 × depth | override channels (u32), only if flag is 1    |
//! | ...    | 4 × n     | f32 weights then f32 biases, per conv in build order |

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::nn::ConvWeights;

use super::{ModelConfig, UNetModel};

pub const FLOAT_MAGIC: &[u8; 4] = b"GPF1";
pub const FLOAT_VERSION: u8 = 1;

fn small(v: usize, what: &str) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::config(format!("{what} {v} does not fit in one byte")))
}

pub fn write_float_model(model: &UNetModel) -> Result<Vec<u8>> {
    let cfg = model.config();
    let mut out = Vec::with_capacity(32 + model.param_count() * 4);
    out.extend_from_slice(FLOAT_MAGIC);
    out.push(FLOAT_VERSION);
    out.push(small(cfg.depth, "depth")?);
    out.push(small(cfg.kernel_size, "kernel size")?);
    out.push(small(cfg.in_channels, "input channels")?);
    out.push(small(cfg.num_classes, "classes")?);
    let base =
        u32::try_from(cfg.base_channels).map_err(|_| Error::config("base channels too large"))?;
    out.extend_from_slice(&base.to_le_bytes());
    out.extend_from_slice(&cfg.width_fraction.to_le_bytes());
    match &cfg.channel_override {
        Some(ch) => {
            out.push(1);
            for &c in ch {
                let c = u32::try_from(c).map_err(|_| Error::config("channel count too large"))?;
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    for layer in model.layers() {
        for &w in layer.weights().iter().chain(layer.bias()) {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_float_model(bytes: &[u8]) -> Result<UNetModel> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != FLOAT_MAGIC {
        return Err(Error::format(0, "not a GPF1 float model"));
    }
    let version = r.u8("version")?;
    if version != FLOAT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let depth = r.u8("depth")? as usize;
    let kernel_size = r.u8("kernel size")? as usize;
    let in_channels = r.u8("input channels")? as usize;
    let num_classes = r.u8("classes")? as usize;
    let base_channels = r.u32("base channels")? as usize;
    let width_fraction = r.f64("width fraction")?;
    let flag_at = r.pos();
    let channel_override = match r.u8("override flag")? {
        0 => None,
        1 => Some(
            (0..depth)
                .map(|_| r.u32("override channel").map(|c| c as usize))
                .collect::<Result<Vec<_>>>()?,
        ),
        f => return Err(Error::format(flag_at, format!("bad override flag {f}"))),
    };
    let config = ModelConfig {
        depth,
        width_fraction,
        base_channels,
        kernel_size,
        in_channels,
        num_classes,
        channel_override,
    };
    let cfg_end = r.pos();
    config
        .validate()
        .map_err(|e| Error::format(cfg_end, format!("invalid config: {e}")))?;

    let mut layers = Vec::new();
    for (out, inp, k) in config.layer_shapes() {
        let mut read = |n: usize, what: &str| -> Result<Vec<f64>> {
            (0..n).map(|_| r.f32(what).map(f64::from)).collect()
        };
        let weights = read(out * inp * k, "weights")?;
        let bias = read(out, "bias")?;
        layers.push(ConvWeights::new(out, inp, k, weights, bias)?);
    }
    r.finish()?;
    UNetModel::from_layers(config, layers)
}
