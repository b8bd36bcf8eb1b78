use crate::error::{Error, Result};
use crate::model::{LayerKind, ModelConfig, UNetModel};
use crate::nn::int::{argmax_channels, qconv1d, requantize, FixedMultiplier, QConvWeights};
use crate::nn::{concat_channels, maxpool2_forward, upsample2_forward, Tensor};

use super::{quantize_weights, ActivationRanges, QuantParams, Range};

/// One int8 conv with the quantization parameters of its input.
#[derive(Debug, Clone, PartialEq)]
pub struct QLayer {
    pub weights: QConvWeights,
    pub weight_scale: f32,
    pub input: QuantParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    config: ModelConfig,
    layers: Vec<QLayer>,
    /// Output rescaling of every conv but the head: multiplier and the
    /// zero point of the next layer's input.
    requant: Vec<(FixedMultiplier, i8)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QForwardOutput {
    pub labels: Vec<u8>,
    /// Head accumulators, `num_classes × length`.
    pub logits: Tensor<i32>,
}

/// The configuration reduced to what the int8 format stores: an explicit
/// channel schedule.
pub(crate) fn resolved(config: &ModelConfig) -> ModelConfig {
    let ch = config.channels();
    ModelConfig {
        width_fraction: 1.0,
        base_channels: ch[0],
        channel_override: Some(ch),
        ..config.clone()
    }
}

fn decoder_index(depth: usize, level: usize) -> usize {
    2 * depth - 2 - level
}

impl QuantizedModel {
    /// Validates layer shapes and shared skip parameters, then derives the
    /// fixed-point requantization of each layer from the next layer's
    /// input parameters.
    pub fn new(config: ModelConfig, layers: Vec<QLayer>) -> Result<Self> {
        config.validate()?;
        let config = resolved(&config);
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::shape(format!(
                "config needs {} convs, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (idx, (&(out, inp, k), l)) in shapes.iter().zip(&layers).enumerate() {
            let w = &l.weights;
            if (w.out_channels(), w.in_channels(), w.kernel_size()) != (out, inp, k) {
                return Err(Error::shape(format!(
                    "int8 layer {idx} has the wrong shape"
                )));
            }
            if w.weights().contains(&i8::MIN) {
                return Err(Error::config(format!(
                    "layer {idx} uses the reserved weight code -128"
                )));
            }
            QuantParams::new(l.weight_scale, 0)?;
            QuantParams::new(l.input.scale, l.input.zero_point)?;
        }
        let depth = config.depth;
        for level in 0..depth - 1 {
            if layers[level + 1].input != layers[decoder_index(depth, level)].input {
                return Err(Error::config(format!(
                    "skip tensors at level {level} must share quantization parameters"
                )));
            }
        }
        let requant = layers
            .windows(2)
            .map(|pair| {
                let real = f64::from(pair[0].weight_scale) * f64::from(pair[0].input.scale)
                    / f64::from(pair[1].input.scale);
                Ok((FixedMultiplier::from_real(real)?, pair[1].input.zero_point))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            layers,
            requant,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[QLayer] {
        &self.layers
    }

    pub fn requantization(&self) -> &[(FixedMultiplier, i8)] {
        &self.requant
    }

    pub fn layer_kind(&self, idx: usize) -> LayerKind {
        crate::model::unet::layer_kind(self.config.depth, idx)
    }

    /// Quantizes the input window, then runs every conv in integer
    /// arithmetic and classifies each sample by integer argmax of the
    /// head accumulators (ties to the lowest class).
    pub fn qforward(&self, window: &Tensor) -> Result<QForwardOutput> {
        if window.channels() != self.config.in_channels {
            return Err(Error::shape(format!(
                "model expects {} input channels, got {}",
                self.config.in_channels,
                window.channels()
            )));
        }
        self.config.check_length(window.length())?;
        let depth = self.config.depth;
        let input = self.layers[0].input;
        let codes = window.data().iter().map(|&x| input.quantize(x)).collect();
        let mut x = Tensor::new(window.channels(), window.length(), codes)?;

        let conv_relu = |idx: usize, x: &Tensor<i8>| -> Result<Tensor<i8>> {
            let l = &self.layers[idx];
            let acc = qconv1d(x, l.input.zero_point, &l.weights)?;
            let (m, zp) = self.requant[idx];
            Ok(requantize(&acc, m, zp, true))
        };

        let mut skips = Vec::with_capacity(depth);
        for level in 0..depth {
            let out = conv_relu(level, &x)?;
            if level + 1 < depth {
                x = maxpool2_forward(&out).0;
            }
            skips.push(out);
        }
        let mut cur = skips.pop().expect("depth >= 1");
        for (stage, skip) in skips.iter().rev().enumerate() {
            let cat = concat_channels(skip, &upsample2_forward(&cur))?;
            cur = conv_relu(depth + stage, &cat)?;
        }
        let head = &self.layers[2 * depth - 1];
        let logits = qconv1d(&cur, head.input.zero_point, &head.weights)?;
        Ok(QForwardOutput {
            labels: argmax_channels(&logits),
            logits,
        })
    }

    /// Float weights reconstructed from the int8 codes.
    pub fn dequantized_weights(&self, idx: usize) -> Vec<f64> {
        let l = &self.layers[idx];
        l.weights
            .weights()
            .iter()
            .map(|&q| f64::from(q) * f64::from(l.weight_scale))
            .collect()
    }
}

/// Post-training quantization of `model` with calibrated activation ranges.
pub fn quantize_model(model: &UNetModel, ranges: &ActivationRanges) -> Result<QuantizedModel> {
    let n = model.layers().len();
    if ranges.len() != n {
        return Err(Error::shape(format!(
            "{} activation ranges for a model with {n} convs",
            ranges.len()
        )));
    }
    let depth = model.config().depth;
    let out_range = |idx: usize| ranges.get(idx + 1);
    // encoder output at `level` joined with the deeper output upsampled beside it
    let skip_group = |level: usize| -> Range {
        let deeper = if level + 1 == depth - 1 {
            depth - 1
        } else {
            decoder_index(depth, level + 1)
        };
        out_range(level).union(out_range(deeper))
    };
    let params = |r: Range| QuantParams::from_range(r.min, r.max);

    let layers = model
        .layers()
        .iter()
        .enumerate()
        .map(|(idx, layer)| {
            let input = match model.layer_kind(idx) {
                LayerKind::Encoder(0) => params(ranges.get(0)),
                LayerKind::Encoder(level) => params(skip_group(level - 1)),
                LayerKind::Decoder(level) => params(skip_group(level)),
                LayerKind::Head => params(out_range(idx - 1)),
            };
            let (weight_scale, codes) = quantize_weights(layer.weights());
            let acc_scale = f64::from(weight_scale) * f64::from(input.scale);
            let bias = layer
                .bias()
                .iter()
                .map(|b| {
                    (b / acc_scale)
                        .round()
                        .clamp(f64::from(i32::MIN), f64::from(i32::MAX)) as i32
                })
                .collect();
            Ok(QLayer {
                weights: QConvWeights::new(
                    layer.out_channels(),
                    layer.in_channels(),
                    layer.kernel_size(),
                    codes,
                    bias,
                )?,
                weight_scale,
                input,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QuantizedModel::new(model.config().clone(), layers)
}
