use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{
    concat_channels, conv1d_backward, conv1d_forward, maxpool2_backward, maxpool2_forward, relu,
    relu_backward, softmax_channels, split_channels, upsample2_backward, upsample2_forward,
    ConvWeights, PoolIndices, Tensor,
};

use super::ModelConfig;

/// Role of a conv inside the U-Net, with its resolution level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Encoder(usize),
    Decoder(usize),
    Head,
}

/// A U-Net with one conv per level:
///
/// ```text
/// enc0 ─────────────────────────────── concat → dec0 → head → softmax
///   └ pool → enc1 ───────────── concat → dec1 ┘
///              └ pool → enc2 (bottleneck) ┘ upsample
/// ```
///
/// Every conv except the 1×1 head is followed by ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct UNetModel {
    config: ModelConfig,
    layers: Vec<ConvWeights>,
}

/// Intermediate values of a forward pass needed by [`UNetModel::backward`].
/// Owned by the caller, so concurrent training steps never share state.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    conv_inputs: Vec<Tensor>,
    pre_activations: Vec<Tensor>,
    pools: Vec<PoolIndices>,
}

impl ForwardCache {
    pub fn is_empty(&self) -> bool {
        self.conv_inputs.is_empty()
    }
}

/// Gradients shaped exactly like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub layers: Vec<ConvWeights>,
}

impl ModelGrads {
    pub fn zeros_like(model: &UNetModel) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|l| ConvWeights::zeros(l.out_channels(), l.in_channels(), l.kernel_size()))
            .collect::<Result<_>>()
            .expect("model layers have valid shapes");
        Self { layers }
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights_mut().iter_mut().zip(b.weights()) {
                *x += y;
            }
            for (x, y) in a.bias_mut().iter_mut().zip(b.bias()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights_mut().iter_mut().for_each(|v| *v *= factor);
            l.bias_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights().iter().chain(l.bias()).all(|&v| v == 0.0))
    }
}

impl UNetModel {
    /// He-uniform weights (`±sqrt(6 / fan_in)`) and zero biases, drawn in
    /// build order from a ChaCha8 stream seeded with `seed`.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(out, inp, k)| {
                let bound = (6.0 / (inp * k) as f64).sqrt();
                let weights = (0..out * inp * k)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                ConvWeights::new(out, inp, k, weights, vec![0.0; out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(config, layers)
    }

    /// Assembles a model from explicit layers, auditing every shape against
    /// the configuration.
    pub fn from_layers(config: ModelConfig, layers: Vec<ConvWeights>) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::shape(format!(
                "config needs {} convs, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (idx, (&(out, inp, k), layer)) in shapes.iter().zip(&layers).enumerate() {
            if (
                layer.out_channels(),
                layer.in_channels(),
                layer.kernel_size(),
            ) != (out, inp, k)
            {
                return Err(Error::shape(format!(
                    "layer {idx} is {}x{}x{}, expected {out}x{inp}x{k}",
                    layer.out_channels(),
                    layer.in_channels(),
                    layer.kernel_size()
                )));
            }
        }
        let model = Self { config, layers };
        model.audit_skip_shapes()?;
        Ok(model)
    }

    fn audit_skip_shapes(&self) -> Result<()> {
        let ch = self.config.channels();
        for (idx, layer) in self.layers.iter().enumerate() {
            if let LayerKind::Decoder(level) = self.layer_kind(idx) {
                let expected = ch[level] + ch[level + 1];
                if layer.in_channels() != expected {
                    return Err(Error::shape(format!(
                        "decoder level {level} takes {} channels, skip + upsample give {expected}",
                        layer.in_channels()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[ConvWeights] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ConvWeights] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvWeights::param_count).sum()
    }

    pub fn layer_kind(&self, idx: usize) -> LayerKind {
        layer_kind(self.config.depth, idx)
    }

    /// Per-sample class probabilities, `num_classes × length`.
    pub fn forward(&self, window: &Tensor) -> Result<Tensor> {
        let (probs, _) = self.run(window, false)?;
        Ok(probs)
    }

    /// Like [`forward`](Self::forward) but also returns what backward needs.
    pub fn forward_cached(&self, window: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.run(window, true)
    }

    /// Most probable class per sample; ties go to the lowest class id.
    pub fn predict_labels(&self, window: &Tensor) -> Result<Vec<u8>> {
        let probs = self.forward(window)?;
        Ok(argmax(&probs))
    }

    /// Post-ReLU output of every conv except the head, in build order.
    pub fn activations(&self, window: &Tensor) -> Result<Vec<Tensor>> {
        let (_, cache) = self.run(window, true)?;
        let n = self.layers.len() - 1;
        Ok(cache.pre_activations[..n].iter().map(relu).collect())
    }

    fn run(&self, window: &Tensor, keep: bool) -> Result<(Tensor, ForwardCache)> {
        if window.channels() != self.config.in_channels {
            return Err(Error::shape(format!(
                "model expects {} input channels, got {}",
                self.config.in_channels,
                window.channels()
            )));
        }
        self.config.check_length(window.length())?;
        let depth = self.config.depth;
        let mut cache = ForwardCache::default();
        let conv = |idx: usize, input: Tensor, cache: &mut ForwardCache| -> Result<Tensor> {
            let pre = conv1d_forward(&input, &self.layers[idx])?;
            if keep {
                cache.conv_inputs.push(input);
                cache.pre_activations.push(pre.clone());
            }
            Ok(pre)
        };

        let mut skips = Vec::with_capacity(depth);
        let mut input = window.clone();
        for level in 0..depth {
            let out = relu(&conv(level, input, &mut cache)?);
            if level + 1 < depth {
                let (pooled, idx) = maxpool2_forward(&out);
                if keep {
                    cache.pools.push(idx);
                }
                input = pooled;
            } else {
                input = Tensor::zeros(1, 0);
            }
            skips.push(out);
        }
        let mut cur = skips.pop().expect("depth >= 1");
        for (stage, skip) in skips.iter().rev().enumerate() {
            let cat = concat_channels(skip, &upsample2_forward(&cur))?;
            cur = relu(&conv(depth + stage, cat, &mut cache)?);
        }
        let logits = conv(2 * depth - 1, cur, &mut cache)?;
        Ok((softmax_channels(&logits), cache))
    }

    /// Analytic gradients of every weight and bias given the gradient on
    /// the head's logits (for softmax + cross-entropy: `(probs − onehot)/T`).
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Tensor) -> Result<ModelGrads> {
        let depth = self.config.depth;
        let n = self.layers.len();
        if cache.is_empty() {
            return Err(Error::Usage(
                "backward called without a forward pass".into(),
            ));
        }
        if cache.conv_inputs.len() != n || cache.pools.len() != depth - 1 {
            return Err(Error::Usage(
                "forward cache was produced by a different model".into(),
            ));
        }
        let mut grads = Vec::with_capacity(n);
        grads.resize_with(n, || None);

        let (mut g, gw) =
            conv1d_backward(&cache.conv_inputs[n - 1], &self.layers[n - 1], grad_logits)?;
        grads[n - 1] = Some(gw);

        // decoder stages, top level first (reverse of the forward order)
        let mut skip_grads: Vec<Option<Tensor>> = vec![None; depth];
        for (level, slot) in skip_grads.iter_mut().enumerate().take(depth - 1) {
            let idx = n - 2 - level;
            let g_pre = relu_backward(&cache.pre_activations[idx], &g)?;
            let (g_cat, gw) = conv1d_backward(&cache.conv_inputs[idx], &self.layers[idx], &g_pre)?;
            grads[idx] = Some(gw);
            let skip_ch = self.layers[level].out_channels();
            let (g_skip, g_up) = split_channels(&g_cat, skip_ch)?;
            *slot = Some(g_skip);
            g = upsample2_backward(&g_up)?;
        }

        // encoder, bottleneck first; `g` now holds d loss / d bottleneck output
        for level in (0..depth).rev() {
            let mut g_out = g;
            if let Some(s) = skip_grads[level].take() {
                add_in_place(&mut g_out, &s);
            }
            let g_pre = relu_backward(&cache.pre_activations[level], &g_out)?;
            let (g_in, gw) =
                conv1d_backward(&cache.conv_inputs[level], &self.layers[level], &g_pre)?;
            grads[level] = Some(gw);
            g = if level > 0 {
                maxpool2_backward(&cache.pools[level - 1], &g_in)?
            } else {
                g_in
            };
        }

        Ok(ModelGrads {
            layers: grads
                .into_iter()
                .map(|g| g.expect("every layer visited"))
                .collect(),
        })
    }
}

pub(crate) fn layer_kind(depth: usize, idx: usize) -> LayerKind {
    if idx < depth {
        LayerKind::Encoder(idx)
    } else if idx < 2 * depth - 1 {
        LayerKind::Decoder(2 * depth - 2 - idx)
    } else {
        LayerKind::Head
    }
}

fn add_in_place(a: &mut Tensor, b: &Tensor) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += y;
    }
}

/// Per-column argmax with ties to the lowest class.
pub(crate) fn argmax(probs: &Tensor) -> Vec<u8> {
    (0..probs.length())
        .map(|t| {
            let mut best = 0;
            for c in 1..probs.channels() {
                if probs.get(c, t) > probs.get(best, t) {
                    best = c;
                }
            }
            best as u8
        })
        .collect()
}
