use crate::quant;

use super::ModelConfig;

/// Storage and compute footprint of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OpsBudget {
    pub params: usize,
    /// Parameters stored as 32-bit floats.
    pub model_bytes_float: usize,
    /// Size of the serialized int8 model, header and quantization metadata
    /// included.
    pub model_bytes_int8: usize,
    pub flops_per_sample: f64,
    pub sample_rate: f64,
    pub flops_per_second: f64,
}

/// Resolution level of each conv in build order (0 = full rate).
pub(crate) fn layer_levels(config: &ModelConfig) -> Vec<usize> {
    let depth = config.depth;
    (0..depth)
        .chain((0..depth - 1).rev())
        .chain(std::iter::once(0))
        .collect()
}

/// Σ over convs of `(kernel · in + 1) · out`.
pub fn param_count(config: &ModelConfig) -> usize {
    config
        .layer_shapes()
        .iter()
        .map(|&(out, inp, k)| (k * inp + 1) * out)
        .sum()
}

/// Multiply-accumulate FLOPs (2 per MAC) for one window of `window_len`
/// samples. Pooled levels run at `window_len / 2^level`.
pub fn flops_per_window(config: &ModelConfig, window_len: usize) -> u64 {
    config
        .layer_shapes()
        .iter()
        .zip(layer_levels(config))
        .map(|(&(out, inp, k), level)| (2 * k * inp * out * (window_len >> level)) as u64)
        .sum()
}

/// Window FLOPs divided by window length.
pub fn flops_per_sample(config: &ModelConfig) -> f64 {
    config
        .layer_shapes()
        .iter()
        .zip(layer_levels(config))
        .map(|(&(out, inp, k), level)| (2 * k * inp * out) as f64 / (1u64 << level) as f64)
        .sum()
}

pub fn budget(config: &ModelConfig, sample_rate: f64) -> OpsBudget {
    let params = param_count(config);
    let per_sample = flops_per_sample(config);
    OpsBudget {
        params,
        model_bytes_float: params * 4,
        model_bytes_int8: quant::serialized_len(config),
        flops_per_sample: per_sample,
        sample_rate,
        flops_per_second: per_sample * sample_rate,
    }
}
