//! Post-training int8 quantization, the integer inference path and the
//! compact `GPQ1` model format.
//!
//! Weights are quantized per tensor and symmetrically; activations are
//! affine int8. Every conv stores the parameters of its *input* tensor.
//! Tensors that meet in a skip concatenation (an encoder output and the
//! deeper output that is upsampled next to it) share one set of
//! parameters, calibrated on the union of their ranges, so concatenation
//! and pooling never need rescaling. Output requantization multipliers are
//! derived from the consumer layer's input parameters.

mod calibrate;
mod format;
mod params;
mod qmodel;

pub use calibrate::{calibrate, ActivationRanges, Range, DEGENERATE_HALF_RANGE};
pub use format::{
    deserialize, hexdump, layout, serialize, serialized_len, LayoutField, QUANT_MAGIC,
    QUANT_VERSION,
};
pub use params::{quantize_weights, QuantParams, SCALE_FLOOR};
pub use qmodel::{quantize_model, QForwardOutput, QLayer, QuantizedModel};
