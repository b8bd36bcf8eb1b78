//! The width/depth-scaled U-Net family and its parameter and compute
//! counters.

mod budget;
mod config;
mod persist;
pub(crate) mod unet;

pub use budget::{budget, flops_per_sample, flops_per_window, param_count, OpsBudget};
pub use config::{ModelConfig, Preset, DEFAULT_WINDOW, IN_CHANNELS, NUM_CLASSES};
pub use persist::{read_float_model, write_float_model, FLOAT_MAGIC, FLOAT_VERSION};
pub use unet::{ForwardCache, LayerKind, ModelGrads, UNetModel};
