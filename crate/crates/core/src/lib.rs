//! Tiny 1D U-Net for per-sample stance/swing segmentation of 6-axis IMU
//! streams.
//!
//! The crate covers the whole pipeline: synthetic gait traces with exact
//! labels ([`gaitlab`]), float kernels with analytic gradients ([`nn`]),
//! the width/depth-scaled U-Net family ([`model`]), Adam training and
//! subject-independent cross-validation ([`trainer`]), post-training int8
//! quantization with a pure integer inference path ([`quant`]), and a
//! sample-at-a-time streaming simulator ([`stream`]).

mod bytes;
pub mod error;
pub mod eval;
pub mod gaitlab;
pub mod model;
pub mod nn;
pub mod quant;
pub mod stream;
pub mod trainer;

pub use error::{Error, Result};
pub use gaitlab::{GaitTrace, Phase, StepEvents, TimingErrorReport};
pub use model::{ModelConfig, OpsBudget, Preset, UNetModel};
pub use nn::{ConvWeights, Tensor};
pub use quant::QuantizedModel;
pub use trainer::TrainHyper;
