//! Deterministic 1D kernels over channel-major signals.
//!
//! Float kernels come with exact analytic backward passes; [`int`] holds the
//! integer counterparts used by the quantized inference path.

mod activation;
mod conv;
pub mod int;
mod pool;
mod tensor;

pub use activation::{relu, relu_backward, softmax_channels};
pub use conv::{conv1d_backward, conv1d_forward, ConvWeights};
pub use pool::{
    maxpool2_backward, maxpool2_forward, upsample2_backward, upsample2_forward, PoolIndices,
};
pub use tensor::{concat_channels, split_channels, Tensor};
