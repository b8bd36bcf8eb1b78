use crate::error::{Error, Result};

use super::Tensor;

/// Positions selected by [`maxpool2_forward`], needed to route gradients back.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolIndices {
    channels: usize,
    in_length: usize,
    /// Absolute input time index of each output element, channel-major.
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn in_length(&self) -> usize {
        self.in_length
    }

    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Window-2 stride-2 max pooling. Odd lengths drop the trailing sample; on
/// ties the earlier position wins.
pub fn maxpool2_forward<T: Copy + PartialOrd>(x: &Tensor<T>) -> (Tensor<T>, PoolIndices) {
    let out_len = x.length() / 2;
    let mut data = Vec::with_capacity(x.channels() * out_len);
    let mut argmax = Vec::with_capacity(x.channels() * out_len);
    for c in 0..x.channels() {
        let row = x.channel(c);
        for j in 0..out_len {
            let (a, b) = (row[2 * j], row[2 * j + 1]);
            if b > a {
                data.push(b);
                argmax.push(2 * j + 1);
            } else {
                data.push(a);
                argmax.push(2 * j);
            }
        }
    }
    let indices = PoolIndices {
        channels: x.channels(),
        in_length: x.length(),
        argmax,
    };
    let out = Tensor::new(x.channels(), out_len, data).expect("pool output shape");
    (out, indices)
}

pub fn maxpool2_backward(indices: &PoolIndices, grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.channels() != indices.channels || grad_out.length() != indices.in_length / 2 {
        return Err(Error::shape(format!(
            "pool backward: grad {}x{} does not match indices for {}x{}",
            grad_out.channels(),
            grad_out.length(),
            indices.channels,
            indices.in_length
        )));
    }
    let out_len = grad_out.length();
    let mut grad_x = Tensor::zeros(indices.channels, indices.in_length);
    for c in 0..indices.channels {
        let g = grad_out.channel(c);
        let idx = &indices.argmax[c * out_len..(c + 1) * out_len];
        let gx = grad_x.channel_mut(c);
        for (&gj, &src) in g.iter().zip(idx) {
            gx[src] += gj;
        }
    }
    Ok(grad_x)
}

/// Nearest-neighbour upsampling: every sample is repeated twice.
pub fn upsample2_forward<T: Copy>(x: &Tensor<T>) -> Tensor<T> {
    let mut data = Vec::with_capacity(x.data().len() * 2);
    for &v in x.data() {
        data.push(v);
        data.push(v);
    }
    Tensor::new(x.channels(), x.length() * 2, data).expect("upsample output shape")
}

/// Adjoint of duplication: adjacent gradient pairs are summed.
pub fn upsample2_backward(grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.length() % 2 != 0 {
        return Err(Error::shape(format!(
            "upsample backward needs an even length, got {}",
            grad_out.length()
        )));
    }
    let data = grad_out
        .data()
        .chunks_exact(2)
        .map(|p| p[0] + p[1])
        .collect();
    Tensor::new(grad_out.channels(), grad_out.length() / 2, data)
}
