use crate::error::{Error, Result};

use super::Tensor;

/// Filters of a 1D convolution, `weights[o][i][k]` flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    out_channels: usize,
    in_channels: usize,
    kernel_size: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvWeights {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_size: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || kernel_size == 0 {
            return Err(Error::config("conv dimensions must be positive"));
        }
        if kernel_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "kernel size {kernel_size} must be odd for same padding"
            )));
        }
        if weights.len() != out_channels * in_channels * kernel_size {
            return Err(Error::shape(format!(
                "{} weights for a {out_channels}x{in_channels}x{kernel_size} conv",
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::shape(format!(
                "{} biases for {out_channels} output channels",
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel_size,
            weights,
            bias,
        })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize) -> Result<Self> {
        Self::new(
            out_channels,
            in_channels,
            kernel_size,
            vec![0.0; out_channels * in_channels * kernel_size],
            vec![0.0; out_channels],
        )
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// `(kernel · in + 1) · out`.
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn same_shape(&self, other: &ConvWeights) -> bool {
        self.out_channels == other.out_channels
            && self.in_channels == other.in_channels
            && self.kernel_size == other.kernel_size
    }

    #[inline]
    fn w(&self, o: usize, i: usize, k: usize) -> f64 {
        self.weights[(o * self.in_channels + i) * self.kernel_size + k]
    }
}

/// Valid tap range for output time `t`: taps `k` with `0 <= t + k - pad < len`.
#[inline]
pub(crate) fn tap_range(t: usize, pad: usize, kernel: usize, len: usize) -> (usize, usize) {
    let k_lo = pad.saturating_sub(t);
    let k_hi = kernel.min(len + pad - t);
    (k_lo, k_hi)
}

/// Same-length convolution with zero padding:
/// `out[c,t] = bias[c] + Σ_{i,k} w[c,i,k] · x[i, t + k - k/2]`.
pub fn conv1d_forward(x: &Tensor, w: &ConvWeights) -> Result<Tensor> {
    if x.channels() != w.in_channels {
        return Err(Error::shape(format!(
            "conv expects {} input channels, got {}",
            w.in_channels,
            x.channels()
        )));
    }
    let len = x.length();
    let pad = w.kernel_size / 2;
    let mut out = Tensor::zeros(w.out_channels, len);
    for o in 0..w.out_channels {
        let row = out.channel_mut(o);
        row.fill(w.bias[o]);
        for i in 0..w.in_channels {
            let xi = x.channel(i);
            for (t, acc) in row.iter_mut().enumerate() {
                let (k_lo, k_hi) = tap_range(t, pad, w.kernel_size, len);
                let mut s = 0.0;
                for k in k_lo..k_hi {
                    s += w.w(o, i, k) * xi[t + k - pad];
                }
                *acc += s;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv1d_forward`] with respect to its input and its
/// parameters, given the cotangent `grad_out` of the output.
pub fn conv1d_backward(
    x: &Tensor,
    w: &ConvWeights,
    grad_out: &Tensor,
) -> Result<(Tensor, ConvWeights)> {
    if x.channels() != w.in_channels
        || grad_out.channels() != w.out_channels
        || grad_out.length() != x.length()
    {
        return Err(Error::shape(format!(
            "conv backward: input {}x{}, grad {}x{}, weights {}->{}",
            x.channels(),
            x.length(),
            grad_out.channels(),
            grad_out.length(),
            w.in_channels,
            w.out_channels
        )));
    }
    let len = x.length();
    let k_size = w.kernel_size;
    let pad = k_size / 2;
    let mut grad_x = Tensor::zeros(w.in_channels, len);
    let mut grad_w = ConvWeights::zeros(w.out_channels, w.in_channels, k_size)?;

    for o in 0..w.out_channels {
        let g = grad_out.channel(o);
        grad_w.bias[o] = g.iter().sum();
        for i in 0..w.in_channels {
            let xi = x.channel(i);
            let base = (o * w.in_channels + i) * k_size;
            let gxi = grad_x.channel_mut(i);
            for (t, &gt) in g.iter().enumerate() {
                let (k_lo, k_hi) = tap_range(t, pad, k_size, len);
                for k in k_lo..k_hi {
                    let s = t + k - pad;
                    grad_w.weights[base + k] += gt * xi[s];
                    gxi[s] += gt * w.weights[base + k];
                }
            }
        }
    }
    Ok((grad_x, grad_w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kernel: &[f64]) -> ConvWeights {
        ConvWeights::new(1, 1, kernel.len(), kernel.to_vec(), vec![0.0]).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let x = Tensor::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let y = conv1d_forward(&x, &single(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn difference_kernel_with_zero_padding() {
        let x = Tensor::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let y = conv1d_forward(&x, &single(&[1.0, 0.0, -1.0])).unwrap();
        assert_eq!(y.data(), &[-2.0, -2.0, 2.0]);
    }

    #[test]
    fn bias_is_added() {
        let x = Tensor::from_rows(&[[0.0, 0.0]]).unwrap();
        let w = ConvWeights::new(1, 1, 1, vec![3.0], vec![0.5]).unwrap();
        assert_eq!(conv1d_forward(&x, &w).unwrap().data(), &[0.5, 0.5]);
    }

    #[test]
    fn kernel_longer_than_signal() {
        let x = Tensor::from_rows(&[[2.0]]).unwrap();
        let y = conv1d_forward(&x, &single(&[1.0, 1.0, 5.0, 1.0, 1.0])).unwrap();
        assert_eq!(y.data(), &[10.0]);
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let x = Tensor::zeros(2, 4);
        assert!(matches!(
            conv1d_forward(&x, &single(&[1.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn even_kernel_is_config_error() {
        assert!(matches!(
            ConvWeights::new(1, 1, 2, vec![1.0, 1.0], vec![0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let x = Tensor::from_rows(&[[1.0, -2.0, 0.5], [0.3, 0.1, 4.0]]).unwrap();
        let w = ConvWeights::new(
            2,
            2,
            3,
            (0..12).map(|v| v as f64 * 0.1).collect(),
            vec![1.0, -1.0],
        )
        .unwrap();
        let (gx, gw) = conv1d_backward(&x, &w, &Tensor::zeros(2, 3)).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gw.weights().iter().chain(gw.bias()).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_passes_gradient_through() {
        let x = Tensor::from_rows(&[[1.0, 2.0, 3.0, 4.0]]).unwrap();
        let g = Tensor::from_rows(&[[0.5, -1.0, 2.0, 7.0]]).unwrap();
        let (gx, _) = conv1d_backward(&x, &single(&[0.0, 1.0, 0.0]), &g).unwrap();
        assert_eq!(gx, g);
    }

    #[test]
    fn backward_rejects_bad_grad_shape() {
        let x = Tensor::zeros(1, 4);
        let g = Tensor::zeros(1, 3);
        assert!(conv1d_backward(&x, &single(&[1.0]), &g).is_err());
    }
}
