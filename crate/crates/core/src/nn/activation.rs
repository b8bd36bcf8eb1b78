use crate::error::{Error, Result};

use super::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.channels(), x.length(), data).expect("relu output shape")
}

/// Passes `grad` where the forward input was strictly positive; the
/// derivative at exactly zero is taken as zero.
pub fn relu_backward(x: &Tensor, grad: &Tensor) -> Result<Tensor> {
    if x.channels() != grad.channels() || x.length() != grad.length() {
        return Err(Error::shape(
            "relu backward: gradient shape differs from input",
        ));
    }
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.channels(), x.length(), data)
}

/// Softmax across channels independently at every time step, with the
/// column maximum subtracted before exponentiation.
pub fn softmax_channels(x: &Tensor) -> Tensor {
    let (ch, len) = (x.channels(), x.length());
    let mut out = Tensor::zeros(ch, len);
    let mut column = vec![0.0; ch];
    for t in 0..len {
        let mut max = f64::NEG_INFINITY;
        for (c, v) in column.iter_mut().enumerate() {
            *v = x.get(c, t);
            max = max.max(*v);
        }
        let mut sum = 0.0;
        for v in column.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for (c, v) in column.iter().enumerate() {
            out.channel_mut(c)[t] = v / sum;
        }
    }
    out
}
