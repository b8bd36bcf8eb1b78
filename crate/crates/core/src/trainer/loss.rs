use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Mean negative log-likelihood of `labels` under per-sample `probs`, and
/// the fused softmax + cross-entropy gradient on the logits,
/// `(probs − onehot) / T`.
pub fn cross_entropy(probs: &Tensor, labels: &[u8]) -> Result<(f64, Tensor)> {
    let len = probs.length();
    if labels.len() != len {
        return Err(Error::shape(format!(
            "{} labels for {len} samples",
            labels.len()
        )));
    }
    if len == 0 {
        return Err(Error::data("cross-entropy of an empty window"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= probs.channels()) {
        return Err(Error::data(format!(
            "label {bad} out of range for {} classes",
            probs.channels()
        )));
    }
    let inv_len = 1.0 / len as f64;
    let mut grad = probs.clone();
    grad.data_mut().iter_mut().for_each(|g| *g *= inv_len);
    let mut loss = 0.0;
    for (t, &l) in labels.iter().enumerate() {
        let c = usize::from(l);
        loss -= probs.get(c, t).max(f64::MIN_POSITIVE).ln();
        grad.channel_mut(c)[t] -= inv_len;
    }
    Ok((loss * inv_len, grad))
}
