//! Naive reference implementations shared by the integration suites.
//!
//! Everything here works on nested `Vec`s and plain loops so it shares no
//! code with the crate's kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use gaitseg::model::UNetModel;
use gaitseg::nn::int::FixedMultiplier;
use gaitseg::quant::QuantizedModel;
use gaitseg::{ConvWeights, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rows_of<T: Copy>(x: &Tensor<T>) -> Vec<Vec<T>> {
    (0..x.channels()).map(|c| x.channel(c).to_vec()).collect()
}

pub fn tensor_of<T: Copy>(rows: &[Vec<T>]) -> Tensor<T> {
    Tensor::from_rows(rows).unwrap()
}

pub fn random_rows(rng: &mut ChaCha8Rng, channels: usize, length: usize, scale: f64) -> Rows {
    (0..channels)
        .map(|_| {
            (0..length)
                .map(|_| rng.random_range(-scale..scale))
                .collect()
        })
        .collect()
}

pub fn random_conv(rng: &mut ChaCha8Rng, out_ch: usize, in_ch: usize, k: usize) -> ConvWeights {
    let w = (0..out_ch * in_ch * k)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let b = (0..out_ch).map(|_| rng.random_range(-0.5..0.5)).collect();
    ConvWeights::new(out_ch, in_ch, k, w, b).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn flat(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.concat()
}

// ---- float oracles ----

pub fn conv_oracle(x: &Rows, w: &ConvWeights) -> Rows {
    let (o_n, i_n, k_n) = (w.out_channels(), w.in_channels(), w.kernel_size());
    let len = x[0].len() as isize;
    let half = (k_n / 2) as isize;
    let mut out = vec![vec![0.0; len as usize]; o_n];
    for o in 0..o_n {
        for t in 0..len {
            let mut s = w.bias()[o];
            for i in 0..i_n {
                for k in 0..k_n {
                    let src = t + k as isize - half;
                    if (0..len).contains(&src) {
                        s += w.weights()[(o * i_n + i) * k_n + k] * x[i][src as usize];
                    }
                }
            }
            out[o][t as usize] = s;
        }
    }
    out
}

pub fn maxpool_oracle<T: Copy + PartialOrd>(x: &[Vec<T>]) -> Vec<Vec<T>> {
    x.iter()
        .map(|row| {
            row.chunks_exact(2)
                .map(|p| if p[1] > p[0] { p[1] } else { p[0] })
                .collect()
        })
        .collect()
}

pub fn upsample_oracle<T: Copy>(x: &[Vec<T>]) -> Vec<Vec<T>> {
    x.iter()
        .map(|row| row.iter().flat_map(|&v| [v, v]).collect())
        .collect()
}

pub fn softmax_oracle(x: &Rows) -> Rows {
    let (c_n, len) = (x.len(), x[0].len());
    let mut out = vec![vec![0.0; len]; c_n];
    for t in 0..len {
        let m = (0..c_n).map(|c| x[c][t]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..c_n).map(|c| (x[c][t] - m).exp()).sum();
        for c in 0..c_n {
            out[c][t] = (x[c][t] - m).exp() / z;
        }
    }
    out
}

pub fn relu_rows(x: &Rows) -> Rows {
    x.iter()
        .map(|r| r.iter().map(|v| v.max(0.0)).collect())
        .collect()
}

/// Float U-Net forward assembled from the oracles above.
pub fn unet_oracle(model: &UNetModel, x: &Rows) -> Rows {
    let depth = model.config().depth;
    let layers = model.layers();
    let mut skips = Vec::new();
    let mut cur = x.clone();
    for level in 0..depth {
        let out = relu_rows(&conv_oracle(&cur, &layers[level]));
        cur = maxpool_oracle(&out);
        skips.push(out);
    }
    let mut up = skips.pop().unwrap();
    for (stage, skip) in skips.iter().rev().enumerate() {
        let mut cat = skip.clone();
        cat.extend(upsample_oracle(&up));
        up = relu_rows(&conv_oracle(&cat, &layers[depth + stage]));
    }
    softmax_oracle(&conv_oracle(&up, &layers[2 * depth - 1]))
}

// ---- integer oracles ----

pub fn qconv_oracle(x: &[Vec<i8>], zp: i8, w: &[i8], bias: &[i32], k_n: usize) -> Vec<Vec<i64>> {
    let (i_n, len) = (x.len(), x[0].len() as isize);
    let o_n = bias.len();
    let half = (k_n / 2) as isize;
    let mut out = vec![vec![0i64; len as usize]; o_n];
    for o in 0..o_n {
        for t in 0..len {
            let mut s = bias[o] as i64;
            for i in 0..i_n {
                for k in 0..k_n {
                    let src = t + k as isize - half;
                    if (0..len).contains(&src) {
                        let xv = x[i][src as usize] as i64 - zp as i64;
                        s += w[(o * i_n + i) * k_n + k] as i64 * xv;
                    }
                }
            }
            out[o][t as usize] = s;
        }
    }
    out
}

/// `round_half_up(acc · mult / 2^shift)` with exact 128-bit arithmetic.
pub fn fixed_mul_oracle(acc: i64, m: FixedMultiplier) -> i64 {
    if m.shift() >= 63 {
        return 0;
    }
    let num = acc as i128 * m.multiplier() as i128;
    let den = 1i128 << m.shift();
    (2 * num + den).div_euclid(2 * den) as i64
}

pub fn requant_oracle(acc: &[Vec<i64>], m: FixedMultiplier, zp: i8, relu: bool) -> Vec<Vec<i8>> {
    let lo = if relu { zp as i64 } else { -128 };
    acc.iter()
        .map(|row| {
            row.iter()
                .map(|&a| {
                    let a = a.clamp(i32::MIN as i64, i32::MAX as i64);
                    (fixed_mul_oracle(a, m) + zp as i64).clamp(lo, 127) as i8
                })
                .collect()
        })
        .collect()
}

/// Integer U-Net forward: per-sample labels, ties to the lowest class.
pub fn qunet_oracle(q: &QuantizedModel, x: &Rows) -> Vec<u8> {
    let depth = q.config().depth;
    let layers = q.layers();
    let rq = q.requantization();
    let input = layers[0].input;
    let codes: Vec<Vec<i8>> = x
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| {
                    let s = input.scale as f64;
                    let q = (v / s).round() + input.zero_point as f64;
                    q.clamp(-128.0, 127.0) as i8
                })
                .collect()
        })
        .collect();
    let conv = |idx: usize, x: &[Vec<i8>]| {
        let l = &layers[idx];
        qconv_oracle(
            x,
            l.input.zero_point,
            l.weights.weights(),
            l.weights.bias(),
            l.weights.kernel_size(),
        )
    };
    let mut skips = Vec::new();
    let mut cur = codes;
    for level in 0..depth {
        let out = requant_oracle(&conv(level, &cur), rq[level].0, rq[level].1, true);
        cur = maxpool_oracle(&out);
        skips.push(out);
    }
    let mut up = skips.pop().unwrap();
    for (stage, skip) in skips.iter().rev().enumerate() {
        let mut cat = skip.clone();
        cat.extend(upsample_oracle(&up));
        let idx = depth + stage;
        up = requant_oracle(&conv(idx, &cat), rq[idx].0, rq[idx].1, true);
    }
    let logits = conv(2 * depth - 1, &up);
    (0..logits[0].len())
        .map(|t| {
            let mut best = 0;
            for c in 1..logits.len() {
                let v = logits[c][t].clamp(i32::MIN as i64, i32::MAX as i64);
                let b = logits[best][t].clamp(i32::MIN as i64, i32::MAX as i64);
                if v > b {
                    best = c;
                }
            }
            best as u8
        })
        .collect()
}

// ---- streaming oracle ----

/// Offline composition of whole-window int8 inferences: window `k` starts
/// at `k · hop` and owns the samples `[k·hop + m, (k+1)·hop + m)`, with
/// `m = (window − hop) / 2`; the first window also owns `[0, m)`. Samples
/// past the last full window's region belong to one extra window starting
/// a hop later and edge-padded; a trace shorter than a window is a single
/// edge-padded window.
pub fn stream_oracle(q: &QuantizedModel, x: &Rows, window: usize, hop: usize) -> Vec<u8> {
    let n = x[0].len();
    let m = (window - hop) / 2;
    let infer = |start: usize| -> Vec<u8> {
        let padded: Rows = x
            .iter()
            .map(|r| {
                let end = (start + window).min(n);
                let mut row = r[start..end].to_vec();
                let last = *row.last().unwrap();
                row.resize(window, last);
                row
            })
            .collect();
        q.qforward(&tensor_of(&padded)).unwrap().labels
    };
    if n < window {
        return infer(0)[..n].to_vec();
    }
    let full = (n - window) / hop + 1;
    let covered = (full - 1) * hop + m + hop;
    let mut cache: std::collections::HashMap<usize, Vec<u8>> = Default::default();
    (0..n)
        .map(|i| {
            let k = if i >= covered {
                full
            } else {
                (i.saturating_sub(m) / hop).min(full - 1)
            };
            let start = k * hop;
            cache.entry(k).or_insert_with(|| infer(start))[i - start]
        })
        .collect()
}

// ---- finite differences ----

/// `|a − n| / max(|a|, |n|)`, or the absolute difference when both are
/// below `floor`.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < floor {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

pub fn central_diff(mut f: impl FnMut(f64) -> f64, x0: f64, h: f64) -> f64 {
    (f(x0 + h) - f(x0 - h)) / (2.0 * h)
}

/// Random values in `[-scale, scale]` whose pairwise gaps and distance
/// from zero all exceed `gap`, so piecewise-linear kernels stay on one
/// piece under a perturbation smaller than `gap / 2`.
pub fn separated_values(rng: &mut ChaCha8Rng, n: usize, scale: f64, gap: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(n);
    while out.len() < n {
        let v: f64 = rng.random_range(-scale..scale);
        if v.abs() > gap && out.iter().all(|u| (u - v).abs() > gap) {
            out.push(v);
        }
    }
    out
}

pub mod checks;

/// A seeded micro model quantized against a few random windows.
pub fn random_qmodel(seed: u64, window: usize) -> (UNetModel, QuantizedModel) {
    use gaitseg::quant::{calibrate, quantize_model};
    let model = UNetModel::build(gaitseg::Preset::Micro.config(), seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let calib: Vec<Tensor> = (0..4)
        .map(|_| tensor_of(&random_rows(&mut r, 6, window, 2.0)))
        .collect();
    let q = quantize_model(&model, &calibrate(&model, &calib).unwrap()).unwrap();
    (model, q)
}
