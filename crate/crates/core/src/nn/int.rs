//! Integer kernels for the int8 inference path.
//!
//! Activations are int8 codes with an affine zero point, weights are
//! symmetric int8 codes and biases are int32 in the accumulator scale.
//! Rescaling between layers uses a fixed-point multiplier so that no
//! floating-point arithmetic happens inside a layer.

use crate::error::{Error, Result};

use super::conv::tap_range;
use super::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QConvWeights {
    out_channels: usize,
    in_channels: usize,
    kernel_size: usize,
    weights: Vec<i8>,
    bias: Vec<i32>,
}

impl QConvWeights {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_size: usize,
        weights: Vec<i8>,
        bias: Vec<i32>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || kernel_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "invalid int8 conv {out_channels}x{in_channels}x{kernel_size}"
            )));
        }
        if weights.len() != out_channels * in_channels * kernel_size || bias.len() != out_channels {
            return Err(Error::shape(
                "int8 conv weight/bias sizes do not match dimensions",
            ));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel_size,
            weights,
            bias,
        })
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

    pub fn weights(&self) -> &[i8] {
        &self.weights
    }

    pub fn bias(&self) -> &[i32] {
        &self.bias
    }
}

/// Same-padded int8 convolution into int32 accumulators:
/// `acc[o,t] = bias[o] + Σ w[o,i,k] · (x[i,s] − zp)`. Padding positions hold
/// the real value zero, i.e. the code `zp`, and contribute nothing.
pub fn qconv1d(x: &Tensor<i8>, zero_point: i8, w: &QConvWeights) -> Result<Tensor<i32>> {
    if x.channels() != w.in_channels {
        return Err(Error::shape(format!(
            "int8 conv expects {} input channels, got {}",
            w.in_channels,
            x.channels()
        )));
    }
    let len = x.length();
    let k_size = w.kernel_size;
    let pad = k_size / 2;
    let zp = i32::from(zero_point);
    // centred inputs, computed once
    let centred: Vec<i32> = x.data().iter().map(|&q| i32::from(q) - zp).collect();
    let mut out = Tensor::filled(w.out_channels, len, 0i32);
    for o in 0..w.out_channels {
        let row = out.channel_mut(o);
        row.fill(w.bias[o]);
        for i in 0..w.in_channels {
            let xi = &centred[i * len..(i + 1) * len];
            let taps = &w.weights[(o * w.in_channels + i) * k_size..][..k_size];
            for (t, acc) in row.iter_mut().enumerate() {
                let (k_lo, k_hi) = tap_range(t, pad, k_size, len);
                let mut s = 0i32;
                for k in k_lo..k_hi {
                    s += i32::from(taps[k]) * xi[t + k - pad];
                }
                *acc = acc.saturating_add(s);
            }
        }
    }
    Ok(out)
}

/// A positive real multiplier `m ≈ multiplier · 2^-shift` with
/// `multiplier` in `[2^30, 2^31)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedMultiplier {
    multiplier: i32,
    shift: u32,
}

impl FixedMultiplier {
    pub fn from_real(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::config(format!(
                "requantization multiplier {m} must be positive"
            )));
        }
        // m = frac · 2^exp with frac in [0.5, 1); powers of two scale exactly
        let (mut frac, mut exp) = (m, 0i32);
        while frac >= 1.0 {
            frac /= 2.0;
            exp += 1;
        }
        while frac < 0.5 {
            frac *= 2.0;
            exp -= 1;
        }
        let mut q = (frac * (1u64 << 31) as f64).round() as i64;
        if q == 1i64 << 31 {
            q /= 2;
            exp += 1;
        }
        let shift = 31 - exp;
        if shift < 1 {
            return Err(Error::config(format!(
                "requantization multiplier {m} too large"
            )));
        }
        Ok(Self {
            multiplier: q as i32,
            shift: shift as u32,
        })
    }

    pub fn multiplier(self) -> i32 {
        self.multiplier
    }

    pub fn shift(self) -> u32 {
        self.shift
    }

    /// `round_half_up(acc · multiplier / 2^shift)` in 64-bit integer arithmetic.
    #[inline]
    pub fn apply(self, acc: i32) -> i32 {
        // |acc · multiplier| < 2^62, so anything shifted by 63 or more rounds to 0
        if self.shift >= 63 {
            return 0;
        }
        let prod = i64::from(acc) * i64::from(self.multiplier);
        let rounded = (prod + (1i64 << (self.shift - 1))) >> self.shift;
        rounded.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32
    }
}

/// Rescales int32 accumulators into int8 codes with the given zero point.
/// With `relu`, codes below the zero point (negative reals) clamp to it.
pub fn requantize(
    acc: &Tensor<i32>,
    multiplier: FixedMultiplier,
    zero_point: i8,
    relu: bool,
) -> Tensor<i8> {
    let zp = i32::from(zero_point);
    let lo = if relu { zp } else { i32::from(i8::MIN) };
    let data = acc
        .data()
        .iter()
        .map(|&a| (multiplier.apply(a).saturating_add(zp)).clamp(lo, i32::from(i8::MAX)) as i8)
        .collect();
    Tensor::new(acc.channels(), acc.length(), data).expect("requantize output shape")
}

/// Class id with the largest accumulator at each time step; ties go to the
/// lowest class id.
pub fn argmax_channels(acc: &Tensor<i32>) -> Vec<u8> {
    (0..acc.length())
        .map(|t| {
            let mut best = 0;
            for c in 1..acc.channels() {
                if acc.get(c, t) > acc.get(best, t) {
                    best = c;
                }
            }
            best as u8
        })
        .collect()
}
