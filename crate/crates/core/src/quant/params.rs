use crate::error::{Error, Result};

/// Smallest scale ever used; keeps all-zero tensors well defined.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Affine int8 mapping `real = (q − zero_point) · scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i8,
}

impl QuantParams {
    pub fn new(scale: f32, zero_point: i8) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::config(format!(
                "quantization scale {scale} must be positive"
            )));
        }
        Ok(Self { scale, zero_point })
    }

    /// Maps `[min, max]` (which must contain 0) onto the 256 int8 codes.
    pub fn from_range(min: f64, max: f64) -> Self {
        let (min, max) = (min.min(0.0), max.max(0.0));
        let scale = ((max - min) / 255.0).max(SCALE_FLOOR) as f32;
        let zp = (-min / f64::from(scale)).round() - 128.0;
        Self {
            scale,
            zero_point: zp.clamp(-128.0, 127.0) as i8,
        }
    }

    pub fn quantize(&self, x: f64) -> i8 {
        let q = (x / f64::from(self.scale)).round() + f64::from(self.zero_point);
        q.clamp(-128.0, 127.0) as i8
    }

    pub fn dequantize(&self, q: i8) -> f64 {
        f64::from(i32::from(q) - i32::from(self.zero_point)) * f64::from(self.scale)
    }
}

/// Symmetric per-tensor weight quantization: `scale = max|w| / 127` (with
/// the floor), codes `clamp(round(w / scale), −127, 127)` rounding half
/// away from zero.
pub fn quantize_weights(weights: &[f64]) -> (f32, Vec<i8>) {
    let max_abs = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let scale = (max_abs / 127.0).max(SCALE_FLOOR) as f32;
    let s = f64::from(scale);
    let codes = weights
        .iter()
        .map(|w| (w / s).round().clamp(-127.0, 127.0) as i8)
        .collect();
    (scale, codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_formula_by_hand() {
        let (scale, codes) = quantize_weights(&[1.27, 0.5, -0.005, -1.27]);
        assert!((f64::from(scale) - 0.01).abs() < 1e-9);
        assert_eq!(codes, vec![127, 50, -1, -127]);
    }

    #[test]
    fn all_zero_weights() {
        let (scale, codes) = quantize_weights(&[0.0; 5]);
        assert_eq!(f64::from(scale), SCALE_FLOOR as f32 as f64);
        assert!(codes.iter().all(|&c| c == 0));
        assert!(codes
            .iter()
            .all(|&c| f64::from(c) * f64::from(scale) == 0.0));
    }

    #[test]
    fn activation_params_cover_range() {
        let p = QuantParams::from_range(0.0, 2.55);
        assert_eq!(p.zero_point, -128);
        assert_eq!(p.quantize(0.0), -128);
        assert_eq!(p.quantize(2.55), 127);
        let p = QuantParams::from_range(-1.0, 1.0);
        assert_eq!(p.quantize(0.0), p.zero_point);
        assert!(p.dequantize(p.quantize(0.0)) == 0.0);
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(QuantParams::new(0.0, 0).is_err());
        assert!(QuantParams::new(f32::NAN, 0).is_err());
    }
}
