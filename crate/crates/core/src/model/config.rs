use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Accelerometer xyz + gyroscope xyz.
pub const IN_CHANNELS: usize = 6;
/// Stance and swing.
pub const NUM_CLASSES: usize = 2;
/// 5.12 s at 50 Hz; divisible by 2^4 so every depth in 3..=5 accepts it.
pub const DEFAULT_WINDOW: usize = 256;

pub const MIN_DEPTH: usize = 3;
pub const MAX_DEPTH: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub depth: usize,
    pub width_fraction: f64,
    pub base_channels: usize,
    pub kernel_size: usize,
    pub in_channels: usize,
    pub num_classes: usize,
    /// Explicit per-level channel counts, replacing the scaled schedule.
    pub channel_override: Option<Vec<usize>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            depth: MAX_DEPTH,
            width_fraction: 1.0,
            base_channels: 64,
            kernel_size: 3,
            in_channels: IN_CHANNELS,
            num_classes: NUM_CLASSES,
            channel_override: None,
        }
    }
}

impl ModelConfig {
    pub fn scaled(depth: usize, width_fraction: f64) -> Self {
        Self {
            depth,
            width_fraction,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::config(format!(
                "depth {} outside {MIN_DEPTH}..={MAX_DEPTH}",
                self.depth
            )));
        }
        if !(self.width_fraction > 0.0 && self.width_fraction <= 1.0) {
            return Err(Error::config(format!(
                "width fraction {} outside (0, 1]",
                self.width_fraction
            )));
        }
        if self.base_channels == 0 {
            return Err(Error::config("base channels must be positive"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "kernel size {} must be odd",
                self.kernel_size
            )));
        }
        if self.in_channels == 0 || self.num_classes < 2 {
            return Err(Error::config(
                "need at least one input channel and two classes",
            ));
        }
        if let Some(ch) = &self.channel_override {
            if ch.len() != self.depth {
                return Err(Error::config(format!(
                    "channel override lists {} levels for depth {}",
                    ch.len(),
                    self.depth
                )));
            }
            if ch.iter().any(|&c| c < 2) {
                return Err(Error::config("every level needs at least 2 channels"));
            }
        }
        Ok(())
    }

    /// Channels per level, top (full rate) first.
    pub fn channels(&self) -> Vec<usize> {
        if let Some(ch) = &self.channel_override {
            return ch.clone();
        }
        let first = (self.base_channels as f64 * self.width_fraction).round() as usize;
        (0..self.depth).map(|i| (first << i).max(2)).collect()
    }

    /// Window lengths must be multiples of this.
    pub fn length_multiple(&self) -> usize {
        1 << (self.depth - 1)
    }

    pub fn check_length(&self, length: usize) -> Result<()> {
        let m = self.length_multiple();
        if length == 0 || !length.is_multiple_of(m) {
            return Err(Error::shape(format!(
                "window length {length} must be a positive multiple of {m}"
            )));
        }
        Ok(())
    }

    /// `(out, in, kernel)` of every conv in build order: encoder levels top
    /// to bottom, decoder stages bottom to top, then the 1×1 head.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, usize)> {
        let ch = self.channels();
        let k = self.kernel_size;
        let mut shapes = Vec::with_capacity(2 * self.depth);
        let mut prev = self.in_channels;
        for &c in &ch {
            shapes.push((c, prev, k));
            prev = c;
        }
        for level in (0..self.depth - 1).rev() {
            shapes.push((ch[level], ch[level] + ch[level + 1], k));
        }
        shapes.push((self.num_classes, ch[0], 1));
        shapes
    }
}

/// Named configurations: the flagship `micro` model and the scaled rows
/// of the width/depth study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Micro,
    D3W6,
    D4W6,
    D5W12,
    Full,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Micro,
        Preset::D3W6,
        Preset::D4W6,
        Preset::D5W12,
        Preset::Full,
    ];

    pub fn config(self) -> ModelConfig {
        match self {
            Preset::Micro => ModelConfig {
                depth: 3,
                width_fraction: 0.0625,
                channel_override: Some(vec![2, 4, 8]),
                ..ModelConfig::default()
            },
            Preset::D3W6 => ModelConfig::scaled(3, 0.0625),
            Preset::D4W6 => ModelConfig::scaled(4, 0.0625),
            Preset::D5W12 => ModelConfig::scaled(5, 0.125),
            Preset::Full => ModelConfig::scaled(5, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Micro => "micro",
            Preset::D3W6 => "d3w6",
            Preset::D4W6 => "d4w6",
            Preset::D5W12 => "d5w12",
            Preset::Full => "full",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset {s:?}")))
    }
}
