//! Synthetic IMU gait traces with exact phase labels, step extraction and
//! per-step timing metrics.

mod io;
mod steps;
mod synth;
mod timing;

pub use io::{load_dir, read_trace_csv, trace_file_name, write_trace_csv, CSV_HEADER};
pub use steps::{extract_steps, majority_filter, StepEvents, StepRun, DEFAULT_SMOOTH_WIDTH};
pub use synth::{cadence_spm, stance_fraction, synth_trace, TREADMILL_SPEEDS_KMH};
pub use timing::{accuracy, timing_errors, TimingAccumulator, TimingErrorReport};

use crate::nn::Tensor;

pub const DEFAULT_SAMPLE_RATE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Stance = 0,
    Swing = 1,
}

impl Phase {
    pub fn from_label(label: u8) -> Option<Phase> {
        match label {
            0 => Some(Phase::Stance),
            1 => Some(Phase::Swing),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }
}

/// One recording: `6 × T` samples (ax, ay, az, gx, gy, gz) with a phase
/// label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrace {
    pub subject_id: u32,
    pub speed_kmh: f64,
    pub sample_rate: f64,
    pub samples: Tensor,
    pub labels: Vec<u8>,
}

impl GaitTrace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
