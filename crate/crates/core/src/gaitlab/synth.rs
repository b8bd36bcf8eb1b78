use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::Tensor;

use super::GaitTrace;

/// Walking and running speeds of the reference protocol.
pub const TREADMILL_SPEEDS_KMH: [f64; 7] = [5.0, 7.0, 9.0, 11.0, 13.0, 17.0, 19.0];

const NOISE_ACCEL: f64 = 0.02;
const NOISE_GYRO: f64 = 0.04;
/// Decay time constant of the heel-strike and toe-off transients.
const TRANSIENT_TAU_S: f64 = 0.03;
const STRIDE_JITTER: f64 = 0.03;

/// Steps per minute; rises linearly with speed.
pub fn cadence_spm(speed_kmh: f64) -> f64 {
    95.0 + 4.8 * speed_kmh
}

/// Fraction of a stride spent in stance: 0.62 up to 7 km/h, 0.35 from
/// 13 km/h, linear across the walk-run transition.
pub fn stance_fraction(speed_kmh: f64) -> f64 {
    const WALK: (f64, f64) = (7.0, 0.62);
    const RUN: (f64, f64) = (13.0, 0.35);
    if speed_kmh <= WALK.0 {
        WALK.1
    } else if speed_kmh >= RUN.0 {
        RUN.1
    } else {
        WALK.1 + (speed_kmh - WALK.0) / (RUN.0 - WALK.0) * (RUN.1 - WALK.1)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-subject multipliers in [0.9, 1.1], independent of the trace seed.
struct SubjectProfile {
    cadence: f64,
    amplitude: [f64; 6],
}

impl SubjectProfile {
    fn new(subject_id: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(0x5EED_0000 ^ u64::from(subject_id)));
        let mut factor = || 1.0 + rng.random_range(-0.1..=0.1);
        let cadence = factor();
        let amplitude = std::array::from_fn(|_| factor());
        Self { cadence, amplitude }
    }
}

/// Generates a labelled 6-axis trace.
///
/// Each stride starts with heel strike. The stance part carries a
/// roll-over pattern and an impact transient at onset; the swing part a
/// large sagittal rotation and a push-off transient at toe-off. Stride
/// periods jitter by a few percent, and labels come from the generating
/// phase, so they are exact.
pub fn synth_trace(
    subject_id: u32,
    speed_kmh: f64,
    duration_s: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<GaitTrace> {
    if !(3.0..=25.0).contains(&speed_kmh) {
        return Err(Error::config(format!(
            "speed {speed_kmh} km/h outside [3, 25]"
        )));
    }
    if duration_s.is_nan() || duration_s < 2.0 {
        return Err(Error::config(format!(
            "duration {duration_s} s shorter than 2 s"
        )));
    }
    if !(sample_rate.is_finite() && sample_rate >= 10.0) {
        return Err(Error::config(format!(
            "sample rate {sample_rate} Hz below 10 Hz"
        )));
    }
    let profile = SubjectProfile::new(subject_id);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(
        splitmix(seed) ^ splitmix(u64::from(subject_id) << 32) ^ speed_kmh.to_bits(),
    ));

    let n = (duration_s * sample_rate).round() as usize;
    let duty = stance_fraction(speed_kmh);
    let period = 120.0 / (cadence_spm(speed_kmh) * profile.cadence);
    let intensity = 0.5 + 0.1 * speed_kmh;

    // stride boundaries, starting mid-stride
    let mut bounds = vec![-rng.random_range(0.0..1.0) * period];
    while *bounds.last().unwrap() <= duration_s {
        let jitter =
            (STRIDE_JITTER * rng.sample::<f64, _>(rand_distr::StandardNormal)).clamp(-0.08, 0.08);
        bounds.push(bounds.last().unwrap() + period * (1.0 + jitter));
    }

    let accel_noise = Normal::new(0.0, NOISE_ACCEL).expect("valid sigma");
    let gyro_noise = Normal::new(0.0, NOISE_GYRO).expect("valid sigma");
    let mut data = vec![0.0; 6 * n];
    let mut labels = Vec::with_capacity(n);
    let mut stride = 0;
    for i in 0..n {
        let t = i as f64 / sample_rate;
        while t >= bounds[stride + 1] {
            stride += 1;
        }
        let (start, len) = (bounds[stride], bounds[stride + 1] - bounds[stride]);
        let p = (t - start) / len;
        let toe_off = start + duty * len;
        let impact = (-(t - start) / TRANSIENT_TAU_S).exp();

        let mut v = [0.0; 6];
        let stance = p < duty;
        if stance {
            let s = p / duty;
            v[0] = 0.3 * (2.0 * PI * s).sin() - 0.8 * impact;
            v[2] = 1.0 + 0.2 * (PI * s).sin() + 1.5 * impact;
            v[4] = 0.1 * (PI * s).sin() + 0.8 * impact;
        } else {
            let w = (p - duty) / (1.0 - duty);
            let push = (-(t - toe_off) / TRANSIENT_TAU_S).exp();
            v[0] = 0.6 * (2.0 * PI * w).sin() + 0.5 * push;
            v[2] = 1.0 - 0.5 * (PI * w).sin() - 0.5 * push;
            v[4] = -1.5 * (PI * w).sin() - 0.4 * push;
        }
        v[1] = 0.15 * (2.0 * PI * p + 0.3).sin();
        v[3] = 0.2 * (2.0 * PI * p).sin();
        v[5] = 0.1 * (2.0 * PI * p).cos();

        for (c, value) in v.iter().enumerate() {
            let gravity = if c == 2 { 1.0 } else { 0.0 };
            let dynamic = (value - gravity) * intensity * profile.amplitude[c];
            let noise = if c < 3 {
                accel_noise.sample(&mut rng)
            } else {
                gyro_noise.sample(&mut rng)
            };
            data[c * n + i] = gravity + dynamic + noise;
        }
        labels.push(if stance { 0 } else { 1 });
    }

    Ok(GaitTrace {
        subject_id,
        speed_kmh,
        sample_rate,
        samples: Tensor::new(6, n, data)?,
        labels,
    })
}
