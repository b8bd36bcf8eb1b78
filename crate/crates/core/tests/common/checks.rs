//! Oracle sweeps used by both the focused suites and the acceptance run.
//! Each returns a one-line summary, or the first discrepancy.

use gaitseg::model::{Preset, UNetModel};
use gaitseg::nn::int::{argmax_channels, qconv1d, requantize, FixedMultiplier, QConvWeights};
use gaitseg::nn::{
    conv1d_backward, conv1d_forward, maxpool2_backward, maxpool2_forward, relu, relu_backward,
    softmax_channels, upsample2_backward, upsample2_forward,
};
use gaitseg::trainer::cross_entropy;
use gaitseg::{ConvWeights, Tensor};
use rand::Rng;

use super::*;

const FLOAT_TOL: f64 = 1e-6;

pub fn kernel_oracles(cases: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let (i_n, o_n) = (r.random_range(1..=6), r.random_range(1..=6));
        let k = [1, 3, 5, 7][r.random_range(0..4)];
        let len = r.random_range(1..=48);
        let x = random_rows(&mut r, i_n, len, 3.0);
        let w = random_conv(&mut r, o_n, i_n, k);

        let got = conv1d_forward(&tensor_of(&x), &w).map_err(|e| e.to_string())?;
        let d = max_abs_diff(got.data(), &flat(&conv_oracle(&x, &w)));
        worst = worst.max(d);
        if d > FLOAT_TOL {
            return Err(format!(
                "conv case {case}: {i_n}->{o_n} k={k} len={len} differs by {d:e}"
            ));
        }

        let (pooled, _) = maxpool2_forward(&tensor_of(&x));
        if rows_of(&pooled) != maxpool_oracle(&x) {
            return Err(format!("maxpool case {case}: len={len}"));
        }
        if rows_of(&upsample2_forward(&tensor_of(&x))) != upsample_oracle(&x) {
            return Err(format!("upsample case {case}: len={len}"));
        }

        // wide logits exercise the max subtraction
        let classes = r.random_range(2..=5);
        let logits = random_rows(&mut r, classes, len, 40.0);
        let sm = softmax_channels(&tensor_of(&logits));
        let d = max_abs_diff(sm.data(), &flat(&softmax_oracle(&logits)));
        worst = worst.max(d);
        if d > FLOAT_TOL {
            return Err(format!("softmax case {case}: differs by {d:e}"));
        }
    }
    let int_cases = integer_oracles(cases, seed ^ 0x1)?;
    let net_cases = network_oracles(cases.min(20), seed ^ 0x2)?;
    Ok(format!(
        "{cases} cases per float kernel, max abs err {worst:.2e}; {int_cases}; {net_cases}"
    ))
}

pub fn integer_oracles(cases: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    for case in 0..cases {
        let (i_n, o_n) = (r.random_range(1..=6), r.random_range(1..=6));
        let k = [1, 3, 5][r.random_range(0..3)];
        let len = r.random_range(1..=48);
        let x: Vec<Vec<i8>> = (0..i_n)
            .map(|_| (0..len).map(|_| r.random()).collect())
            .collect();
        let zp: i8 = r.random();
        let w: Vec<i8> = (0..o_n * i_n * k)
            .map(|_| r.random_range(-127..=127))
            .collect();
        let b: Vec<i32> = (0..o_n)
            .map(|_| r.random_range(-100_000..100_000))
            .collect();
        let qw = QConvWeights::new(o_n, i_n, k, w.clone(), b.clone()).map_err(|e| e.to_string())?;
        let acc = qconv1d(&tensor_of(&x), zp, &qw).map_err(|e| e.to_string())?;
        let want = qconv_oracle(&x, zp, &w, &b, k);
        let got: Vec<Vec<i64>> = rows_of(&acc)
            .into_iter()
            .map(|r| r.into_iter().map(i64::from).collect())
            .collect();
        if got != want {
            return Err(format!(
                "int conv case {case}: {i_n}->{o_n} k={k} len={len}"
            ));
        }

        let m = FixedMultiplier::from_real(10f64.powf(r.random_range(-6.0..0.5)))
            .map_err(|e| e.to_string())?;
        let out_zp: i8 = r.random();
        let relu_flag = r.random_bool(0.5);
        let q = requantize(&acc, m, out_zp, relu_flag);
        if rows_of(&q) != requant_oracle(&want, m, out_zp, relu_flag) {
            return Err(format!(
                "requantize case {case}: multiplier {}>>{}",
                m.multiplier(),
                m.shift()
            ));
        }
        if rows_of(&maxpool2_forward(&q).0) != maxpool_oracle(&rows_of(&q)) {
            return Err(format!("int maxpool case {case}"));
        }
        let labels = argmax_channels(&acc);
        for (t, &l) in labels.iter().enumerate() {
            let col: Vec<i64> = want.iter().map(|row| row[t]).collect();
            let best = col.iter().copied().max().unwrap();
            if col.iter().position(|&v| v == best) != Some(usize::from(l)) {
                return Err(format!("argmax case {case} at t={t}"));
            }
        }
    }
    Ok(format!("{cases} integer cases exact"))
}

pub fn network_oracles(cases: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let len = 4 * r.random_range(1..=16);
        let (model, q) = random_qmodel(seed + case as u64, len);
        let x = random_rows(&mut r, 6, len, 2.5);
        let probs = model.forward(&tensor_of(&x)).map_err(|e| e.to_string())?;
        let d = max_abs_diff(probs.data(), &flat(&unet_oracle(&model, &x)));
        worst = worst.max(d);
        if d > FLOAT_TOL {
            return Err(format!("float U-Net case {case}: differs by {d:e}"));
        }
        let labels = q
            .qforward(&tensor_of(&x))
            .map_err(|e| e.to_string())?
            .labels;
        if labels != qunet_oracle(&q, &x) {
            return Err(format!("int8 U-Net case {case}: labels differ"));
        }
    }
    Ok(format!(
        "{cases} whole networks (float err {worst:.2e}, int8 exact)"
    ))
}

const H_OP: f64 = 1e-3;
const H_MODEL: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-7;

struct Worst(f64, String);

impl Worst {
    fn check(&mut self, what: &str, analytic: f64, numeric: f64) {
        let e = rel_err(analytic, numeric, ABS_FLOOR);
        if e > self.0 {
            *self = Worst(e, what.to_string());
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn gradients(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut worst = Worst(0.0, String::new());
    let mut checked = 0usize;

    // conv: L = <g, conv(x, w)>
    for _ in 0..5 {
        let (i_n, o_n, k, len) = (
            r.random_range(1..=4),
            r.random_range(1..=4),
            3,
            r.random_range(2..=12),
        );
        let x = random_rows(&mut r, i_n, len, 1.0);
        let w = random_conv(&mut r, o_n, i_n, k);
        let g = random_rows(&mut r, o_n, len, 1.0);
        let gt = tensor_of(&g);
        let (gx, gw) = conv1d_backward(&tensor_of(&x), &w, &gt).map_err(|e| e.to_string())?;
        let loss = |x: &Rows, w: &ConvWeights| {
            dot(conv1d_forward(&tensor_of(x), w).unwrap().data(), gt.data())
        };
        for c in 0..i_n {
            for t in 0..len {
                let num = central_diff(
                    |v| {
                        let mut xp = x.clone();
                        xp[c][t] = v;
                        loss(&xp, &w)
                    },
                    x[c][t],
                    H_OP,
                );
                worst.check("conv dx", gx.get(c, t), num);
                checked += 1;
            }
        }
        for i in 0..w.weights().len() {
            let num = central_diff(
                |v| {
                    let mut wp = w.clone();
                    wp.weights_mut()[i] = v;
                    loss(&x, &wp)
                },
                w.weights()[i],
                H_OP,
            );
            worst.check("conv dw", gw.weights()[i], num);
        }
        for o in 0..o_n {
            let num = central_diff(
                |v| {
                    let mut wp = w.clone();
                    wp.bias_mut()[o] = v;
                    loss(&x, &wp)
                },
                w.bias()[o],
                H_OP,
            );
            worst.check("conv db", gw.bias()[o], num);
        }
        checked += w.param_count();
    }

    // piecewise-linear ops, inputs kept away from ties and zero
    for _ in 0..5 {
        let (ch, len) = (r.random_range(1..=3), r.random_range(2..=11));
        let vals = separated_values(&mut r, ch * len, 2.0, 10.0 * H_OP);
        let x = Tensor::new(ch, len, vals).unwrap();

        let (p, idx) = maxpool2_forward(&x);
        let g = Tensor::new(
            ch,
            p.length(),
            (0..ch * p.length())
                .map(|_| r.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let gx = maxpool2_backward(&idx, &g).map_err(|e| e.to_string())?;
        let gr = Tensor::new(
            ch,
            len,
            (0..ch * len).map(|_| r.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let grx = relu_backward(&x, &gr).map_err(|e| e.to_string())?;
        let gu = Tensor::new(
            ch,
            2 * len,
            (0..2 * ch * len)
                .map(|_| r.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let gux = upsample2_backward(&gu).map_err(|e| e.to_string())?;
        for i in 0..ch * len {
            let perturbed = |v: f64| {
                let mut d = x.data().to_vec();
                d[i] = v;
                Tensor::new(ch, len, d).unwrap()
            };
            let x0 = x.data()[i];
            let num = central_diff(
                |v| dot(maxpool2_forward(&perturbed(v)).0.data(), g.data()),
                x0,
                H_OP,
            );
            worst.check("maxpool", gx.data()[i], num);
            let num = central_diff(|v| dot(relu(&perturbed(v)).data(), gr.data()), x0, H_OP);
            worst.check("relu", grx.data()[i], num);
            let num = central_diff(
                |v| dot(upsample2_forward(&perturbed(v)).data(), gu.data()),
                x0,
                H_OP,
            );
            worst.check("upsample", gux.data()[i], num);
            checked += 3;
        }
    }

    // fused softmax + cross-entropy on the logits
    for _ in 0..5 {
        let (ch, len) = (r.random_range(2..=4), r.random_range(1..=10));
        let logits = random_rows(&mut r, ch, len, 3.0);
        let labels: Vec<u8> = (0..len).map(|_| r.random_range(0..ch as u8)).collect();
        let (_, grad) = cross_entropy(&softmax_channels(&tensor_of(&logits)), &labels)
            .map_err(|e| e.to_string())?;
        for c in 0..ch {
            for t in 0..len {
                let num = central_diff(
                    |v| {
                        let mut lp = logits.clone();
                        lp[c][t] = v;
                        cross_entropy(&softmax_channels(&tensor_of(&lp)), &labels)
                            .unwrap()
                            .0
                    },
                    logits[c][t],
                    H_OP,
                );
                worst.check("softmax+CE", grad.get(c, t), num);
                checked += 1;
            }
        }
    }

    let (model_checked, model_worst) = model_gradient(seed)?;
    if model_worst.0 > worst.0 {
        worst = model_worst;
    }
    checked += model_checked;
    if worst.0 >= REL_TOL {
        return Err(format!(
            "{} rel err {:.2e} >= {REL_TOL:e}",
            worst.1, worst.0
        ));
    }
    Ok(format!(
        "{checked} partials, worst rel err {:.2e} ({})",
        worst.0, worst.1
    ))
}

/// Every parameter of a micro model on a 32-sample window.
fn model_gradient(seed: u64) -> Result<(usize, Worst), String> {
    let mut r = rng(seed ^ 0xfd);
    let model = UNetModel::build(Preset::Micro.config(), seed).map_err(|e| e.to_string())?;
    let x = tensor_of(&random_rows(&mut r, 6, 32, 2.0));
    let labels: Vec<u8> = (0..32).map(|_| r.random_range(0..2)).collect();
    let loss = |m: &UNetModel| cross_entropy(&m.forward(&x).unwrap(), &labels).unwrap().0;
    let (probs, cache) = model.forward_cached(&x).map_err(|e| e.to_string())?;
    let (_, g_logits) = cross_entropy(&probs, &labels).map_err(|e| e.to_string())?;
    let grads = model
        .backward(&cache, &g_logits)
        .map_err(|e| e.to_string())?;
    let mut worst = Worst(0.0, String::new());
    let mut checked = 0;
    for (l, g) in grads.layers.iter().enumerate() {
        for i in 0..g.weights().len() {
            let num = central_diff(
                |v| {
                    let mut m = model.clone();
                    m.layers_mut()[l].weights_mut()[i] = v;
                    loss(&m)
                },
                model.layers()[l].weights()[i],
                H_MODEL,
            );
            worst.check(&format!("model layer {l} w[{i}]"), g.weights()[i], num);
        }
        for o in 0..g.bias().len() {
            let num = central_diff(
                |v| {
                    let mut m = model.clone();
                    m.layers_mut()[l].bias_mut()[o] = v;
                    loss(&m)
                },
                model.layers()[l].bias()[o],
                H_MODEL,
            );
            worst.check(&format!("model layer {l} b[{o}]"), g.bias()[o], num);
        }
        checked += g.param_count();
    }
    Ok((checked, worst))
}

/// Streams `traces` through `q` one sample at a time and compares against
/// the offline composition.
pub fn streaming(
    q: &gaitseg::QuantizedModel,
    traces: &[Rows],
    window: usize,
    hop: usize,
) -> Result<String, String> {
    use gaitseg::stream::StreamState;
    for (n, x) in traces.iter().enumerate() {
        let len = x[0].len();
        let mut s = StreamState::new(q.clone(), window, hop).map_err(|e| e.to_string())?;
        let mut got = Vec::with_capacity(len);
        for t in 0..len {
            let sample = std::array::from_fn(|c| x[c][t]);
            got.extend(s.push_sample(sample).map_err(|e| e.to_string())?);
        }
        got.extend(s.flush().map_err(|e| e.to_string())?);
        let indices: Vec<usize> = got.iter().map(|p| p.0).collect();
        if indices != (0..len).collect::<Vec<_>>() {
            return Err(format!(
                "trace {n} (len {len}): labels not emitted once each in order"
            ));
        }
        let labels: Vec<u8> = got.into_iter().map(|p| p.1).collect();
        if let Some(i) = labels
            .iter()
            .zip(stream_oracle(q, x, window, hop))
            .position(|(a, b)| *a != b)
        {
            return Err(format!(
                "trace {n} (len {len}): first mismatch at sample {i}"
            ));
        }
    }
    Ok(format!(
        "{} traces bit-identical (W={window}, hop={hop})",
        traces.len()
    ))
}
