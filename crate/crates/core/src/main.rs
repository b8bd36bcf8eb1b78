use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaitseg::eval::{evaluate, Segmenter};
use gaitseg::gaitlab::{
    accuracy, load_dir, read_trace_csv, synth_trace, trace_file_name, write_trace_csv,
    DEFAULT_SMOOTH_WIDTH,
};
use gaitseg::model::{
    read_float_model, write_float_model, Preset, UNetModel, DEFAULT_WINDOW, FLOAT_MAGIC,
};
use gaitseg::quant::{calibrate, deserialize, hexdump, quantize_model, serialize, QUANT_MAGIC};
use gaitseg::stream::{report_budget, StreamState};
use gaitseg::trainer::{
    eval_windows, kfold_cv, mean_accuracy, train, training_windows, CvOptions, TrainHyper,
};
use gaitseg::{Error, GaitTrace, QuantizedModel, Result};

#[derive(Parser)]
#[command(
    name = "gaitseg",
    version,
    about = "Tiny U-Net gait phase segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value = "micro")]
    preset: Preset,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
}

impl TrainArgs {
    fn hyper(&self) -> TrainHyper {
        TrainHyper {
            batch_size: self.batch,
            epochs: self.epochs,
            learning_rate: self.lr,
            seed: self.seed,
            ..TrainHyper::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic labelled traces, one CSV per (subject, speed).
    Gen {
        #[arg(long, default_value_t = 3)]
        subjects: u32,
        #[arg(long, value_delimiter = ',', default_value = "5,7,9,11,13,17,19")]
        speeds: Vec<f64>,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 50.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a float model on every trace in a directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        args: TrainArgs,
        #[arg(long)]
        out: PathBuf,
        /// Write per-epoch loss and validation accuracy as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Subject-independent k-fold cross-validation.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        #[command(flatten)]
        args: TrainArgs,
        #[arg(long, default_value_t = DEFAULT_SMOOTH_WIDTH)]
        smooth: usize,
        /// Per-fold report CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post-training int8 quantization of a float model.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Print the annotated byte layout of the written file.
        #[arg(long)]
        hexdump: bool,
    },
    /// Accuracy and per-step timing errors of a float or int8 model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_SMOOTH_WIDTH)]
        smooth: usize,
    },
    /// Replay a trace sample by sample through the int8 model.
    Stream {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW / 2)]
        hop: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Per-sample label CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter, size, compute and latency budget of a preset.
    Budget {
        #[arg(long, default_value = "micro")]
        preset: Preset,
        #[arg(long, default_value_t = 50.0)]
        rate: f64,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW / 2)]
        hop: usize,
    },
    /// Describe an int8 model file.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        hexdump: bool,
    },
}

enum AnyModel {
    Float(UNetModel),
    Int8(QuantizedModel),
}

fn load_model(path: &Path) -> Result<AnyModel> {
    let bytes = fs::read(path)?;
    match bytes.get(..4) {
        Some(m) if m == FLOAT_MAGIC => Ok(AnyModel::Float(read_float_model(&bytes)?)),
        Some(m) if m == QUANT_MAGIC => Ok(AnyModel::Int8(deserialize(&bytes)?)),
        _ => Err(Error::Format {
            offset: 0,
            msg: format!("{} is neither a GPF1 nor a GPQ1 model", path.display()),
        }),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            subjects,
            speeds,
            duration,
            rate,
            seed,
            out,
        } => {
            fs::create_dir_all(&out)?;
            for subject in 0..subjects {
                for &speed in &speeds {
                    let trace = synth_trace(subject, speed, duration, rate, seed)?;
                    let path = out.join(trace_file_name(subject, speed));
                    write_trace_csv(&trace, BufWriter::new(File::create(&path)?))?;
                }
            }
            println!(
                "wrote {} traces to {}",
                subjects as usize * speeds.len(),
                out.display()
            );
        }
        Command::Train {
            data,
            args,
            out,
            history,
        } => {
            let traces = load_dir(&data)?;
            let windows = training_windows(traces.iter().enumerate(), args.window)?;
            let outcome = train(&windows, &args.preset.config(), &args.hyper())?;
            fs::write(&out, write_float_model(&outcome.model)?)?;
            if let Some(path) = history {
                let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
                w.write_record(["epoch", "train_loss", "val_accuracy"])
                    .map_err(Error::from)?;
                for r in &outcome.history {
                    w.write_record([
                        r.epoch.to_string(),
                        r.train_loss.to_string(),
                        r.val_accuracy.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
                w.flush()?;
            }
            let last = outcome.history.last();
            println!(
                "trained {} ({} params) on {} windows: final loss {:.5}, validation accuracy {:.4}",
                args.preset,
                outcome.model.param_count(),
                outcome.train_sources.len(),
                last.map_or(f64::NAN, |r| r.train_loss),
                last.map_or(f64::NAN, |r| r.val_accuracy)
            );
        }
        Command::Cv {
            data,
            folds,
            args,
            smooth,
            out,
        } => {
            let traces = load_dir(&data)?;
            let opts = CvOptions {
                window: args.window,
                smooth_width: smooth,
            };
            let reports = kfold_cv(&traces, folds, &args.preset.config(), &args.hyper(), &opts)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record([
                "fold",
                "held_out_subject",
                "accuracy",
                "quantized_accuracy",
                "stance_mean_ms",
                "stance_std_ms",
                "swing_mean_ms",
                "swing_std_ms",
                "matched_steps",
                "unmatched_pred",
                "unmatched_true",
                "train_windows",
                "val_windows",
                "leaked_windows",
            ])?;
            let mut q_sum = 0.0;
            for f in &reports {
                let train_traces: Vec<(usize, &GaitTrace)> = traces
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.subject_id != f.held_out_subject)
                    .collect();
                let calib: Vec<_> = eval_windows(train_traces, args.window)?
                    .into_iter()
                    .map(|w| w.samples)
                    .collect();
                let q = quantize_model(&f.model, &calibrate(&f.model, &calib)?)?;
                let q_acc = evaluate(
                    &q,
                    f.test_traces.iter().map(|&i| &traces[i]),
                    args.window,
                    smooth,
                )?
                .accuracy;
                q_sum += q_acc;
                let t = &f.timing;
                w.write_record([
                    f.fold_index.to_string(),
                    f.held_out_subject.to_string(),
                    f.accuracy.to_string(),
                    q_acc.to_string(),
                    t.stance_mean_ms.to_string(),
                    t.stance_std_ms.to_string(),
                    t.swing_mean_ms.to_string(),
                    t.swing_std_ms.to_string(),
                    t.matched_steps.to_string(),
                    t.unmatched_pred.to_string(),
                    t.unmatched_true.to_string(),
                    f.train_sources.len().to_string(),
                    f.val_sources.len().to_string(),
                    f.leaked_windows().to_string(),
                ])?;
            }
            w.flush()?;
            drop(w);
            eprintln!(
                "mean accuracy {:.4}, mean quantized accuracy {:.4} over {} folds",
                mean_accuracy(&reports),
                q_sum / reports.len() as f64,
                reports.len()
            );
        }
        Command::Quantize {
            model,
            calib,
            out,
            window,
            hexdump: dump,
        } => {
            let AnyModel::Float(float) = load_model(&model)? else {
                return Err(Error::Config(format!(
                    "{} is already quantized",
                    model.display()
                )));
            };
            let traces = load_dir(&calib)?;
            let windows: Vec<_> = eval_windows(traces.iter().enumerate(), window)?
                .into_iter()
                .map(|w| w.samples)
                .collect();
            let q = quantize_model(&float, &calibrate(&float, &windows)?)?;
            let blob = serialize(&q)?;
            fs::write(&out, &blob)?;
            println!(
                "wrote {} ({} bytes, calibrated on {} windows)",
                out.display(),
                blob.len(),
                windows.len()
            );
            if dump {
                print!("{}", hexdump(&blob)?);
            }
        }
        Command::Eval {
            model,
            data,
            window,
            smooth,
        } => {
            let model = load_model(&model)?;
            let traces = load_dir(&data)?;
            let seg: &dyn Segmenter = match &model {
                AnyModel::Float(m) => m,
                AnyModel::Int8(q) => q,
            };
            let s = evaluate(seg, &traces, window, smooth)?;
            let t = s.timing;
            println!("traces: {}", traces.len());
            println!("samples: {}", s.samples);
            println!("accuracy: {:.6}", s.accuracy);
            println!(
                "stance_error_ms: {:.3} +- {:.3}",
                t.stance_mean_ms, t.stance_std_ms
            );
            println!(
                "swing_error_ms: {:.3} +- {:.3}",
                t.swing_mean_ms, t.swing_std_ms
            );
            println!("matched_steps: {}", t.matched_steps);
            println!("unmatched_pred: {}", t.unmatched_pred);
            println!("unmatched_true: {}", t.unmatched_true);
        }
        Command::Stream {
            model,
            data,
            hop,
            window,
            out,
        } => {
            let AnyModel::Int8(q) = load_model(&model)? else {
                return Err(Error::Config("streaming runs the int8 model only".into()));
            };
            let trace = read_trace_csv(File::open(&data)?, 0, f64::NAN)?;
            let mut state = StreamState::new(q, window, hop)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "index,label")?;
            let mut labels = Vec::with_capacity(trace.len());
            for t in 0..trace.len() {
                let sample = std::array::from_fn(|c| trace.samples.get(c, t));
                for (i, l) in state.push_sample(sample)? {
                    writeln!(w, "{i},{l}")?;
                    labels.push(l);
                }
            }
            for (i, l) in state.flush()? {
                writeln!(w, "{i},{l}")?;
                labels.push(l);
            }
            w.flush()?;
            let b = state.budget(trace.sample_rate)?;
            eprintln!("samples: {}", trace.len());
            if !trace.is_empty() {
                eprintln!("accuracy: {:.6}", accuracy(&labels, &trace.labels)?);
            }
            eprintln!("stream_flops_per_second: {:.1}", b.stream_flops_per_second);
            eprintln!("worst_latency_ms: {:.1}", b.worst_latency_ms);
        }
        Command::Budget {
            preset,
            rate,
            window,
            hop,
        } => {
            let b = report_budget(&preset.config(), window, hop, rate)?;
            println!("preset: {preset}");
            println!("params: {}", b.ops.params);
            println!("bytes_float: {}", b.ops.model_bytes_float);
            println!("bytes_int8: {}", b.ops.model_bytes_int8);
            println!("flops_per_sample: {}", b.ops.flops_per_sample);
            println!("flops_per_second: {}", b.ops.flops_per_second);
            println!("window: {}", b.window);
            println!("hop: {}", b.hop);
            println!("flops_per_window: {}", b.flops_per_window);
            println!("stream_flops_per_second: {}", b.stream_flops_per_second);
            println!("worst_latency_ms: {}", b.worst_latency_ms);
        }
        Command::Inspect {
            model,
            hexdump: dump,
        } => {
            let bytes = fs::read(&model)?;
            let q = deserialize(&bytes)?;
            println!("bytes: {}", bytes.len());
            println!("depth: {}", q.config().depth);
            println!("channels: {:?}", q.config().channels());
            println!("params: {}", gaitseg::model::param_count(q.config()));
            if dump {
                print!("{}", hexdump(&bytes)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
