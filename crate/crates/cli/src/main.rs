use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use signkit::dataset::{load_dataset, read_tensor, split, synth_generate, write_dataset, SynthSpec};
use signkit::eval::evaluate_with;
use signkit::keypoint::{validate_dataset, SignSequence, FRAME_LEN, SEQUENCE_FRAMES};
use signkit::metrics::Averaging;
use signkit::model::{build, load_checkpoint, save_checkpoint, ArchConfig, ArchId};
use signkit::report::{render_history, render_prediction, render_report, ReportDocument, ReportFormat};
use signkit::stream::{encode_raw_frames, LineFrameReader, RawFrameReader, SlidingWindow};
use signkit::train::{train_with, TrainConfig};
use signkit::translate::{translate, SignLexicon};
use signkit::Error;

#[derive(Parser)]
#[command(name = "signkit", version, about = "Keypoint-sequence sign recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sinusoid dataset with a manifest.
    Synth {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
        classes: u32,
        #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u32).range(1..))]
        per_class: u32,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = FRAME_LEN as u32, value_parser = clap::value_parser!(u32).range(1..))]
        feature_dim: u32,
        #[arg(long, default_value_t = SEQUENCE_FRAMES as u32, value_parser = clap::value_parser!(u32).range(1..))]
        frames: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an architecture on a manifest; writes the checkpoint and history.
    Train {
        #[arg(long)]
        arch: ArchId,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 70, value_parser = clap::value_parser!(u32).range(1..))]
        epochs: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
        batch_size: u32,
        #[arg(long, default_value_t = 0.001)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Divide every hidden width by this factor.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        width_divisor: u32,
        /// Record per-epoch wall time (makes histories differ between runs).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test partition of a manifest.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 42)]
        split_seed: u64,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
        averaging: AveragingArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write `<PREFIX>.txt` and `<PREFIX>.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classify one SKP sequence file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run sliding-window recognition over frames on standard input.
    Stream {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameFormat::Raw)]
        format: FrameFormat,
        #[arg(long, default_value_t = signkit::stream::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = signkit::stream::DEFAULT_STABILITY as u32, value_parser = clap::value_parser!(u32).range(1..))]
        stability: u32,
    },
    /// Plan the signs for a piece of text.
    Translate {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write the frames of an SKP sequence to standard output.
    DumpFrames {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameFormat::Raw)]
        format: FrameFormat,
    },
    /// Print the layer table of an architecture.
    Summary {
        #[arg(long)]
        arch: ArchId,
        #[arg(long, default_value_t = FRAME_LEN as u32)]
        features: u32,
        #[arg(long)]
        classes: Option<u32>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        width_divisor: u32,
    },
    /// Check a manifest's dataset against the keypoint invariants.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameFormat {
    Raw,
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum AveragingArg {
    Weighted,
    Macro,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if e.is_runtime() || matches!(e, Error::NonFinite(_)) {
            Failure::Runtime(msg)
        } else {
            Failure::Data(msg)
        }
    }
}

fn io_failure(what: &str, e: io::Error) -> Failure {
    Failure::Runtime(format!("{what}: {e}"))
}

type Outcome = Result<(), Failure>;

fn emit(out: &mut impl Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes()).map_err(|e| io_failure("stdout", e))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.with_extension("").into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_sequence(path: &Path, frames: usize, features: usize) -> Result<SignSequence, Failure> {
    let t = read_tensor(path)?;
    if t.dims != [frames, features] {
        return Err(Failure::Data(format!(
            "{}: sequence has dims {:?}, model expects [{frames}, {features}]",
            path.display(),
            t.dims
        )));
    }
    Ok(SignSequence::from_raw(frames, features, t.values)?)
}

/// Accepts either a manifest file or the directory holding `manifest.json`.
fn load_data(path: &Path) -> Result<signkit::keypoint::LabeledDataset, Failure> {
    if path.is_dir() {
        Ok(load_dataset(path.join(signkit::dataset::MANIFEST_FILE))?)
    } else {
        Ok(load_dataset(path)?)
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Outcome {
    match cli.command {
        Command::Synth {
            classes,
            per_class,
            sigma,
            seed,
            feature_dim,
            frames,
            out: dir,
        } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Failure::Usage(format!("--sigma must be a finite value >= 0, got {sigma}")));
            }
            let spec = SynthSpec {
                classes: classes as usize,
                sequences_per_class: per_class as usize,
                noise_sigma: sigma,
                seed,
                feature_dim: feature_dim as usize,
                frames: frames as usize,
            };
            let ds = synth_generate(&spec)?;
            let manifest = write_dataset(&ds, &dir)?;
            emit(
                out,
                &format!(
                    "wrote {} sequences ({} classes, {}x{}) and {}\n",
                    manifest.entries.len(),
                    ds.classes(),
                    spec.frames,
                    spec.feature_dim,
                    dir.join(signkit::dataset::MANIFEST_FILE).display()
                ),
            )
        }
        Command::Train {
            arch,
            data,
            epochs,
            seed,
            batch_size,
            learning_rate,
            test_fraction,
            width_divisor,
            timing,
            out: model_path,
        } => {
            let ds = load_data(&data)?;
            if ds.classes() != arch.default_classes() {
                return Err(Failure::Data(format!(
                    "{arch} expects {} classes, dataset {} has {}",
                    arch.default_classes(),
                    data.display(),
                    ds.classes()
                )));
            }
            let (frames, features) = ds.sequence_shape;
            let config = ArchConfig {
                frames,
                features,
                classes: ds.classes(),
                width_divisor: width_divisor as usize,
            };
            let mut model = build(arch, &config, ds.label_map.clone(), seed)?;
            let parts = split(ds.len(), test_fraction, seed)?;
            let train_config = TrainConfig {
                epochs: epochs as usize,
                batch_size: (batch_size as usize).min(parts.train.len()),
                seed,
                learning_rate,
                record_wall_time: timing,
                ..TrainConfig::default()
            };
            let history = train_with(&mut model, &ds, &parts, &train_config, |r| {
                eprintln!(
                    "epoch {}/{epochs} loss {:.4} accuracy {:.4} val_loss {:.4} val_accuracy {:.4}",
                    r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
                );
            })?;
            model.round_to_f32();
            save_checkpoint(&model, &model_path)?;
            let json = serde_json::to_string_pretty(&history).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_file(&with_suffix(&model_path, ".history.json"), &(json + "\n"))?;
            write_file(&with_suffix(&model_path, ".history.txt"), &render_history(&history))?;
            let (t, n) = model.count_params();
            emit(
                out,
                &format!(
                    "saved {} ({arch}, {} params); {} epochs, best val_accuracy {:.4}\n",
                    model_path.display(),
                    t + n,
                    history.records.len(),
                    history.best_val_accuracy().unwrap_or(0.0)
                ),
            )
        }
        Command::Eval {
            model,
            data,
            split_seed,
            test_fraction,
            averaging,
            format,
            report,
        } => {
            let model = load_checkpoint(&model)?;
            let ds = load_data(&data)?;
            if ds.sequence_shape != model.sequence_shape() || ds.classes() != model.class_count() {
                return Err(Failure::Data(format!(
                    "model expects {} classes of {:?} sequences, dataset has {} classes of {:?}",
                    model.class_count(),
                    model.sequence_shape(),
                    ds.classes(),
                    ds.sequence_shape
                )));
            }
            let parts = split(ds.len(), test_fraction, split_seed)?;
            let averaging = match averaging {
                AveragingArg::Weighted => Averaging::Weighted,
                AveragingArg::Macro => Averaging::Macro,
            };
            let mut doc = ReportDocument::new(evaluate_with(&model, &ds, &parts.test, averaging)?);
            doc.config = Some(serde_json::json!({
                "architecture": model.arch.as_str(),
                "split_seed": split_seed,
                "test_fraction": test_fraction,
                "samples": ds.len(),
            }));
            if let Some(prefix) = report {
                write_file(&with_suffix(&prefix, ".txt"), &render_report(&doc, ReportFormat::Text)?)?;
                write_file(&with_suffix(&prefix, ".json"), &render_report(&doc, ReportFormat::Json)?)?;
            }
            emit(out, &render_report(&doc, format.into())?)
        }
        Command::Predict { model, input, format } => {
            let model = load_checkpoint(&model)?;
            let (frames, features) = model.sequence_shape();
            let seq = load_sequence(&input, frames, features)?;
            let p = model.predict(&seq)?;
            emit(out, &render_prediction(&model.label_map, &p, format.into()))
        }
        Command::Stream {
            model,
            format,
            threshold,
            stability,
        } => {
            let model = load_checkpoint(&model)?;
            let mut window = SlidingWindow::with_policy(&model, threshold, stability as usize)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let stdin = io::stdin().lock();
            let frames: Box<dyn Iterator<Item = signkit::Result<Vec<f32>>>> = match format {
                FrameFormat::Raw => Box::new(RawFrameReader::new(stdin, model.sequence_shape().1)),
                FrameFormat::Lines => Box::new(LineFrameReader::new(BufReader::new(stdin))),
            };
            for frame in frames {
                for event in window.process(&frame?)? {
                    emit(out, &(event.to_json_line() + "\n"))?;
                }
            }
            out.flush().map_err(|e| io_failure("stdout", e))
        }
        Command::Translate { lexicon, text, format } => {
            let lexicon = SignLexicon::load(&lexicon).map_err(|e| Failure::Data(e.to_string()))?;
            let plan = translate(&text, &lexicon)?;
            let rendered = match format {
                Format::Text => plan.render_listing(),
                Format::Json => serde_json::to_string(&plan).map_err(|e| Failure::Runtime(e.to_string()))? + "\n",
            };
            emit(out, &rendered)
        }
        Command::DumpFrames { input, format } => {
            let t = read_tensor(&input)?;
            let [frames, features] = t.dims[..] else {
                return Err(Failure::Data(format!("{}: expected a rank-2 sequence, got {:?}", input.display(), t.dims)));
            };
            let seq = SignSequence::from_raw(frames, features, t.values)?;
            match format {
                FrameFormat::Raw => out
                    .write_all(&encode_raw_frames(seq.iter_frames()))
                    .map_err(|e| io_failure("stdout", e)),
                FrameFormat::Lines => {
                    for frame in seq.iter_frames() {
                        let line = serde_json::to_string(frame).map_err(|e| Failure::Runtime(e.to_string()))?;
                        emit(out, &(line + "\n"))?;
                    }
                    Ok(())
                }
            }
        }
        Command::Summary {
            arch,
            features,
            classes,
            width_divisor,
        } => {
            let classes = classes.map_or(arch.default_classes(), |c| c as usize);
            let labels = if classes == arch.default_classes() && classes == 26 {
                signkit::keypoint::LabelMap::alphabet()
            } else if classes == 5 {
                signkit::keypoint::LabelMap::gestures()
            } else {
                signkit::keypoint::LabelMap::new((0..classes).map(|c| format!("class_{c}")))?
            };
            let config = ArchConfig {
                frames: SEQUENCE_FRAMES,
                features: features as usize,
                classes,
                width_divisor: width_divisor as usize,
            };
            let model = build(arch, &config, labels, 0)?;
            emit(out, &model.render_summary())
        }
        Command::Validate { data } => {
            let ds = load_data(&data)?;
            let violations = validate_dataset(&ds);
            for v in &violations {
                emit(out, &format!("{v}\n"))?;
            }
            if violations.is_empty() {
                emit(out, &format!("{} sequences, {} classes: ok\n", ds.len(), ds.classes()))
            } else {
                Err(Failure::Data(format!("{} violations", violations.len())))
            }
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let first = lines.next().unwrap_or("invalid usage");
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error:")));
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            let (kind, msg) = match &f {
                Failure::Usage(m) => ("usage", m),
                Failure::Data(m) => ("data", m),
                Failure::Runtime(m) => ("runtime", m),
            };
            eprintln!("error[{kind}]: {}", one_line(msg));
            ExitCode::from(f.code())
        }
    }
}
