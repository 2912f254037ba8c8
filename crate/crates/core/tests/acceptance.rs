//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p signkit --test acceptance -- --nocapture` to see them.

use std::io::Write as _;
use std::time::{Duration, Instant};

use signkit::dataset::{decode_tensor, encode_tensor, split, synth_generate, SplitIndices, SynthSpec};
use signkit::eval::evaluate;
use signkit::gradcheck::{grad_check_layer, grad_check_loss};
use signkit::keypoint::{one_hot, SignSequence};
use signkit::layers::{Activation, Layer, LayerSpec};
use signkit::loss::{cce, loss, sparse_cce, LossKind};
use signkit::metrics::{confusion_matrix, weighted_prf};
use signkit::model::{
    build, build_cnn_gesture, build_cnn_static, build_lstm_gesture, build_lstm_static, decode_checkpoint,
    encode_checkpoint, load_checkpoint, save_checkpoint, ArchConfig, ArchId, SequentialModel,
};
use signkit::rng::SplitMix64;
use signkit::stream::{EventKind, SlidingWindow};
use signkit::tensor::Tensor;
use signkit::train::{train, TrainConfig};
use signkit::translate::{normalize, translate, ItemKind, SignLexicon};

type Outcome = Result<String, String>;

/// Straight to the process stdout so the lines show without `--nocapture`.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- structure

fn full_size_models() -> Vec<(&'static str, SequentialModel)> {
    vec![
        ("cnn-static", build_cnn_static()),
        ("lstm-static", build_lstm_static()),
        ("lstm-gesture", build_lstm_gesture()),
        ("cnn-gesture", build_cnn_gesture()),
    ]
}

fn param_counts() -> Outcome {
    let expected = [
        ("cnn-static", (1_837_594, 0)),
        ("lstm-static", (1_940_634, 2_048)),
        ("lstm-gesture", (697_605, 0)),
        ("cnn-gesture", (459_365, 0)),
    ];
    let mut detail = Vec::new();
    for ((name, model), (_, want)) in full_size_models().iter().zip(expected) {
        let got = model.count_params();
        ensure(got == want, || format!("{name}: {got:?} != {want:?}"))?;
        detail.push(format!("{name} {}+{}", got.0, got.1));
    }
    Ok(detail.join(", "))
}

type Row = (&'static str, &'static [usize], usize);

const CNN_STATIC: &[Row] = &[
    ("Conv2D", &[28, 1660, 64], 640),
    ("MaxPooling2D", &[14, 830, 64], 0),
    ("Conv2D", &[12, 828, 128], 73856),
    ("MaxPooling2D", &[6, 414, 128], 0),
    ("Conv2D", &[4, 412, 64], 73792),
    ("MaxPooling2D", &[2, 206, 64], 0),
    ("Flatten", &[26368], 0),
    ("Dense", &[64], 1687616),
    ("Dropout", &[64], 0),
    ("Dense", &[26], 1690),
];

const LSTM_STATIC: &[Row] = &[
    ("LSTM", &[30, 128], 916992),
    ("BatchNormalization", &[30, 128], 512),
    ("LSTM", &[30, 256], 394240),
    ("BatchNormalization", &[30, 256], 1024),
    ("LSTM", &[256], 525312),
    ("BatchNormalization", &[256], 1024),
    ("Dense", &[256], 65792),
    ("BatchNormalization", &[256], 1024),
    ("Dense", &[128], 32896),
    ("BatchNormalization", &[128], 512),
    ("Dropout", &[128], 0),
    ("Dense", &[26], 3354),
];

const LSTM_GESTURE: &[Row] = &[
    ("LSTM", &[30, 64], 442112),
    ("LSTM", &[30, 128], 98816),
    ("LSTM", &[128], 131584),
    ("Dense", &[128], 16512),
    ("Dense", &[64], 8256),
    ("Dense", &[5], 325),
];

const CNN_GESTURE: &[Row] = &[
    ("Conv2D", &[28, 1660, 32], 320),
    ("MaxPooling2D", &[14, 830, 32], 0),
    ("Conv2D", &[12, 828, 64], 18496),
    ("MaxPooling2D", &[6, 414, 64], 0),
    ("Conv2D", &[4, 412, 32], 18464),
    ("MaxPooling2D", &[2, 206, 32], 0),
    ("Flatten", &[13184], 0),
    ("Dense", &[32], 421920),
    ("Dense", &[5], 165),
];

fn shape_tables() -> Outcome {
    let tables = [CNN_STATIC, LSTM_STATIC, LSTM_GESTURE, CNN_GESTURE];
    let mut rows = 0;
    for ((name, model), table) in full_size_models().iter().zip(tables) {
        let summary = model.summary();
        ensure(summary.len() == table.len(), || {
            format!("{name}: {} layers, table has {}", summary.len(), table.len())
        })?;
        for (i, (row, &(kind, dims, params))) in summary.iter().zip(table).enumerate() {
            ensure(row.kind == kind && row.output_dims == dims && row.params == params, || {
                format!(
                    "{name} row {i}: {} {:?} {} != {kind} {dims:?} {params}",
                    row.kind, row.output_dims, row.params
                )
            })?;
            rows += 1;
        }
    }
    Ok(format!("{rows} rows match"))
}

// ---------------------------------------------------------------- numerics

fn random_tensor(dims: &[usize], rng: &mut SplitMix64) -> Tensor {
    let n = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.uniform_symmetric(1.0)).collect()).unwrap()
}

fn check_layer(spec: LayerSpec, sample: &[usize], seeds: u64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut layer = ok(Layer::new(spec.clone(), sample, seed))?;
        let mut rng = SplitMix64::new(0xabc0 + seed);
        for p in layer.params.iter_mut().filter(|p| p.trainable) {
            for v in p.value.data_mut() {
                *v += rng.uniform_symmetric(0.5);
            }
        }
        let mut dims = vec![3];
        dims.extend_from_slice(sample);
        let x = random_tensor(&dims, &mut rng);
        worst = worst.max(ok(grad_check_layer(&layer, &x, seed))?.max_rel_error);
    }
    Ok(worst)
}

fn gradient_checks() -> Outcome {
    let seeds = 20;
    let cases: Vec<(&str, LayerSpec, Vec<usize>, f64)> = vec![
        ("conv2d", LayerSpec::conv(3, Activation::Relu), vec![5, 6, 2], 1e-6),
        ("conv2d/tanh", LayerSpec::conv(3, Activation::Tanh), vec![5, 6, 2], 1e-6),
        ("dense/relu", LayerSpec::dense(4, Activation::Relu), vec![5], 1e-6),
        ("dense/sigmoid", LayerSpec::dense(4, Activation::Sigmoid), vec![5], 1e-6),
        ("dense/softmax", LayerSpec::dense(4, Activation::Softmax), vec![5], 1e-6),
        ("lstm/relu", LayerSpec::lstm(3, true, Activation::Relu), vec![3, 4], 1e-5),
        ("lstm/tanh-last", LayerSpec::lstm(3, false, Activation::Tanh), vec![3, 4], 1e-5),
        ("batchnorm", LayerSpec::batch_norm(), vec![4], 1e-5),
        ("batchnorm/seq", LayerSpec::batch_norm(), vec![3, 4], 1e-5),
    ];
    let mut detail = Vec::new();
    for (name, spec, sample, tol) in cases {
        let e = check_layer(spec, &sample, seeds)?;
        ensure(e <= tol, || format!("{name}: {e:.2e} > {tol:.0e}"))?;
        detail.push(format!("{name} {e:.1e}"));
    }
    for kind in [LossKind::SparseCce, LossKind::Cce] {
        let mut worst: f64 = 0.0;
        for seed in 0..seeds {
            let mut rng = SplitMix64::new(seed);
            let p = Tensor::from_vec(&[4, 5], (0..20).map(|_| 0.05 + 0.9 * rng.next_f64()).collect()).unwrap();
            let labels: Vec<usize> = (0..4).map(|_| (rng.next_u64() % 5) as usize).collect();
            worst = worst.max(ok(grad_check_loss(kind, &p, &labels))?.max_rel_error);
        }
        ensure(worst <= 1e-5, || format!("{}: {worst:.2e}", kind.name()))?;
        detail.push(format!("{} {worst:.1e}", kind.name()));
    }
    Ok(format!("{seeds} seeds each; {}", detail.join(", ")))
}

fn loss_fixtures() -> Outcome {
    let uniform = Tensor::filled(&[26, 26], 1.0 / 26.0);
    let labels: Vec<usize> = (0..26).collect();
    let (l, _) = ok(sparse_cce(&uniform, &labels))?;
    ensure((l - 26f64.ln()).abs() <= 1e-4, || format!("uniform loss {l}"))?;

    let mut rng = SplitMix64::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let b = 1 + (rng.next_u64() % 4) as usize;
        let k = 2 + (rng.next_u64() % 9) as usize;
        let p = Tensor::from_vec(&[b, k], (0..b * k).map(|_| rng.next_f64()).collect()).unwrap();
        let y: Vec<usize> = (0..b).map(|_| (rng.next_u64() % k as u64) as usize).collect();
        let mut target = Vec::with_capacity(b * k);
        for &l in &y {
            target.extend(ok(one_hot(l, k))?);
        }
        let (a, ga) = ok(sparse_cce(&p, &y))?;
        let (c, gc) = ok(cce(&p, &Tensor::from_vec(&[b, k], target).unwrap()))?;
        worst = worst.max((a - c).abs());
        for (x, z) in ga.data().iter().zip(gc.data()) {
            worst = worst.max((x - z).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("sparse vs one-hot deviation {worst:e}"))?;
    Ok(format!("uniform-26 {l:.6}, 10^4 cases max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- metrics

struct Oracle {
    confusion: Vec<Vec<u64>>,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn counting_oracle(t: &[usize], p: &[usize], k: usize) -> Oracle {
    let n = t.len() as f64;
    let mut confusion = vec![vec![0u64; k]; k];
    for i in 0..k {
        for j in 0..k {
            confusion[i][j] = t.iter().zip(p).filter(|&(&a, &b)| a == i && b == j).count() as u64;
        }
    }
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    let mut hits = 0usize;
    for c in 0..k {
        let tp = t.iter().zip(p).filter(|&(&a, &b)| a == c && b == c).count();
        let predicted = p.iter().filter(|&&b| b == c).count();
        let support = t.iter().filter(|&&a| a == c).count();
        hits += tp;
        let pc = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let rc = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let fc = if pc + rc == 0.0 { 0.0 } else { 2.0 * pc * rc / (pc + rc) };
        precision += support as f64 * pc;
        recall += support as f64 * rc;
        f1 += support as f64 * fc;
    }
    Oracle {
        confusion,
        accuracy: hits as f64 / n,
        precision: precision / n,
        recall: recall / n,
        f1: f1 / n,
    }
}

fn metrics_oracle() -> Outcome {
    let cm = ok(confusion_matrix(&[0, 0, 1, 2], &[0, 1, 1, 2], 3))?;
    let s = ok(weighted_prf(&cm))?;
    let fixture = (cm.accuracy(), s.precision, s.recall, s.f1);
    ensure(
        (fixture.0 - 0.75).abs() < 1e-15
            && (fixture.1 - 0.875).abs() < 1e-15
            && (fixture.2 - 0.75).abs() < 1e-15
            && (fixture.3 - 0.75).abs() < 1e-15,
        || format!("hand fixture {fixture:?}"),
    )?;

    let mut rng = SplitMix64::new(77);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let k = if trial % 2 == 0 { 26 } else { 2 + (rng.next_u64() % 8) as usize };
        let n = 1 + (rng.next_u64() % 200) as usize;
        let t: Vec<usize> = (0..n).map(|_| (rng.next_u64() % k as u64) as usize).collect();
        let p: Vec<usize> = (0..n).map(|_| (rng.next_u64() % k as u64) as usize).collect();
        let cm = ok(confusion_matrix(&t, &p, k))?;
        let s = ok(weighted_prf(&cm))?;
        let o = counting_oracle(&t, &p, k);
        ensure(cm.counts == o.confusion, || format!("trial {trial}: confusion differs"))?;
        ensure(s.recall == cm.accuracy(), || format!("trial {trial}: recall != accuracy"))?;
        for (a, b) in [
            (cm.accuracy(), o.accuracy),
            (s.precision, o.precision),
            (s.recall, o.recall),
            (s.f1, o.f1),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation from oracle {worst:e}"))?;
    Ok(format!("fixture 0.75/0.875/0.75/0.75; 1000 trials, max deviation {worst:.1e}"))
}

fn split_determinism() -> Outcome {
    let s = ok(split(1560, 0.2, 42))?;
    ensure(s.train.len() == 1248 && s.test.len() == 312, || {
        format!("sizes {}/{}", s.train.len(), s.test.len())
    })?;
    let batches = s.test.len().div_ceil(32);
    ensure(batches == 10, || format!("{batches} test batches"))?;
    let bytes: Vec<u8> = s
        .test
        .iter()
        .chain(&s.train)
        .flat_map(|&i| (i as u32).to_le_bytes())
        .collect();
    let golden = include_bytes!("fixtures/split_1560_0.2_42.bin");
    ensure(bytes == golden, || "indices differ from golden fixture".into())?;
    Ok(format!("1248/312, {batches} batches of 32, {} fixture bytes identical", golden.len()))
}

// ---------------------------------------------------------------- training

fn synthetic_end_to_end() -> Outcome {
    let spec = SynthSpec {
        feature_dim: 66,
        ..SynthSpec::default()
    };
    let ds = ok(synth_generate(&spec))?;
    let s = ok(split(ds.len(), 0.2, 42))?;
    let cfg = ArchConfig {
        frames: 30,
        features: 66,
        classes: 5,
        width_divisor: 4,
    };
    let mut accs = Vec::new();
    for (arch, floor) in [(ArchId::LstmGesture, 0.95), (ArchId::CnnGesture, 0.85)] {
        let mut model = ok(build(arch, &cfg, ds.label_map.clone(), 42))?;
        let history = ok(train(&mut model, &ds, &s, &TrainConfig::default()))?;
        let report = ok(evaluate(&model, &ds, &s.test))?;
        ensure(report.accuracy >= floor, || {
            format!("{arch}: test accuracy {} < {floor}", report.accuracy)
        })?;
        accs.push(format!("{arch} {:.3} ({} epochs)", report.accuracy, history.records.len()));
    }

    let full = SynthSpec {
        sequences_per_class: 4,
        ..SynthSpec::default()
    };
    let ds = ok(synth_generate(&full))?;
    let s = ok(split(ds.len(), 0.2, 42))?;
    let mut model = build_lstm_gesture();
    let smoke = TrainConfig {
        epochs: 1,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let h = ok(train(&mut model, &ds, &s, &smoke))?;
    ensure(h.records.len() == 1 && h.records[0].train_loss.is_finite(), || "smoke epoch".into())?;
    Ok(format!("{}; full 30x1662 smoke epoch ok", accs.join(", ")))
}

fn memorization() -> Outcome {
    let spec = SynthSpec {
        sequences_per_class: 2,
        feature_dim: 66,
        ..SynthSpec::default()
    };
    let ds = ok(synth_generate(&spec))?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let s = SplitIndices {
        train: all.clone(),
        test: all.clone(),
        seed: 0,
        test_fraction: 0.0,
    };
    let cfg = ArchConfig {
        frames: 30,
        features: 66,
        classes: 5,
        width_divisor: 4,
    };
    let mut model = ok(build(ArchId::LstmGesture, &cfg, ds.label_map.clone(), 42))?;
    let tc = TrainConfig {
        epochs: 150,
        batch_size: 10,
        plateau: None,
        early_stopping: None,
        ..TrainConfig::default()
    };
    let h = ok(train(&mut model, &ds, &s, &tc))?;
    let first = h.records.iter().find(|r| r.val_accuracy == 1.0).map(|r| r.epoch);
    let acc = ok(evaluate(&model, &ds, &all))?.accuracy;
    ensure(acc == 1.0, || format!("train accuracy {acc} after 150 epochs"))?;
    Ok(format!("100% train accuracy, first reached at epoch {}", first.unwrap_or(0)))
}

// ---------------------------------------------------------------- formats

fn round_trips() -> Outcome {
    let spec = SynthSpec {
        sequences_per_class: 3,
        feature_dim: 66,
        ..SynthSpec::default()
    };
    let ds = ok(synth_generate(&spec))?;
    let s = ok(split(ds.len(), 0.2, 1))?;
    let cfg = ArchConfig {
        frames: 30,
        features: 66,
        classes: 5,
        width_divisor: 4,
    };
    let mut model = ok(build(ArchId::LstmGesture, &cfg, ds.label_map.clone(), 9))?;
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 4,
        ..TrainConfig::default()
    };
    ok(train(&mut model, &ds, &s, &tc))?;
    model.round_to_f32();

    let dir = ok(tempfile::tempdir())?;
    let path = dir.path().join("model.slm");
    ok(save_checkpoint(&model, &path))?;
    let loaded = ok(load_checkpoint(&path))?;
    let mut rng = SplitMix64::new(31);
    for i in 0..10 {
        let data: Vec<f32> = (0..30 * 66).map(|_| rng.uniform_symmetric(1.0) as f32).collect();
        let seq = ok(SignSequence::from_raw(30, 66, data))?;
        let a = ok(model.predict(&seq))?;
        let b = ok(loaded.predict(&seq))?;
        ensure(
            a.label == b.label
                && a.probabilities.iter().zip(&b.probabilities).all(|(x, y)| x.to_bits() == y.to_bits()),
            || format!("prediction {i} differs after reload"),
        )?;
    }
    let bytes = ok(encode_checkpoint(&model))?;
    ensure(ok(encode_checkpoint(&ok(decode_checkpoint(&bytes))?))? == bytes, || {
        "checkpoint re-encode differs".into()
    })?;
    for pos in 0..8 {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x5a;
        ensure(decode_checkpoint(&bad).is_err(), || format!("checkpoint preamble byte {pos} corruption undetected"))?;
    }

    let mut skp_cases = 0;
    for trial in 0..50u64 {
        let mut r = SplitMix64::new(trial);
        let dims = [1 + (r.next_u64() % 30) as usize, 1 + (r.next_u64() % 70) as usize];
        let values: Vec<f32> = (0..dims[0] * dims[1])
            .map(|_| match r.next_u64() % 8 {
                0 => -0.0,
                1 => f32::MIN_POSITIVE / 3.0,
                2 => f32::MAX,
                _ => (r.uniform_symmetric(1e3)) as f32,
            })
            .collect();
        let enc = ok(encode_tensor(&dims, &values))?;
        let dec = ok(decode_tensor(&enc))?;
        ensure(
            dec.dims == dims && dec.values.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()),
            || format!("SKP trial {trial} not bit-exact"),
        )?;
        let header = 11 + 4 * dims.len();
        for pos in 0..header {
            for flip in 1..=255u8 {
                let mut bad = enc.clone();
                bad[pos] ^= flip;
                skp_cases += 1;
                ensure(decode_tensor(&bad).is_err(), || {
                    format!("SKP header byte {pos} ^ {flip:#04x} undetected")
                })?;
            }
        }
    }
    Ok(format!(
        "10 reloaded predictions bit-exact; 50 SKP tensors bit-exact; {skp_cases} header corruptions detected"
    ))
}

fn stream_equivalence() -> Outcome {
    let spec = SynthSpec {
        sequences_per_class: 2,
        feature_dim: 66,
        ..SynthSpec::default()
    };
    let ds = ok(synth_generate(&spec))?;
    let cfg = ArchConfig {
        frames: 30,
        features: 66,
        classes: 5,
        width_divisor: 4,
    };
    let model = ok(build(ArchId::LstmGesture, &cfg, ds.label_map.clone(), 3))?;
    for (i, seq) in ds.sequences.iter().enumerate() {
        let mut window = SlidingWindow::new(&model);
        let mut last = None;
        for frame in seq.iter_frames() {
            last = ok(window.push_frame(frame))?;
        }
        let streamed = last.ok_or("no prediction after 30 frames")?;
        let batch = ok(model.predict(seq))?;
        ensure(
            streamed.label_index == batch.label
                && streamed.confidence.to_bits() == batch.probabilities[batch.label].to_bits(),
            || format!("sequence {i}: stream {streamed:?} vs batch {batch:?}"),
        )?;
    }

    let k = 5;
    let mut window = ok(SlidingWindow::with_policy(&model, 0.0, k))?;
    let mut first_emission = None;
    for seq in ds.sequences.iter().take(4) {
        for frame in seq.iter_frames() {
            for event in ok(window.process(frame))? {
                if event.kind == EventKind::Emission && first_emission.is_none() {
                    first_emission = Some(event.frame_index);
                }
            }
        }
    }
    let first = first_emission.ok_or("threshold 0 never emitted")?;
    let earliest = (30 + (k - 1) - 1) as u64;
    ensure(first >= earliest, || format!("emission at frame index {first} < {earliest}"))?;
    Ok(format!(
        "{} sequences identical; earliest emission at 0-based frame {first} (bound {earliest})",
        ds.len()
    ))
}

fn translator_conformance() -> Outcome {
    let lex = SignLexicon::fingerspelling("isl")
        .with_word("hello", "words/hello.mp4")
        .with_word("thanks", "words/thanks.mp4")
        .with_word("i", "words/i.mp4");
    let plan = ok(translate("hello", &lex))?;
    ensure(plan.items.len() == 1 && plan.items[0].kind == ItemKind::Word, || "lexicon hit".into())?;
    let plan = ok(translate("zzz", &lex))?;
    ensure(
        plan.items.len() == 3 && plan.items.iter().all(|i| i.kind == ItemKind::Letter && i.token == "z"),
        || "lexicon miss".into(),
    )?;

    let alphabet: Vec<char> = "abcxyzHELLOhello THANKS i  \t\n,.'!?-0123456789éßİ"
        .chars()
        .collect();
    let words = ["hello", "thanks", "i", "Hello!", "thanks,", "zebra", "it's"];
    let mut rng = SplitMix64::new(5);
    for trial in 0..1000 {
        let mut text = String::new();
        for _ in 0..(rng.next_u64() % 40) {
            if rng.next_u64().is_multiple_of(4) {
                text.push_str(words[(rng.next_u64() % words.len() as u64) as usize]);
            } else {
                text.push(alphabet[(rng.next_u64() % alphabet.len() as u64) as usize]);
            }
        }
        let plan = ok(translate(&text, &lex))?;
        let norm = normalize(&text);
        ensure(plan.tokens() == norm.tokens, || format!("trial {trial}: coverage for {text:?}"))?;
        for item in &plan.items {
            let resolves = match item.kind {
                ItemKind::Word => lex.words.get(&item.token) == Some(&item.asset_id),
                ItemKind::Letter => {
                    let c = item.token.chars().next().unwrap();
                    lex.letters.get(&c) == Some(&item.asset_id)
                        && !lex.words.contains_key(&norm.tokens[item.position])
                }
            };
            ensure(resolves, || format!("trial {trial}: item {item:?} does not resolve"))?;
        }
        ensure(ok(translate(&text, &lex))? == plan, || format!("trial {trial}: nondeterministic"))?;
    }
    Ok("hit -> word, miss -> letters; coverage over 1000 random strings".into())
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("parameter counts", Duration::from_secs(1), param_counts),
        ("shape tables", Duration::from_secs(1), shape_tables),
        ("gradient checks", Duration::from_secs(60), gradient_checks),
        ("loss fixtures", Duration::from_secs(10), loss_fixtures),
        ("metrics oracle", Duration::from_secs(10), metrics_oracle),
        ("split determinism", Duration::from_secs(1), split_determinism),
        ("synthetic end-to-end", Duration::from_secs(600), synthetic_end_to_end),
        ("memorization", Duration::from_secs(120), memorization),
        ("checkpoint and SKP round-trip", Duration::from_secs(5), round_trips),
        ("stream/batch equivalence", Duration::from_secs(5), stream_equivalence),
        ("translator conformance", Duration::from_secs(5), translator_conformance),
    ];
    let mut failed = Vec::new();
    for (name, budget, run) in criteria {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => report(format!("PASS  {name:<30} [{elapsed:>9.2?}] {detail}")),
            Err(why) => {
                report(format!("FAIL  {name:<30} [{elapsed:>9.2?}] {why}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn fresh_static_models_start_near_chance() {
    let spec = SynthSpec {
        classes: 26,
        sequences_per_class: 3,
        feature_dim: 66,
        ..SynthSpec::default()
    };
    let ds = synth_generate(&spec).unwrap();
    let s = split(ds.len(), 0.2, 42).unwrap();
    for arch in [ArchId::CnnStatic, ArchId::LstmStatic, ArchId::LstmStaticProse] {
        let cfg = ArchConfig {
            frames: 30,
            features: 66,
            classes: 26,
            width_divisor: 8,
        };
        let mut model = build(arch, &cfg, ds.label_map.clone(), 42).unwrap();
        let tc = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let h = train(&mut model, &ds, &s, &tc).unwrap();
        let ratio = h.records[0].train_loss / 26f64.ln();
        assert!((0.8..=1.3).contains(&ratio), "{arch}: first-epoch loss ratio {ratio}");
    }
}

#[test]
fn uniform_prediction_loss_via_dispatch() {
    let p = Tensor::filled(&[2, 26], 0.5);
    let (l, _) = loss(LossKind::Cce, &p, &[0, 1]).unwrap();
    assert!((l - 26f64.ln()).abs() < 1e-12);
}
