use wasm_bindgen::prelude::*;

use signkit::dataset::{synth_generate, SynthSpec};
use signkit::keypoint::{LabelMap, FRAME_LEN, SEQUENCE_FRAMES};
use signkit::model::{build, ArchConfig, ArchId};
use signkit::translate::{translate, SignLexicon};

/// Words the demo lexicon signs whole; everything else is fingerspelled.
pub const DEMO_WORDS: [&str; 5] = ["hello", "thank", "you", "yes", "no"];

pub fn summary_text(arch: &str, width_divisor: usize) -> Result<String, String> {
    let arch: ArchId = arch.parse().map_err(|e: signkit::Error| e.to_string())?;
    let classes = arch.default_classes();
    let labels = if classes == 26 { LabelMap::alphabet() } else { LabelMap::gestures() };
    let config = ArchConfig {
        frames: SEQUENCE_FRAMES,
        features: FRAME_LEN,
        classes,
        width_divisor: width_divisor.max(1),
    };
    let model = build(arch, &config, labels, 0).map_err(|e| e.to_string())?;
    Ok(model.render_summary())
}

/// First sequence of every class, reduced to the trajectory of one feature.
pub fn synth_series(classes: usize, sigma: f64, seed: u64, feature: usize) -> Result<String, String> {
    let spec = SynthSpec {
        classes,
        sequences_per_class: 1,
        noise_sigma: sigma,
        seed,
        feature_dim: feature + 1,
        frames: SEQUENCE_FRAMES,
    };
    let ds = synth_generate(&spec).map_err(|e| e.to_string())?;
    let series: Vec<serde_json::Value> = ds
        .sequences
        .iter()
        .zip(&ds.labels)
        .map(|(seq, &label)| {
            let values: Vec<f32> = seq.iter_frames().map(|f| f[feature]).collect();
            serde_json::json!({ "label": ds.label_map.name(label), "values": values })
        })
        .collect();
    Ok(serde_json::Value::Array(series).to_string())
}

pub fn demo_lexicon() -> SignLexicon {
    DEMO_WORDS
        .iter()
        .fold(SignLexicon::fingerspelling("isl"), |lex, w| lex.with_word(w, &format!("words/{w}.mp4")))
}

pub fn plan_json(text: &str) -> Result<String, String> {
    let plan = translate(text, &demo_lexicon()).map_err(|e| e.to_string())?;
    serde_json::to_string(&plan).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn model_summary(arch: &str, width_divisor: usize) -> Result<String, JsError> {
    summary_text(arch, width_divisor).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synth_preview(classes: usize, sigma: f64, seed: u64, feature: usize) -> Result<String, JsError> {
    synth_series(classes, sigma, seed, feature).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sign_plan(text: &str) -> Result<String, JsError> {
    plan_json(text).map_err(|e| JsError::new(&e))
}
