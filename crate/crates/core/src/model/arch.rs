//! Builders for the four recognizer networks (plus the prose variant of the
//! static LSTM).
//!
//! Every builder takes an [`ArchConfig`] so the same topology can be shrunk
//! for reduced-dimension experiments; [`ArchConfig::full_size`] reproduces the
//! full-size networks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SequentialModel;
use crate::error::{Error, Result};
use crate::keypoint::{LabelMap, FRAME_LEN, SEQUENCE_FRAMES};
use crate::layers::{Activation, LayerSpec, DEFAULT_L2};
use crate::loss::LossKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchId {
    #[serde(rename = "cnn-static")]
    CnnStatic,
    #[serde(rename = "lstm-static")]
    LstmStatic,
    #[serde(rename = "lstm-gesture")]
    LstmGesture,
    #[serde(rename = "cnn-gesture")]
    CnnGesture,
    #[serde(rename = "lstm-static-prose")]
    LstmStaticProse,
}

impl ArchId {
    pub const ALL: [ArchId; 5] = [
        ArchId::CnnStatic,
        ArchId::LstmStatic,
        ArchId::LstmGesture,
        ArchId::CnnGesture,
        ArchId::LstmStaticProse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchId::CnnStatic => "cnn-static",
            ArchId::LstmStatic => "lstm-static",
            ArchId::LstmGesture => "lstm-gesture",
            ArchId::CnnGesture => "cnn-gesture",
            ArchId::LstmStaticProse => "lstm-static-prose",
        }
    }

    /// Number of classes the architecture's head is built for.
    pub fn default_classes(self) -> usize {
        match self {
            ArchId::CnnStatic | ArchId::LstmStatic | ArchId::LstmStaticProse => 26,
            ArchId::LstmGesture | ArchId::CnnGesture => 5,
        }
    }

    pub fn is_convolutional(self) -> bool {
        matches!(self, ArchId::CnnStatic | ArchId::CnnGesture)
    }

    /// Short family name used in comparison tables ("LSTM" / "CNN").
    pub fn family(self) -> &'static str {
        if self.is_convolutional() {
            "CNN"
        } else {
            "LSTM"
        }
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ArchId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownArchitecture {
                id: s.to_string(),
                known: ArchId::ALL.map(ArchId::as_str).join(", "),
            })
    }
}

/// Input geometry and width scaling for a builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub frames: usize,
    pub features: usize,
    pub classes: usize,
    /// Every hidden width (filters, units) is divided by this, min 1.
    pub width_divisor: usize,
}

impl ArchConfig {
    pub fn full_size(arch: ArchId) -> Self {
        Self {
            frames: SEQUENCE_FRAMES,
            features: FRAME_LEN,
            classes: arch.default_classes(),
            width_divisor: 1,
        }
    }

    fn width(&self, w: usize) -> usize {
        (w / self.width_divisor.max(1)).max(1)
    }
}

pub fn build(arch: ArchId, config: &ArchConfig, label_map: LabelMap, seed: u64) -> Result<SequentialModel> {
    if label_map.len() != config.classes {
        return Err(Error::shape("label map classes", config.classes, label_map.len()));
    }
    if config.classes < 2 || config.frames == 0 || config.features == 0 {
        return Err(Error::InvalidArgument(format!("invalid architecture config {config:?}")));
    }
    let w = |n| config.width(n);
    let k = config.classes;
    let relu = Activation::Relu;
    let (input, specs, loss) = match arch {
        ArchId::CnnStatic => (
            vec![config.frames, config.features, 1],
            vec![
                LayerSpec::conv(w(64), relu),
                LayerSpec::max_pool(),
                LayerSpec::conv(w(128), relu),
                LayerSpec::max_pool(),
                LayerSpec::conv(w(64), relu),
                LayerSpec::max_pool(),
                LayerSpec::Flatten,
                LayerSpec::dense(w(64), relu),
                LayerSpec::Dropout { rate: 0.2 },
                LayerSpec::dense(k, Activation::Sigmoid),
            ],
            LossKind::SparseCce,
        ),
        ArchId::LstmStatic => (
            vec![config.frames, config.features],
            vec![
                LayerSpec::lstm(w(128), true, relu),
                LayerSpec::batch_norm(),
                LayerSpec::lstm(w(256), true, relu).with_l2(DEFAULT_L2),
                LayerSpec::batch_norm(),
                LayerSpec::lstm(w(256), false, relu),
                LayerSpec::batch_norm(),
                LayerSpec::dense(w(256), relu).with_l2(DEFAULT_L2),
                LayerSpec::batch_norm(),
                LayerSpec::dense(w(128), relu).with_l2(DEFAULT_L2),
                LayerSpec::batch_norm(),
                LayerSpec::Dropout { rate: 0.2 },
                LayerSpec::dense(k, Activation::Sigmoid),
            ],
            LossKind::Cce,
        ),
        ArchId::LstmStaticProse => (
            vec![config.frames, config.features],
            vec![
                LayerSpec::lstm(w(64), true, relu),
                LayerSpec::batch_norm(),
                LayerSpec::Dropout { rate: 0.2 },
                LayerSpec::lstm(w(128), true, relu).with_l2(DEFAULT_L2),
                LayerSpec::batch_norm(),
                LayerSpec::Dropout { rate: 0.2 },
                LayerSpec::lstm(w(64), false, relu),
                LayerSpec::batch_norm(),
                LayerSpec::Dropout { rate: 0.2 },
                LayerSpec::dense(w(64), relu).with_l2(DEFAULT_L2),
                LayerSpec::dense(w(128), relu).with_l2(DEFAULT_L2),
                LayerSpec::dense(k, Activation::Sigmoid),
            ],
            LossKind::Cce,
        ),
        ArchId::LstmGesture => (
            vec![config.frames, config.features],
            vec![
                LayerSpec::lstm(w(64), true, relu),
                LayerSpec::lstm(w(128), true, relu),
                LayerSpec::lstm(w(128), false, relu),
                LayerSpec::dense(w(128), relu),
                LayerSpec::dense(w(64), relu),
                LayerSpec::dense(k, Activation::Softmax),
            ],
            LossKind::Cce,
        ),
        ArchId::CnnGesture => (
            vec![config.frames, config.features, 1],
            vec![
                LayerSpec::conv(w(32), relu),
                LayerSpec::max_pool(),
                LayerSpec::conv(w(64), relu),
                LayerSpec::max_pool(),
                LayerSpec::conv(w(32), relu),
                LayerSpec::max_pool(),
                LayerSpec::Flatten,
                LayerSpec::dense(w(32), relu),
                LayerSpec::dense(k, Activation::Softmax),
            ],
            LossKind::SparseCce,
        ),
    };
    SequentialModel::from_specs(arch, config.clone(), &input, specs, label_map, loss, seed)
}

fn default_labels(arch: ArchId) -> LabelMap {
    if arch.default_classes() == 26 {
        LabelMap::alphabet()
    } else {
        LabelMap::gestures()
    }
}

fn build_full_size(arch: ArchId) -> SequentialModel {
    build(arch, &ArchConfig::full_size(arch), default_labels(arch), 0).expect("full-size architecture is valid")
}

pub fn build_cnn_static() -> SequentialModel {
    build_full_size(ArchId::CnnStatic)
}

pub fn build_lstm_static() -> SequentialModel {
    build_full_size(ArchId::LstmStatic)
}

pub fn build_lstm_gesture() -> SequentialModel {
    build_full_size(ArchId::LstmGesture)
}

pub fn build_cnn_gesture() -> SequentialModel {
    build_full_size(ArchId::CnnGesture)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_id_parse() {
        for a in ArchId::ALL {
            assert_eq!(a.as_str().parse::<ArchId>().unwrap(), a);
        }
        let err = "resnet".parse::<ArchId>().unwrap_err().to_string();
        assert!(err.contains("cnn-static") && err.contains("lstm-static-prose"), "{err}");
    }

    #[test]
    fn label_count_must_match() {
        let cfg = ArchConfig::full_size(ArchId::LstmGesture);
        assert!(build(ArchId::LstmGesture, &cfg, LabelMap::alphabet(), 0).is_err());
    }

    #[test]
    fn prose_variant_shapes() {
        let m = build(
            ArchId::LstmStaticProse,
            &ArchConfig::full_size(ArchId::LstmStaticProse),
            LabelMap::alphabet(),
            0,
        )
        .unwrap();
        let rows = m.summary();
        assert_eq!(rows[0].output_dims, vec![30, 64]);
        assert_eq!(rows[6].output_dims, vec![64]);
        assert_eq!(rows.last().unwrap().output_dims, vec![26]);
    }

    #[test]
    fn shrunk_gesture_models_build() {
        let cfg = ArchConfig {
            frames: 30,
            features: 66,
            classes: 5,
            width_divisor: 4,
        };
        let labels = LabelMap::gestures();
        let lstm = build(ArchId::LstmGesture, &cfg, labels.clone(), 1).unwrap();
        assert_eq!(lstm.summary()[0].output_dims, vec![30, 16]);
        let cnn = build(ArchId::CnnGesture, &cfg, labels, 1).unwrap();
        // 30x66 -> 28x64 -> 14x32 -> 12x30 -> 6x15 -> 4x13 -> 2x6, 8 filters
        assert_eq!(cnn.summary()[6].output_dims, vec![2 * 6 * 8]);
    }
}
