//! Frame, sequence and label data model.
//!
//! A frame is 1662 scalars collated from a holistic landmark estimator in a
//! fixed segment order: pose (33 × x,y,z,visibility), face (468 × x,y,z),
//! left hand (21 × x,y,z), right hand (21 × x,y,z). Parts the estimator did
//! not track are stored as zeros so every frame keeps the same length.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POSE_LANDMARKS: usize = 33;
pub const POSE_CHANNELS: usize = 4;
pub const FACE_LANDMARKS: usize = 468;
pub const HAND_LANDMARKS: usize = 21;
pub const XYZ: usize = 3;

pub const FRAME_LEN: usize = 1662;
pub const SEQUENCE_FRAMES: usize = 30;

/// Layout tag written into tensor files for the pose/face/left/right order.
pub const LAYOUT_TAG: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub pose: Range<usize>,
    pub face: Range<usize>,
    pub left_hand: Range<usize>,
    pub right_hand: Range<usize>,
}

impl FrameLayout {
    pub fn segments(&self) -> [(Segment, Range<usize>); 4] {
        [
            (Segment::Pose, self.pose.clone()),
            (Segment::Face, self.face.clone()),
            (Segment::LeftHand, self.left_hand.clone()),
            (Segment::RightHand, self.right_hand.clone()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Pose,
    Face,
    LeftHand,
    RightHand,
}

impl Segment {
    pub fn name(self) -> &'static str {
        match self {
            Segment::Pose => "pose",
            Segment::Face => "face",
            Segment::LeftHand => "left_hand",
            Segment::RightHand => "right_hand",
        }
    }

    /// (landmarks, channels) for this segment.
    pub fn shape(self) -> (usize, usize) {
        match self {
            Segment::Pose => (POSE_LANDMARKS, POSE_CHANNELS),
            Segment::Face => (FACE_LANDMARKS, XYZ),
            Segment::LeftHand | Segment::RightHand => (HAND_LANDMARKS, XYZ),
        }
    }
}

pub fn frame_layout() -> FrameLayout {
    let pose_end = POSE_LANDMARKS * POSE_CHANNELS;
    let face_end = pose_end + FACE_LANDMARKS * XYZ;
    let left_end = face_end + HAND_LANDMARKS * XYZ;
    let right_end = left_end + HAND_LANDMARKS * XYZ;
    FrameLayout {
        pose: 0..pose_end,
        face: pose_end..face_end,
        left_hand: face_end..left_end,
        right_hand: left_end..right_end,
    }
}

/// One video frame's collated landmark scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointFrame {
    values: Vec<f32>,
}

impl KeypointFrame {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; FRAME_LEN],
        }
    }

    pub fn from_values(values: Vec<f32>) -> Result<Self> {
        if values.len() != FRAME_LEN {
            return Err(Error::shape("keypoint frame", FRAME_LEN, values.len()));
        }
        if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("keypoint frame offset {offset}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn segment(&self, segment: Segment) -> &[f32] {
        let layout = frame_layout();
        let range = match segment {
            Segment::Pose => layout.pose,
            Segment::Face => layout.face,
            Segment::LeftHand => layout.left_hand,
            Segment::RightHand => layout.right_hand,
        };
        &self.values[range]
    }
}

/// Landmark parts as produced by an estimator. Each part is a list of
/// landmarks, each landmark a list of channels.
#[derive(Clone, Debug, Default)]
pub struct FrameParts<'a> {
    pub pose: Option<&'a [Vec<f32>]>,
    pub face: Option<&'a [Vec<f32>]>,
    pub left_hand: Option<&'a [Vec<f32>]>,
    pub right_hand: Option<&'a [Vec<f32>]>,
}

/// Flattens the present parts row-major into their segments; absent parts
/// stay zero.
pub fn frame_from_parts(parts: &FrameParts<'_>) -> Result<KeypointFrame> {
    let layout = frame_layout();
    let mut values = vec![0.0f32; FRAME_LEN];
    let slots = [
        (Segment::Pose, parts.pose, layout.pose),
        (Segment::Face, parts.face, layout.face),
        (Segment::LeftHand, parts.left_hand, layout.left_hand),
        (Segment::RightHand, parts.right_hand, layout.right_hand),
    ];
    for (segment, part, range) in slots {
        let Some(rows) = part else { continue };
        let (landmarks, channels) = segment.shape();
        if rows.len() != landmarks || rows.iter().any(|r| r.len() != channels) {
            let actual: Vec<usize> = rows.iter().map(Vec::len).collect();
            let width = if actual.iter().all(|&w| w == channels) {
                channels.to_string()
            } else {
                format!("{actual:?}")
            };
            return Err(Error::Shape {
                context: format!("{} part", segment.name()),
                expected: format!("{landmarks}x{channels}"),
                actual: format!("{}x{width}", rows.len()),
            });
        }
        let dst = &mut values[range];
        for (i, v) in rows.iter().flatten().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "{} part, landmark {} channel {}",
                    segment.name(),
                    i / channels,
                    i % channels
                )));
            }
            dst[i] = *v;
        }
    }
    Ok(KeypointFrame { values })
}

/// A run of frames flattened row-major (`frames × features`).
///
/// The canonical shape is 30 × 1662; other shapes are representable so that
/// reduced-dimension experiments and malformed inputs can be handled and
/// reported by [`validate_dataset`].
#[derive(Clone, Debug, PartialEq)]
pub struct SignSequence {
    frames: usize,
    features: usize,
    data: Vec<f32>,
}

impl SignSequence {
    /// Builds a canonical 30-frame sequence.
    pub fn new(frames: Vec<KeypointFrame>) -> Result<Self> {
        if frames.len() != SEQUENCE_FRAMES {
            return Err(Error::shape("sign sequence frames", SEQUENCE_FRAMES, frames.len()));
        }
        let mut data = Vec::with_capacity(SEQUENCE_FRAMES * FRAME_LEN);
        for f in frames {
            data.extend(f.into_values());
        }
        Ok(Self {
            frames: SEQUENCE_FRAMES,
            features: FRAME_LEN,
            data,
        })
    }

    /// Wraps raw row-major data of any shape. Only the length is checked.
    pub fn from_raw(frames: usize, features: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != frames * features {
            return Err(Error::shape(
                "sign sequence data",
                frames * features,
                data.len(),
            ));
        }
        Ok(Self {
            frames,
            features,
            data,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.features)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.features..(t + 1) * self.features]
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.features.max(1))
    }
}

/// Ordered bijection between label names and class indices `0..K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate label name `{name}`"
                )));
            }
        }
        Ok(Self { names, index })
    }

    /// The 26 alphabet classes `a:0 … z:25`.
    pub fn alphabet() -> Self {
        Self::new(('a'..='z').map(String::from)).expect("distinct letters")
    }

    /// The five gesture phrases used for the dynamic-sign models.
    pub fn gestures() -> Self {
        Self::new(["hello", "thanks", "iloveyou", "indian", "how_are_you_doing"])
            .expect("distinct phrases")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl TryFrom<Vec<String>> for LabelMap {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        LabelMap::new(names)
    }
}

impl From<LabelMap> for Vec<String> {
    fn from(map: LabelMap) -> Self {
        map.names
    }
}

impl std::fmt::Display for LabelMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, name) in self.names.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}:{i}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub sequences: Vec<SignSequence>,
    pub labels: Vec<usize>,
    pub label_map: LabelMap,
    /// Expected (frames, features) of every sequence.
    pub sequence_shape: (usize, usize),
}

impl LabeledDataset {
    pub fn new(label_map: LabelMap) -> Self {
        Self::with_shape(label_map, (SEQUENCE_FRAMES, FRAME_LEN))
    }

    pub fn with_shape(label_map: LabelMap, sequence_shape: (usize, usize)) -> Self {
        Self {
            sequences: Vec::new(),
            labels: Vec::new(),
            label_map,
            sequence_shape,
        }
    }

    pub fn push(&mut self, sequence: SignSequence, label: usize) {
        self.sequences.push(sequence);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.label_map.len()
    }

    /// Copies the selected samples into a new dataset, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_map: self.label_map.clone(),
            sequence_shape: self.sequence_shape,
        }
    }
}

pub fn one_hot(label: usize, k: usize) -> Result<Vec<f64>> {
    if label >= k {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    let mut v = vec![0.0; k];
    v[label] = 1.0;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationRule {
    LengthMismatch { sequences: usize, labels: usize },
    TooFewClasses(usize),
    FrameCount { expected: usize, actual: usize },
    FrameLength { expected: usize, actual: usize },
    NonFinite { frame: usize, offset: usize },
    LabelOutOfRange { label: usize, classes: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Offending sequence, when the violation is tied to one.
    pub sequence: Option<usize>,
    pub rule: ViolationRule,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(s) = self.sequence {
            write!(f, "sequence {s}: ")?;
        }
        match &self.rule {
            ViolationRule::LengthMismatch { sequences, labels } => {
                write!(f, "{sequences} sequences but {labels} labels")
            }
            ViolationRule::TooFewClasses(k) => write!(f, "label map has {k} classes (need >= 2)"),
            ViolationRule::FrameCount { expected, actual } => {
                write!(f, "{actual} frames, expected {expected}")
            }
            ViolationRule::FrameLength { expected, actual } => {
                write!(f, "{actual} values per frame, expected {expected}")
            }
            ViolationRule::NonFinite { frame, offset } => {
                write!(f, "non-finite value at frame {frame} offset {offset}")
            }
            ViolationRule::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} outside 0..{classes}")
            }
        }
    }
}

/// Lists every broken invariant; an empty list means the dataset is valid.
pub fn validate_dataset(ds: &LabeledDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if ds.sequences.len() != ds.labels.len() {
        out.push(Violation {
            sequence: None,
            rule: ViolationRule::LengthMismatch {
                sequences: ds.sequences.len(),
                labels: ds.labels.len(),
            },
        });
    }
    if ds.label_map.len() < 2 {
        out.push(Violation {
            sequence: None,
            rule: ViolationRule::TooFewClasses(ds.label_map.len()),
        });
    }
    let (frames, features) = ds.sequence_shape;
    for (i, seq) in ds.sequences.iter().enumerate() {
        if seq.frames() != frames {
            out.push(Violation {
                sequence: Some(i),
                rule: ViolationRule::FrameCount {
                    expected: frames,
                    actual: seq.frames(),
                },
            });
        }
        if seq.features() != features {
            out.push(Violation {
                sequence: Some(i),
                rule: ViolationRule::FrameLength {
                    expected: features,
                    actual: seq.features(),
                },
            });
        }
        for (j, v) in seq.data().iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation {
                    sequence: Some(i),
                    rule: ViolationRule::NonFinite {
                        frame: j / seq.features().max(1),
                        offset: j % seq.features().max(1),
                    },
                });
            }
        }
    }
    for (i, &label) in ds.labels.iter().enumerate() {
        if label >= ds.label_map.len() {
            out.push(Violation {
                sequence: Some(i),
                rule: ViolationRule::LabelOutOfRange {
                    label,
                    classes: ds.label_map.len(),
                },
            });
        }
    }
    out
}
