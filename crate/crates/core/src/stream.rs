//! Sliding-window recognition over a frame stream.
//!
//! Frames arrive either as raw little-endian f32 records with no framing
//! (EOF terminates) or as one JSON array of numbers per line.

use std::collections::VecDeque;
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoint::SignSequence;
use crate::model::SequentialModel;

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_STABILITY: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Prediction,
    Emission,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub kind: EventKind,
    pub label: String,
    pub label_index: usize,
    pub confidence: f64,
    /// 0-based index of the frame that completed the window.
    pub frame_index: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stability: Option<usize>,
}

impl StreamEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

#[derive(Clone, Debug)]
pub struct SlidingWindow<'m> {
    model: &'m SequentialModel,
    buffer: VecDeque<Vec<f32>>,
    pub threshold: f64,
    pub stability: usize,
    frames_seen: u64,
    streak: Option<(usize, usize)>,
    last_emitted: Option<usize>,
}

impl<'m> SlidingWindow<'m> {
    pub fn new(model: &'m SequentialModel) -> Self {
        Self::with_policy(model, DEFAULT_THRESHOLD, DEFAULT_STABILITY).expect("default policy")
    }

    pub fn with_policy(model: &'m SequentialModel, threshold: f64, stability: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!("threshold {threshold} outside [0, 1]")));
        }
        if stability == 0 {
            return Err(Error::InvalidArgument("stability must be at least 1".into()));
        }
        Ok(Self {
            model,
            buffer: VecDeque::with_capacity(model.sequence_shape().0),
            threshold,
            stability,
            frames_seen: 0,
            streak: None,
            last_emitted: None,
        })
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.model.sequence_shape().0
    }

    pub fn last_emitted(&self) -> Option<&str> {
        self.last_emitted.and_then(|i| self.model.label_map.name(i))
    }

    /// Appends a frame, evicting the oldest when full, and predicts once the
    /// window holds a complete sequence. A malformed frame leaves the window
    /// untouched.
    pub fn push_frame(&mut self, frame: &[f32]) -> Result<Option<StreamEvent>> {
        let (frames, features) = self.model.sequence_shape();
        if frame.len() != features {
            return Err(Error::shape("stream frame", features, frame.len()));
        }
        if let Some(i) = frame.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("stream frame {} value {i}", self.frames_seen)));
        }
        if self.buffer.len() == frames {
            self.buffer.pop_front();
        }
        self.buffer.push_back(frame.to_vec());
        let index = self.frames_seen;
        self.frames_seen += 1;
        if self.buffer.len() < frames {
            return Ok(None);
        }
        let data: Vec<f32> = self.buffer.iter().flatten().copied().collect();
        let seq = SignSequence::from_raw(frames, features, data)?;
        let p = self.model.predict(&seq)?;
        Ok(Some(StreamEvent {
            kind: EventKind::Prediction,
            label: self.model.label_map.name(p.label).unwrap_or_default().to_string(),
            label_index: p.label,
            confidence: p.probabilities[p.label],
            frame_index: index,
            threshold: None,
            stability: None,
        }))
    }

    /// Debounce: emits once a label has held confidence ≥ threshold for
    /// `stability` consecutive predictions and differs from the last emission.
    pub fn emit_policy(&mut self, prediction: &StreamEvent) -> Option<StreamEvent> {
        if prediction.confidence >= self.threshold {
            self.streak = match self.streak {
                Some((label, n)) if label == prediction.label_index => Some((label, n + 1)),
                _ => Some((prediction.label_index, 1)),
            };
        } else {
            self.streak = None;
        }
        match self.streak {
            Some((label, n)) if n >= self.stability && self.last_emitted != Some(label) => {
                self.last_emitted = Some(label);
                Some(StreamEvent {
                    kind: EventKind::Emission,
                    threshold: Some(self.threshold),
                    stability: Some(self.stability),
                    ..prediction.clone()
                })
            }
            _ => None,
        }
    }

    /// [`push_frame`](Self::push_frame) followed by the emit policy.
    pub fn process(&mut self, frame: &[f32]) -> Result<Vec<StreamEvent>> {
        let mut events = Vec::new();
        if let Some(p) = self.push_frame(frame)? {
            let emission = self.emit_policy(&p);
            events.push(p);
            events.extend(emission);
        }
        Ok(events)
    }
}

/// Reads raw frames of `features` f32 LE values.
pub struct RawFrameReader<R> {
    inner: R,
    features: usize,
    offset: u64,
    done: bool,
}

impl<R: Read> RawFrameReader<R> {
    pub fn new(inner: R, features: usize) -> Self {
        Self {
            inner,
            features,
            offset: 0,
            done: false,
        }
    }
}

impl<R: Read> Iterator for RawFrameReader<R> {
    type Item = Result<Vec<f32>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut buf = vec![0u8; 4 * self.features];
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io("<stream>", e)));
                }
            }
        }
        if filled == 0 {
            self.done = true;
            return None;
        }
        if filled < buf.len() {
            self.done = true;
            return Some(Err(Error::Decode {
                field: "frame".into(),
                detail: format!(
                    "short read at byte offset {}: frame needs {} bytes, got {filled}",
                    self.offset,
                    buf.len()
                ),
            }));
        }
        self.offset += filled as u64;
        Some(Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()))
    }
}

/// Reads one JSON array of numbers per line; blank lines are skipped.
pub struct LineFrameReader<R> {
    inner: R,
    line_no: usize,
    done: bool,
}

impl<R: BufRead> LineFrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line_no: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for LineFrameReader<R> {
    type Item = Result<Vec<f32>>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let mut line = String::new();
            match self.inner.read_line(&mut line) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(serde_json::from_str::<Vec<f32>>(&line).map_err(|e| {
                        self.done = true;
                        Error::Decode {
                            field: format!("line {}", self.line_no),
                            detail: e.to_string(),
                        }
                    }));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Decode {
                        field: format!("line {}", self.line_no + 1),
                        detail: e.to_string(),
                    }));
                }
            }
        }
        None
    }
}

/// Encodes frames in the raw wire format.
pub fn encode_raw_frames<'a>(frames: impl IntoIterator<Item = &'a [f32]>) -> Vec<u8> {
    frames
        .into_iter()
        .flat_map(|f| f.iter().flat_map(|v| v.to_le_bytes()))
        .collect()
}
