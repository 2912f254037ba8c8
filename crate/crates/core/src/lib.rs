//! Keypoint-sequence sign recognition.
//!
//! Frames of body, face and hand landmarks are grouped into fixed-length
//! sequences, stored in a small binary tensor format, and classified by
//! LSTM or CNN networks built on a compact f64 engine. Around that sit a
//! training loop, weighted evaluation metrics, a sliding-window streaming
//! recognizer and a text-to-sign planner.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod keypoint;
pub mod layers;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod report;
pub mod rng;
pub mod stream;
pub mod tensor;
pub mod train;
pub mod translate;

pub use error::{Error, Result};
