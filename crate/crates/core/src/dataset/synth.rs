use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoint::{LabelMap, LabeledDataset, SignSequence, FRAME_LEN, SEQUENCE_FRAMES};
use crate::rng::SplitMix64;

/// Parameters of the synthetic sinusoid dataset.
///
/// For class `c`, frame `t` and feature `i` the value is
/// `A_c * sin(w_c * t + phi_i) + noise` with `w_c = 0.2 + 0.1c`,
/// `A_c = 0.5 + 0.1c`, `phi_i = 2 pi i / feature_dim` and Gaussian noise of
/// standard deviation `noise_sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub sequences_per_class: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub feature_dim: usize,
    pub frames: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            sequences_per_class: 60,
            noise_sigma: 0.05,
            seed: 7,
            feature_dim: FRAME_LEN,
            frames: SEQUENCE_FRAMES,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "synthetic data needs at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.sequences_per_class < 1 {
            return Err(Error::InvalidArgument("sequences_per_class must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma {} must be finite and >= 0",
                self.noise_sigma
            )));
        }
        if self.feature_dim == 0 || self.frames == 0 {
            return Err(Error::InvalidArgument("feature_dim and frames must be positive".into()));
        }
        Ok(())
    }

    pub fn frequency(class: usize) -> f64 {
        0.2 + 0.1 * class as f64
    }

    pub fn amplitude(class: usize) -> f64 {
        0.5 + 0.1 * class as f64
    }

    /// Noise-free value for (class, frame, feature).
    pub fn clean_value(&self, class: usize, t: usize, i: usize) -> f64 {
        let phase = std::f64::consts::TAU * i as f64 / self.feature_dim as f64;
        Self::amplitude(class) * (Self::frequency(class) * t as f64 + phase).sin()
    }

    pub fn label_map(&self) -> LabelMap {
        LabelMap::new((0..self.classes).map(|c| format!("class_{c}"))).expect("distinct names")
    }
}

/// Generates `classes * sequences_per_class` sequences, class-major. Noise is
/// drawn in (class, sequence, frame, feature) order from one SplitMix64 stream.
pub fn synth_generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut ds = LabeledDataset::with_shape(spec.label_map(), (spec.frames, spec.feature_dim));
    for class in 0..spec.classes {
        for _ in 0..spec.sequences_per_class {
            let mut data = Vec::with_capacity(spec.frames * spec.feature_dim);
            for t in 0..spec.frames {
                for i in 0..spec.feature_dim {
                    let noise = spec.noise_sigma * rng.next_normal();
                    data.push((spec.clean_value(class, t, i) + noise) as f32);
                }
            }
            ds.push(SignSequence::from_raw(spec.frames, spec.feature_dim, data)?, class);
        }
    }
    Ok(ds)
}
