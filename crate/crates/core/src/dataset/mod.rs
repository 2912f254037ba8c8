//! Persistence, assembly, splitting and synthetic generation of keypoint
//! datasets.

mod manifest;
mod skp;
mod split;
mod synth;

pub use manifest::{assemble, load_dataset, write_dataset, DatasetManifest, ManifestEntry, MANIFEST_FILE, SCHEMA_VERSION};
pub use skp::{decode_tensor, encode_tensor, read_tensor, write_tensor, SkpTensor, DTYPE_F32, SKP_MAGIC, SKP_VERSION};
pub use split::{split, SplitIndices};
pub use synth::{synth_generate, SynthSpec};
