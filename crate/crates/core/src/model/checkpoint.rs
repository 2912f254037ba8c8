//! "SLM1" checkpoints.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SLM1"
//! 4       4     header length H, u32 LE
//! 8       H     header, UTF-8 JSON (architecture, layer specs, label map,
//!               precision, seed, per-tensor offsets)
//! 8 + H   ...   weight blob: f32 LE tensors in declaration order
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchConfig, ArchId, SequentialModel};
use crate::error::{Error, Result};
use crate::keypoint::LabelMap;
use crate::layers::LayerSpec;
use crate::loss::LossKind;

pub const SLM_MAGIC: &[u8; 4] = b"SLM1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub layer: usize,
    pub name: String,
    pub dims: Vec<usize>,
    pub trainable: bool,
    /// Byte offset within the weight blob.
    pub offset: usize,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub architecture: String,
    pub config: ArchConfig,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub label_map: LabelMap,
    pub loss: LossKind,
    pub engine_precision: String,
    pub storage_precision: String,
    pub training_seed: u64,
    pub tensors: Vec<TensorEntry>,
    pub blob_bytes: usize,
}

fn decode_err(field: &str, detail: impl Into<String>) -> Error {
    Error::Decode {
        field: field.into(),
        detail: detail.into(),
    }
}

/// Serializes the model; parameters are stored as f32 (round to nearest
/// even).
pub fn encode_checkpoint(model: &SequentialModel) -> Result<Vec<u8>> {
    let mut tensors = Vec::new();
    let mut blob = Vec::new();
    for (li, layer) in model.layers.iter().enumerate() {
        for p in &layer.params {
            let offset = blob.len();
            for &v in p.value.data() {
                blob.extend_from_slice(&(v as f32).to_le_bytes());
            }
            tensors.push(TensorEntry {
                layer: li,
                name: p.name.to_string(),
                dims: p.value.dims().to_vec(),
                trainable: p.trainable,
                offset,
                bytes: blob.len() - offset,
            });
        }
    }
    let header = CheckpointHeader {
        architecture: model.arch.to_string(),
        config: model.config.clone(),
        input_shape: model.input_shape.clone(),
        layers: model.layers.iter().map(|l| l.spec.clone()).collect(),
        label_map: model.label_map.clone(),
        loss: model.loss,
        engine_precision: "f64".into(),
        storage_precision: "f32".into(),
        training_seed: model.seed,
        tensors,
        blob_bytes: blob.len(),
    };
    let text = serde_json::to_string_pretty(&header)?;
    let mut out = Vec::with_capacity(8 + text.len() + blob.len());
    out.extend_from_slice(SLM_MAGIC);
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(&blob);
    Ok(out)
}

/// Parses only the header block.
pub fn decode_header(bytes: &[u8]) -> Result<(CheckpointHeader, usize)> {
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            what: "checkpoint preamble".into(),
            expected: 8,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != SLM_MAGIC {
        return Err(decode_err("magic", format!("expected \"SLM1\", found {:02X?}", &bytes[..4])));
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let end = 8usize
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Truncated {
            what: "checkpoint header".into(),
            expected: 8 + len,
            actual: bytes.len(),
        })?;
    let text = std::str::from_utf8(&bytes[8..end]).map_err(|e| decode_err("header", e.to_string()))?;
    let header: CheckpointHeader =
        serde_json::from_str(text).map_err(|e| decode_err("header", e.to_string()))?;
    Ok((header, end))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SequentialModel> {
    let (header, start) = decode_header(bytes)?;
    let arch: ArchId = header.architecture.parse()?;
    let blob = &bytes[start..];
    if blob.len() != header.blob_bytes {
        return Err(Error::Truncated {
            what: "checkpoint weight blob".into(),
            expected: header.blob_bytes,
            actual: blob.len(),
        });
    }
    let mut model = SequentialModel::from_specs(
        arch,
        header.config.clone(),
        &header.input_shape,
        header.layers.clone(),
        header.label_map.clone(),
        header.loss,
        header.training_seed,
    )?;
    let expected: usize = model.layers.iter().map(|l| l.params.len()).sum();
    if header.tensors.len() != expected {
        return Err(decode_err(
            "tensors",
            format!("{} tensor entries, layers declare {expected}", header.tensors.len()),
        ));
    }
    let mut cursor = 0usize;
    let mut entries = header.tensors.iter();
    for (li, layer) in model.layers.iter_mut().enumerate() {
        for p in &mut layer.params {
            let e = entries.next().expect("count checked");
            if e.layer != li || e.name != p.name || e.dims != p.value.dims() || e.trainable != p.trainable {
                return Err(decode_err(
                    "tensors",
                    format!(
                        "entry {}/{} {:?} does not match layer {li} parameter {} {:?}",
                        e.layer,
                        e.name,
                        e.dims,
                        p.name,
                        p.value.dims()
                    ),
                ));
            }
            if e.offset != cursor || e.bytes != 4 * p.value.len() {
                return Err(decode_err(
                    "offset",
                    format!(
                        "tensor {}/{} at offset {} ({} bytes), expected offset {cursor} ({} bytes)",
                        e.layer,
                        e.name,
                        e.offset,
                        e.bytes,
                        4 * p.value.len()
                    ),
                ));
            }
            let raw = &blob[cursor..cursor + e.bytes];
            for (dst, c) in p.value.data_mut().iter_mut().zip(raw.chunks_exact(4)) {
                let v = f32::from_le_bytes(c.try_into().unwrap());
                if !v.is_finite() {
                    return Err(decode_err("weights", format!("non-finite value in {}/{}", e.layer, e.name)));
                }
                *dst = v as f64;
            }
            cursor += e.bytes;
        }
    }
    if cursor != header.blob_bytes {
        return Err(decode_err(
            "blob_bytes",
            format!("tensors cover {cursor} bytes, header declares {}", header.blob_bytes),
        ));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &SequentialModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(model)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SequentialModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
