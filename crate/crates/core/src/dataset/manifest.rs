use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::skp::{read_tensor, write_tensor};
use crate::error::{Error, Result};
use crate::keypoint::{LabelMap, LabeledDataset, SignSequence, FRAME_LEN, SEQUENCE_FRAMES};

pub const SCHEMA_VERSION: u32 = 1;

fn canonical_shape() -> (usize, usize) {
    (SEQUENCE_FRAMES, FRAME_LEN)
}

/// Dataset index: label map plus an ordered list of labelled sequence files.
///
/// Stored as JSON. Entry paths are resolved relative to the manifest's
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub label_map: LabelMap,
    #[serde(default = "canonical_shape")]
    pub sequence_shape: (usize, usize),
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub path: PathBuf,
}

impl DatasetManifest {
    pub fn new(label_map: LabelMap) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            label_map,
            sequence_shape: canonical_shape(),
            entries: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Decode {
                field: "schema_version".into(),
                detail: format!("unsupported schema version {}", m.schema_version),
            });
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Reads every referenced sequence in manifest order.
pub fn assemble(manifest: &DatasetManifest, base_dir: &Path) -> Result<LabeledDataset> {
    let (frames, features) = manifest.sequence_shape;
    let mut ds = LabeledDataset::with_shape(manifest.label_map.clone(), manifest.sequence_shape);
    for (index, entry) in manifest.entries.iter().enumerate() {
        let fail = |detail: String| Error::Assembly {
            index,
            label: entry.label.clone(),
            path: entry.path.clone(),
            detail,
        };
        let label = manifest
            .label_map
            .index_of(&entry.label)
            .ok_or_else(|| fail(format!("unknown label `{}`", entry.label)))?;
        let tensor = read_tensor(base_dir.join(&entry.path)).map_err(|e| fail(e.to_string()))?;
        if tensor.dims != [frames, features] {
            return Err(fail(format!(
                "shape {:?}, expected [{frames}, {features}]",
                tensor.dims
            )));
        }
        let seq = SignSequence::from_raw(frames, features, tensor.values)?;
        ds.push(seq, label);
    }
    Ok(ds)
}

/// Loads a manifest file and assembles the dataset it describes.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = manifest_path.as_ref();
    let manifest = DatasetManifest::load(path)?;
    assemble(&manifest, path.parent().unwrap_or(Path::new(".")))
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes every sequence as `<label>/<nnnn>.skp` under `dir` plus
/// `manifest.json`, and returns the manifest.
pub fn write_dataset(ds: &LabeledDataset, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    let mut manifest = DatasetManifest::new(ds.label_map.clone());
    manifest.sequence_shape = ds.sequence_shape;
    let mut per_label = vec![0usize; ds.classes()];
    for name in ds.label_map.names() {
        let sub = dir.join(name);
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    }
    for (seq, &label) in ds.sequences.iter().zip(&ds.labels) {
        let name = ds
            .label_map
            .name(label)
            .ok_or(Error::LabelOutOfRange { label, classes: ds.classes() })?;
        let rel = PathBuf::from(name).join(format!("{:04}.skp", per_label[label]));
        per_label[label] += 1;
        write_tensor(dir.join(&rel), &[seq.frames(), seq.features()], seq.data())?;
        manifest.entries.push(ManifestEntry {
            label: name.to_string(),
            path: rel,
        });
    }
    manifest.save(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
