//! "SKP1" tensor container.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "SKP1"
//! 4       4         version, u32 LE (= 1)
//! 8       1         layout tag (1 = pose, face, left hand, right hand)
//! 9       1         dtype (1 = f32 LE)
//! 10      1         rank
//! 11      4 * rank  dims, u32 LE each
//! ...     4 * prod  payload, row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::keypoint::LAYOUT_TAG;

pub const SKP_MAGIC: &[u8; 4] = b"SKP1";
pub const SKP_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 1;
const FIXED_HEADER: usize = 11;

#[derive(Clone, Debug, PartialEq)]
pub struct SkpTensor {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

pub fn encode_tensor(dims: &[usize], values: &[f32]) -> Result<Vec<u8>> {
    let count: usize = dims.iter().product();
    if count != values.len() {
        return Err(Error::shape("tensor payload", count, values.len()));
    }
    if dims.len() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!("rank {} exceeds 255", dims.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("tensor payload index {i}")));
    }
    let mut out = Vec::with_capacity(FIXED_HEADER + 4 * dims.len() + 4 * values.len());
    out.extend_from_slice(SKP_MAGIC);
    out.extend_from_slice(&SKP_VERSION.to_le_bytes());
    out.push(LAYOUT_TAG);
    out.push(DTYPE_F32);
    out.push(dims.len() as u8);
    for &d in dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<SkpTensor> {
    if bytes.len() < FIXED_HEADER {
        return Err(Error::Truncated {
            what: "SKP header".into(),
            expected: FIXED_HEADER,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != SKP_MAGIC {
        return Err(decode("magic", format!("expected \"SKP1\", found {:02X?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SKP_VERSION {
        return Err(decode("version", format!("unsupported version {version}")));
    }
    if bytes[8] != LAYOUT_TAG {
        return Err(decode("layout_tag", format!("unknown layout tag {}", bytes[8])));
    }
    if bytes[9] != DTYPE_F32 {
        return Err(decode("dtype", format!("unknown dtype {}", bytes[9])));
    }
    let rank = bytes[10] as usize;
    let header = FIXED_HEADER + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Truncated {
            what: "SKP dims".into(),
            expected: header,
            actual: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[FIXED_HEADER..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| decode("dims", format!("element count overflows: {dims:?}")))?;
    let expected = count
        .checked_mul(4)
        .and_then(|p| p.checked_add(header))
        .ok_or_else(|| decode("dims", format!("payload size overflows: {dims:?}")))?;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            what: format!("SKP payload for dims {dims:?}"),
            expected,
            actual: bytes.len(),
        });
    }
    let values: Vec<f32> = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(decode("payload", format!("non-finite value at index {i}")));
    }
    Ok(SkpTensor { dims, values })
}

fn decode(field: &str, detail: String) -> Error {
    Error::Decode {
        field: field.into(),
        detail,
    }
}

pub fn write_tensor(path: impl AsRef<Path>, dims: &[usize], values: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_tensor(dims, values)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<SkpTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}
