//! Binary weights file.
//!
//! ```text
//! magic "DPPR" | version u32 | architecture u8 | layer count u32 |
//! per layer: rows u32, cols u32, rows*cols f64 weights (row-major), rows f64 biases
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Architecture, Dense, NetError, NetworkParams};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"DPPR";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn encode_weights(params: &NetworkParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.param_count() * 8 + params.layers.len() * 8);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.push(params.architecture().tag());
    out.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for layer in &params.layers {
        out.extend_from_slice(&(layer.rows as u32).to_le_bytes());
        out.extend_from_slice(&(layer.cols as u32).to_le_bytes());
        for w in layer.weights.iter().chain(&layer.biases) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

/// Writes atomically: the file is staged next to `path` and renamed into place.
pub fn save_weights(params: &NetworkParams, path: impl AsRef<Path>) -> Result<(), NetError> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode_weights(params))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| NetError::Format(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, NetError> {
        let raw = self.take(n.checked_mul(8).unwrap_or(usize::MAX), what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkParams, NetError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != WEIGHTS_MAGIC {
        return Err(NetError::Format("bad magic bytes".into()));
    }
    let version = r.u32("version")?;
    if version != WEIGHTS_VERSION {
        return Err(NetError::Format(format!("unsupported version {version}")));
    }
    let tag = r.take(1, "architecture")?[0];
    let arch = Architecture::from_tag(tag)
        .ok_or_else(|| NetError::Format(format!("unknown architecture tag {tag}")))?;
    let count = r.u32("layer count")? as usize;
    let expected = arch.layer_shapes();
    if count != expected.len() {
        return Err(NetError::ShapeMismatch(format!(
            "{arch} has {} layers, file declares {count}",
            expected.len()
        )));
    }
    let mut layers = Vec::with_capacity(count);
    for (i, &(rows, cols)) in expected.iter().enumerate() {
        let fr = r.u32("layer rows")? as usize;
        let fc = r.u32("layer cols")? as usize;
        if (fr, fc) != (rows, cols) {
            return Err(NetError::ShapeMismatch(format!(
                "layer {i} of {arch} should be {rows}x{cols}, file has {fr}x{fc}"
            )));
        }
        let weights = r.f64s(rows * cols, "weights")?;
        let biases = r.f64s(rows, "biases")?;
        layers.push(Dense {
            rows,
            cols,
            weights,
            biases,
        });
    }
    if r.pos != bytes.len() {
        return Err(NetError::Format("trailing bytes after last layer".into()));
    }
    NetworkParams::from_layers(arch, layers)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<NetworkParams, NetError> {
    decode_weights(&fs::read(path)?)
}

/// Loads weights and checks they belong to `arch`.
pub fn load_weights_as(path: impl AsRef<Path>, arch: Architecture) -> Result<NetworkParams, NetError> {
    let p = load_weights(path)?;
    if p.architecture() != arch {
        return Err(NetError::ShapeMismatch(format!(
            "expected {arch} weights, file holds {}",
            p.architecture()
        )));
    }
    Ok(p)
}
