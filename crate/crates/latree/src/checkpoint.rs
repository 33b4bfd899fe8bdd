//! `LTSQ1` parameter checkpoints.
//!
//! Layout: the 6-byte magic `LTSQ1\n`, a little-endian `u32` header length,
//! a UTF-8 JSON header listing every parameter's name, shape and element
//! offset, then all values as little-endian `f64` in header order.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use latree_core::autodiff::{ParamStore, Tensor};
use latree_core::Error;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 6] = b"LTSQ1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the payload, in `f64` elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub params: Vec<Entry>,
    pub total: usize,
}

pub fn encode(store: &ParamStore) -> Vec<u8> {
    let mut params = Vec::new();
    let mut offset = 0;
    for (_, p) in store.iter() {
        params.push(Entry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            offset,
        });
        offset += p.value.len();
    }
    let header = Header {
        format: "LTSQ1".into(),
        params,
        total: offset,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(10 + json.len() + 8 * offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, p) in store.iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, Error> {
    let bad = |m: &str| Error::Data(format!("not a valid LTSQ1 checkpoint: {}", m));
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(bad("missing magic"));
    }
    let hlen = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(10..10 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    let payload = &bytes[10 + hlen..];
    if payload.len() != 8 * header.total {
        return Err(bad("payload size does not match header"));
    }
    let mut out = Vec::with_capacity(header.params.len());
    for e in header.params {
        let n: usize = e.shape.iter().product();
        if e.offset + n > header.total {
            return Err(bad("parameter extends past the payload"));
        }
        let data = payload[8 * e.offset..8 * (e.offset + n)]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push((e.name, Tensor::new(e.shape, data)?));
    }
    Ok(out)
}

pub fn save(path: &Path, store: &ParamStore) -> Result<()> {
    fs::write(path, encode(store)).with_context(|| format!("writing checkpoint {}", path.display()))
}

/// Loads values into a store whose layout (names and shapes) must match.
pub fn load_into(path: &Path, store: &mut ParamStore) -> Result<()> {
    let bytes = fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    store.load_values(decode(&bytes)?)?;
    Ok(())
}
