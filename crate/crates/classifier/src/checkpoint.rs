//! Checkpoint container: `STCK`, u16 version, u32 header length, a JSON
//! header, then every parameter (including normalization buffers) as
//! little-endian f32 in header order.

use std::fs;
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use mgtd_core::features::FeatureColumn;
use serde::{Deserialize, Serialize};

use crate::config::{EncoderConfig, ModelKind};
use crate::error::{Error, Result};
use crate::model::{Detector, EpochRecord};

const MAGIC: &[u8; 4] = b"STCK";
const VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    encoder: EncoderConfig,
    n_fixed: usize,
    columns: Vec<u8>,
    init_seed: u64,
    params: Vec<ParamEntry>,
    history: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

pub fn encode_checkpoint(detector: &Detector) -> Result<Vec<u8>> {
    let entries = detector.params().entries();
    let header = Header {
        kind: detector.kind(),
        encoder: detector.config().clone(),
        n_fixed: detector.n_fixed(),
        columns: detector.columns().iter().map(|c| *c as u8).collect(),
        init_seed: detector.init_seed(),
        params: entries
            .iter()
            .map(|p| ParamEntry {
                name: p.name.clone(),
                shape: p.var.dims().to_vec(),
            })
            .collect(),
        history: detector.history.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in entries {
        let values = p.var.as_tensor().to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Detector> {
    let bad = |m: String| Error::Checkpoint(m);
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(bad("missing STCK magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let header_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let body = &bytes[10..];
    if body.len() < header_len {
        return Err(bad("truncated header".into()));
    }
    let header: Header =
        serde_json::from_slice(&body[..header_len]).map_err(|e| bad(format!("header: {e}")))?;
    let columns = header
        .columns
        .iter()
        .map(|&id| FeatureColumn::from_id(id).ok_or_else(|| bad(format!("unknown column id {id}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut detector = Detector::new(header.kind, header.encoder, header.n_fixed, columns, header.init_seed)?;
    detector.history = header.history;

    let entries = detector.params().entries();
    if entries.len() != header.params.len() {
        return Err(bad(format!(
            "{} parameters stored, architecture has {}",
            header.params.len(),
            entries.len()
        )));
    }
    let mut blob = &body[header_len..];
    for (p, stored) in entries.iter().zip(&header.params) {
        if p.name != stored.name || p.var.dims() != stored.shape.as_slice() {
            return Err(bad(format!("parameter {} does not match architecture", stored.name)));
        }
        let n = p.var.elem_count();
        if blob.len() < n * 4 {
            return Err(bad(format!("truncated data for {}", stored.name)));
        }
        let values: Vec<f32> = blob[..n * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite value {v} in {}", stored.name)));
        }
        blob = &blob[n * 4..];
        let t = Tensor::from_vec(values, stored.shape.as_slice(), &Device::Cpu)?.to_dtype(p.var.dtype())?;
        p.var.set(&t)?;
    }
    if !blob.is_empty() {
        return Err(bad(format!("{} trailing bytes", blob.len())));
    }
    Ok(detector)
}

pub fn save_checkpoint(detector: &Detector, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(detector)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Detector> {
    decode_checkpoint(&fs::read(path)?)
}
