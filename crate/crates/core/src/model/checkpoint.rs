//! Versioned binary checkpoint: magic, JSON header, raw parameters, mask.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{BundleLayout, FeatureSet};

use super::network::{Model, Normalizer, TensorInfo};
use super::NetworkConfig;

const MAGIC: &[u8; 5] = b"VIBM1";

#[derive(Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    feature_set: FeatureSet,
    source_layout: BundleLayout,
    normalizer: Normalizer,
    fingerprint: Option<String>,
    #[serde(default)]
    personalized: bool,
    tensors: Vec<TensorInfo>,
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        config: model.config.clone(),
        feature_set: model.feature_set,
        source_layout: model.source_layout.clone(),
        normalizer: model.normalizer.clone(),
        fingerprint: model.fingerprint.clone(),
        personalized: model.personalized,
        tensors: model.tensors.clone(),
    })?;
    let mut out = Vec::with_capacity(9 + header.len() + model.params.len() * 9);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend(model.mask.iter().map(|&m| m as u8));
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() - *pos < n {
        return Err(Error::Truncated {
            offset: *pos as u64,
            message: format!("expected {n} bytes of {what}"),
        });
    }
    let s = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(s)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model> {
    let mut pos = 0;
    if take(bytes, &mut pos, 5, "magic")? != MAGIC {
        return Err(Error::BadFormat("not a model checkpoint".into()));
    }
    let len = u32::from_le_bytes(take(bytes, &mut pos, 4, "header length")?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(take(bytes, &mut pos, len, "header")?)?;
    let n: usize = header.tensors.iter().map(|t| t.len()).sum();
    let params: Vec<f64> = take(bytes, &mut pos, n * 8, "parameters")?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mask: Vec<bool> = take(bytes, &mut pos, n, "mask")?.iter().map(|&b| b != 0).collect();
    if pos != bytes.len() {
        return Err(Error::BadFormat(format!("{} trailing bytes", bytes.len() - pos)));
    }
    let mut model = Model::rebuild(
        header.config,
        header.source_layout,
        header.feature_set,
        header.normalizer,
        params,
        mask,
        header.fingerprint,
    )?;
    model.personalized = header.personalized;
    if model.tensors != header.tensors {
        return Err(Error::BadFormat("tensor table does not match configuration".into()));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_checkpoint(&bytes)
}
