//! Binary arrays with a JSON header.
//!
//! Layout: one line of compact JSON terminated by `\n`, followed by the
//! payload as consecutive little-endian `f64` values. `head -1 file.bin`
//! shows the header.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub fn encode<H: Serialize>(header: &H, data: &[f64]) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    out.reserve(data.len() * 8);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode<H: DeserializeOwned>(bytes: &[u8]) -> Result<(H, Vec<f64>)> {
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format("blob", "missing header terminator"))?;
    let header = serde_json::from_slice(&bytes[..split])?;
    let payload = &bytes[split + 1..];
    if !payload.len().is_multiple_of(8) {
        return Err(Error::format(
            "blob",
            format!("payload length {} is not a multiple of 8", payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}

pub fn write<H: Serialize>(path: &Path, header: &H, data: &[f64]) -> Result<()> {
    super::atomic_write(path, &encode(header, data)?)
}

pub fn read<H: DeserializeOwned>(path: &Path) -> Result<(H, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
