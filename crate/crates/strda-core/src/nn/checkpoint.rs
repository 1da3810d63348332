//! Binary checkpoints with a plain-text sidecar.
//!
//! Layout: magic, format version, model kind, charset digest, config digest,
//! step counter, then named f32 tensors in parameter visit order (little
//! endian). Round trips are bit-exact. The sidecar repeats the metadata for
//! humans. Loading verifies the magic, the kind and the charset digest.

use super::Model;
use crate::corpus::charset::Charset;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"SDCKPT01";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub kind: String,
    pub step: u64,
    pub config_hash: String,
    pub charset_hash: String,
}

fn write_str(w: &mut Vec<u8>, s: &str) {
    w.extend_from_slice(&(s.len() as u16).to_le_bytes());
    w.extend_from_slice(s.as_bytes());
}

fn read_str(r: &mut impl Read) -> std::io::Result<String> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut buf = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

pub fn save_checkpoint<M: Model>(
    path: &Path,
    model: &mut M,
    kind: &str,
    step: u64,
    config_hash: &str,
) -> Result<()> {
    let charset_hash = Charset::standard().hash_hex();
    let tensors = model.snapshot();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&1u32.to_le_bytes());
    write_str(&mut buf, kind);
    write_str(&mut buf, &charset_hash);
    write_str(&mut buf, config_hash);
    buf.extend_from_slice(&step.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, data) in &tensors {
        write_str(&mut buf, name);
        buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))?;

    let sidecar = path.with_extension("meta.txt");
    let text = format!(
        "schema=1\nkind={kind}\nstep={step}\nconfig_hash={config_hash}\ncharset_hash={charset_hash}\n"
    );
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

pub fn load_checkpoint<M: Model>(
    path: &Path,
    model: &mut M,
    expect_kind: &str,
) -> Result<CheckpointMeta> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::artifact(path, "bad checkpoint magic"));
    }
    let mut v4 = [0u8; 4];
    f.read_exact(&mut v4).map_err(|e| Error::io(path, e))?;
    if u32::from_le_bytes(v4) != 1 {
        return Err(Error::artifact(path, "unsupported checkpoint version"));
    }
    let kind = read_str(&mut f).map_err(|e| Error::io(path, e))?;
    if kind != expect_kind {
        return Err(Error::artifact(
            path,
            format!("checkpoint kind {kind:?} does not match expected {expect_kind:?}"),
        ));
    }
    let charset_hash = read_str(&mut f).map_err(|e| Error::io(path, e))?;
    if charset_hash != Charset::standard().hash_hex() {
        return Err(Error::artifact(path, "checkpoint charset hash mismatch"));
    }
    let config_hash = read_str(&mut f).map_err(|e| Error::io(path, e))?;
    let mut u8buf = [0u8; 8];
    f.read_exact(&mut u8buf).map_err(|e| Error::io(path, e))?;
    let step = u64::from_le_bytes(u8buf);
    f.read_exact(&mut v4).map_err(|e| Error::io(path, e))?;
    let n_tensors = u32::from_le_bytes(v4) as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name = read_str(&mut f).map_err(|e| Error::io(path, e))?;
        f.read_exact(&mut u8buf).map_err(|e| Error::io(path, e))?;
        let len = u64::from_le_bytes(u8buf) as usize;
        let mut raw = vec![0u8; len * 4];
        f.read_exact(&mut raw).map_err(|e| Error::io(path, e))?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push((name, data));
    }
    model.restore(&tensors);
    Ok(CheckpointMeta {
        kind,
        step,
        config_hash,
        charset_hash,
    })
}
