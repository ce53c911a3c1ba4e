use std::io::{Read, Write};
use std::path::Path;

use crate::config::{parse_flat, DitConfig};
use crate::error::{Error, Result};
use crate::model::{init_params, Params};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"ITGN";
pub const VERSION: u32 = 1;

/// Serializes `params` as: magic, version, config block (length-prefixed
/// `key = value` text), tensor count, then per tensor its name, rank, dims,
/// value count and little-endian `f32` values. Integers are little-endian;
/// lengths and counts are `u32` except dims and value counts (`u64`).
pub fn write_checkpoint<W: Write>(out: &mut W, cfg: &DitConfig, params: &Params<f32>) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let text = cfg.to_flat();
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    out.write_all(&(params.tensors.len() as u32).to_le_bytes())?;
    for (name, t) in &params.tensors {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(t.shape.len() as u32).to_le_bytes())?;
        for &d in &t.shape {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        out.write_all(&(t.data.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(4 * t.data.len());
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Reads a checkpoint and checks every tensor against the shapes its config implies.
pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<(DitConfig, Params<f32>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(input)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let len = read_u32(input)? as usize;
    let mut text = vec![0u8; len];
    input.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| bad("config block is not UTF-8"))?;
    let mut cfg = DitConfig::default();
    cfg.apply(&parse_flat(&text)?)?;
    cfg.validate()?;
    let expected = init_params::<f32>(&DitConfig { seed: 0, ..cfg.clone() })?;

    let count = read_u32(input)? as usize;
    let mut params = Params::default();
    for _ in 0..count {
        let name_len = read_u32(input)? as usize;
        if name_len > 4096 {
            return Err(bad("tensor name too long"));
        }
        let mut name = vec![0u8; name_len];
        input.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8"))?;
        let rank = read_u32(input)? as usize;
        let shape = (0..rank)
            .map(|_| read_u64(input).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n = read_u64(input)? as usize;
        let want = expected
            .tensors
            .get(&name)
            .ok_or_else(|| bad(format!("unexpected tensor {name:?}")))?;
        if want.shape != shape || n != want.len() {
            return Err(bad(format!(
                "tensor {name:?} has shape {shape:?}, config implies {:?}",
                want.shape
            )));
        }
        let mut raw = vec![0u8; 4 * n];
        input.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        params.tensors.insert(name, Tensor::new(shape, data)?);
    }
    if let Some(missing) = expected.names().find(|k| !params.tensors.contains_key(*k)) {
        return Err(bad(format!("missing tensor {missing:?}")));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok((cfg, params))
}

pub fn save_checkpoint(path: &Path, cfg: &DitConfig, params: &Params<f32>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, cfg, params)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(DitConfig, Params<f32>)> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice())
}
