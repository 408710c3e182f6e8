//! Binary network checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic `PRLX` | 4 bytes |
//! | format version | u16 |
//! | number of widths `n` | u32 |
//! | widths | `n` x u32 |
//! | hidden activation tag, output activation tag | u8, u8 |
//! | per hidden layer flags (bit 0 layer-norm, bit 1 residual) | `n - 2` x u8 |
//! | output heads | u32 |
//! | parameter count | u64 |
//! | parameters in layer order | f64 LE each |

use std::fs;
use std::path::Path;

use super::arch::{Activation, ArchDescriptor};
use super::net::NetParams;
use crate::error::{Error, Result};
use crate::wire::Reader;

pub const MAGIC: &[u8; 4] = b"PRLX";
pub const VERSION: u16 = 1;

pub fn encode(params: &NetParams) -> Vec<u8> {
    let arch = params.arch();
    let mut out = Vec::with_capacity(32 + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(arch.layer_widths.len() as u32).to_le_bytes());
    for &w in &arch.layer_widths {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.push(arch.activation.tag());
    out.push(arch.output_activation.tag());
    for (&n, &r) in arch.layer_norm.iter().zip(&arch.residual) {
        out.push(n as u8 | (r as u8) << 1);
    }
    out.extend_from_slice(&(arch.output_heads as u32).to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<NetParams> {
    let mut r = Reader::new(bytes);
    let params = read(&mut r)?;
    if r.remaining() != 0 {
        return Err(Error::decode(r.offset(), "trailing bytes after checkpoint"));
    }
    Ok(params)
}

/// Reads one checkpoint from the front of `r`.
pub(crate) fn read(r: &mut Reader<'_>) -> Result<NetParams> {
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::decode(r.offset() - 4, "bad checkpoint magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::decode(r.offset() - 2, format!("unsupported checkpoint version {version}")));
    }
    let n = r.u32()? as usize;
    if n < 2 || n > 1 << 16 {
        return Err(Error::decode(r.offset() - 4, format!("implausible width count {n}")));
    }
    let mut layer_widths = Vec::with_capacity(n);
    for _ in 0..n {
        layer_widths.push(r.u32()? as usize);
    }
    let tag_at = r.offset();
    let activation = Activation::from_tag(r.u8()?).ok_or_else(|| Error::decode(tag_at, "unknown activation tag"))?;
    let output_activation =
        Activation::from_tag(r.u8()?).ok_or_else(|| Error::decode(tag_at + 1, "unknown activation tag"))?;
    let mut layer_norm = Vec::with_capacity(n - 2);
    let mut residual = Vec::with_capacity(n - 2);
    for _ in 0..n - 2 {
        let flags = r.u8()?;
        layer_norm.push(flags & 1 != 0);
        residual.push(flags & 2 != 0);
    }
    let output_heads = r.u32()? as usize;
    let arch = ArchDescriptor {
        layer_widths,
        activation,
        output_activation,
        layer_norm,
        residual,
        output_heads,
    };
    let arch_end = r.offset();
    arch.validate()
        .map_err(|e| Error::decode(arch_end, format!("invalid architecture: {e}")))?;
    let count = r.u64()? as usize;
    let expected = NetParams::zeros(arch.clone())?.len();
    if count != expected {
        return Err(Error::decode(
            r.offset() - 8,
            format!("parameter count {count} does not match architecture ({expected})"),
        ));
    }
    let values = r.f64_vec(count)?;
    NetParams::from_values(arch, values)
}

pub fn save(params: &NetParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(params))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<NetParams> {
    decode(&fs::read(path)?)
}
