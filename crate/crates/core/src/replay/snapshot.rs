//! Replay snapshot files: `"PRLR"`, u16 version, u32 observation width,
//! u32 action width, u64 count, then the packed transitions oldest first.

use std::path::Path;

use super::ring::RingBuffer;
use super::transition::Transition;
use crate::error::{Error, Result};
use crate::wire::Reader;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"PRLR";
pub const SNAPSHOT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub transitions: Vec<Transition>,
}

pub fn encode_snapshot(buffer: &RingBuffer) -> Vec<u8> {
    let per = Transition::encoded_len(buffer.obs_dim(), buffer.action_dim());
    let mut out = Vec::with_capacity(22 + per * buffer.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(buffer.obs_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(buffer.action_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(buffer.len() as u64).to_le_bytes());
    for i in buffer.chronological() {
        buffer.get(i).expect("occupied slot").write_le(&mut out);
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != SNAPSHOT_MAGIC {
        return Err(Error::decode(0, "bad magic, expected PRLR"));
    }
    let version = r.u16()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::decode(4, format!("unsupported version {version}")));
    }
    let obs_dim = r.u32()? as usize;
    let action_dim = r.u32()? as usize;
    let count_at = r.offset();
    let count = r.u64()? as usize;
    let per = Transition::encoded_len(obs_dim, action_dim);
    if r.remaining() / per.max(1) < count {
        return Err(Error::decode(count_at, format!("count {count} exceeds the remaining bytes")));
    }
    let transitions = (0..count)
        .map(|_| Transition::read_le(&mut r, obs_dim, action_dim))
        .collect::<Result<Vec<_>>>()?;
    if r.remaining() != 0 {
        return Err(Error::decode(r.offset(), "trailing bytes"));
    }
    Ok(Snapshot {
        obs_dim,
        action_dim,
        transitions,
    })
}

pub fn save_snapshot(buffer: &RingBuffer, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_snapshot(buffer))?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    decode_snapshot(&std::fs::read(path)?)
}

/// Union of several snapshots in argument order; the buffer keeps the most
/// recent `capacity` transitions.
pub fn merge_snapshots(snapshots: &[Snapshot], capacity: usize) -> Result<RingBuffer> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("no snapshots to merge".into()))?;
    let mut buffer = RingBuffer::new(capacity, first.obs_dim, first.action_dim);
    for s in snapshots {
        for t in &s.transitions {
            buffer.push(t)?;
        }
    }
    Ok(buffer)
}
