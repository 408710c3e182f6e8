//! Wire format shared by every transport.
//!
//! A frame is `"ORLB"`, u16 version, u8 kind, u64 sequence, u32 payload
//! length and the payload. Integers and floats are little-endian.

use crate::algo::ExplorationMode;
use crate::env::RunningStats;
use crate::error::{Error, Result};
use crate::nn::{checkpoint, NetParams};
use crate::replay::Transition;
use crate::wire::{put_f64s, Reader};

pub const MAGIC: &[u8; 4] = b"ORLB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    SampleBatch = 1,
    WeightsUpdate = 2,
    StatsMerge = 3,
    Heartbeat = 4,
    Shutdown = 5,
}

impl MessageKind {
    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            1 => MessageKind::SampleBatch,
            2 => MessageKind::WeightsUpdate,
            3 => MessageKind::StatsMerge,
            4 => MessageKind::Heartbeat,
            5 => MessageKind::Shutdown,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub sequence: u64,
    pub payload: Vec<u8>,
}

impl Message {
    /// Sequence numbers are stamped by the sending endpoint.
    pub fn new(kind: MessageKind, payload: Vec<u8>) -> Self {
        Message {
            kind,
            sequence: 0,
            payload,
        }
    }

    pub fn heartbeat(worker: u32) -> Self {
        Self::new(MessageKind::Heartbeat, worker.to_le_bytes().to_vec())
    }

    pub fn shutdown() -> Self {
        Self::new(MessageKind::Shutdown, Vec::new())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.sequence.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses a frame header; returns kind, sequence and payload length.
    pub fn decode_header(bytes: &[u8]) -> Result<(MessageKind, u64, usize)> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::decode(0, "bad magic, expected ORLB"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::decode(4, format!("unsupported version {version}")));
        }
        let tag = r.u8()?;
        let kind = MessageKind::from_tag(tag).ok_or_else(|| Error::decode(6, format!("unknown kind {tag}")))?;
        let sequence = r.u64()?;
        let len = r.u32()? as usize;
        Ok((kind, sequence, len))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (kind, sequence, len) = Self::decode_header(bytes)?;
        let body = &bytes[HEADER_LEN.min(bytes.len())..];
        if body.len() < len {
            return Err(Error::decode(
                HEADER_LEN + body.len(),
                format!("truncated payload: need {len} bytes, {} present", body.len()),
            ));
        }
        if body.len() > len {
            return Err(Error::decode(HEADER_LEN + len, "trailing bytes after payload"));
        }
        Ok(Message {
            kind,
            sequence,
            payload: body.to_vec(),
        })
    }

    /// Worker index carried by a heartbeat.
    pub fn heartbeat_worker(&self) -> Result<u32> {
        Reader::new(&self.payload).u32()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub score: f64,
    pub steps: u32,
    pub fell: bool,
    pub mode: ExplorationMode,
}

fn mode_tag(m: ExplorationMode) -> u8 {
    match m {
        ExplorationMode::Gaussian => 0,
        ExplorationMode::ParamNoise => 1,
        ExplorationMode::None => 2,
        ExplorationMode::Ou => 3,
        ExplorationMode::Sticky => 4,
    }
}

fn mode_from_tag(t: u8) -> Option<ExplorationMode> {
    Some(match t {
        0 => ExplorationMode::Gaussian,
        1 => ExplorationMode::ParamNoise,
        2 => ExplorationMode::None,
        3 => ExplorationMode::Ou,
        4 => ExplorationMode::Sticky,
        _ => return None,
    })
}

/// Payload of a sample batch: u32 worker, u32 observation width, u32 action
/// width, u32 count, the packed transitions, u32 episode count and per
/// finished episode f64 score, u32 steps, u8 fell, u8 exploration mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub worker: u32,
    pub obs_dim: u32,
    pub action_dim: u32,
    pub transitions: Vec<Transition>,
    pub episodes: Vec<EpisodeRecord>,
}

impl SampleBatch {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.worker.to_le_bytes());
        out.extend_from_slice(&self.obs_dim.to_le_bytes());
        out.extend_from_slice(&self.action_dim.to_le_bytes());
        out.extend_from_slice(&(self.transitions.len() as u32).to_le_bytes());
        for t in &self.transitions {
            t.write_le(&mut out);
        }
        out.extend_from_slice(&(self.episodes.len() as u32).to_le_bytes());
        for e in &self.episodes {
            out.extend_from_slice(&e.score.to_le_bytes());
            out.extend_from_slice(&e.steps.to_le_bytes());
            out.push(e.fell as u8);
            out.push(mode_tag(e.mode));
        }
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        let mut r = Reader::new(payload);
        let worker = r.u32()?;
        let obs_dim = r.u32()?;
        let action_dim = r.u32()?;
        let at = r.offset();
        let n = r.u32()? as usize;
        let per = Transition::encoded_len(obs_dim as usize, action_dim as usize);
        if r.remaining() / per.max(1) < n {
            return Err(Error::decode(at, format!("{n} transitions do not fit the payload")));
        }
        let transitions = (0..n)
            .map(|_| Transition::read_le(&mut r, obs_dim as usize, action_dim as usize))
            .collect::<Result<Vec<_>>>()?;
        let m = r.u32()? as usize;
        let mut episodes = Vec::with_capacity(m.min(1024));
        for _ in 0..m {
            let score = r.f64()?;
            let steps = r.u32()?;
            let fell = r.u8()? != 0;
            let at = r.offset();
            let mode = mode_from_tag(r.u8()?).ok_or_else(|| Error::decode(at, "unknown exploration mode"))?;
            episodes.push(EpisodeRecord { score, steps, fell, mode });
        }
        if r.remaining() != 0 {
            return Err(Error::decode(r.offset(), "trailing bytes in sample batch"));
        }
        Ok(SampleBatch {
            worker,
            obs_dim,
            action_dim,
            transitions,
            episodes,
        })
    }

    pub fn to_message(&self) -> Message {
        Message::new(MessageKind::SampleBatch, self.encode())
    }
}

/// Payload of a weights update: u64 version then a network checkpoint.
pub fn encode_weights(version: u64, actor: &NetParams) -> Message {
    let mut out = version.to_le_bytes().to_vec();
    out.extend_from_slice(&checkpoint::encode(actor));
    Message::new(MessageKind::WeightsUpdate, out)
}

pub fn decode_weights(payload: &[u8]) -> Result<(u64, NetParams)> {
    let mut r = Reader::new(payload);
    let version = r.u64()?;
    let net = checkpoint::decode(&payload[8..]).map_err(|e| match e {
        Error::Decode { offset, reason } => Error::Decode {
            offset: offset + 8,
            reason,
        },
        other => other,
    })?;
    Ok((version, net))
}

/// Payload of a statistics merge: u32 worker, u64 clamp warnings, u64
/// environment faults, u32 dimension, f64 count, means, second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsDelta {
    pub worker: u32,
    pub clamp_warnings: u64,
    pub env_faults: u64,
    pub stats: RunningStats,
}

impl StatsDelta {
    pub fn to_message(&self) -> Message {
        let mut out = Vec::new();
        out.extend_from_slice(&self.worker.to_le_bytes());
        out.extend_from_slice(&self.clamp_warnings.to_le_bytes());
        out.extend_from_slice(&self.env_faults.to_le_bytes());
        out.extend_from_slice(&(self.stats.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.stats.count.to_le_bytes());
        put_f64s(&mut out, &self.stats.mean);
        put_f64s(&mut out, &self.stats.m2);
        Message::new(MessageKind::StatsMerge, out)
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        let mut r = Reader::new(payload);
        let worker = r.u32()?;
        let clamp_warnings = r.u64()?;
        let env_faults = r.u64()?;
        let dim = r.u32()? as usize;
        let count = r.f64()?;
        let mean = r.f64_vec(dim)?;
        let m2 = r.f64_vec(dim)?;
        if r.remaining() != 0 {
            return Err(Error::decode(r.offset(), "trailing bytes in statistics"));
        }
        Ok(StatsDelta {
            worker,
            clamp_warnings,
            env_faults,
            stats: RunningStats { count, mean, m2 },
        })
    }
}
