//! Experience storage: ring buffer, sum tree and proportional prioritized replay.

mod prioritized;
mod ring;
mod snapshot;
mod sumtree;
mod transition;

pub use prioritized::{PrioritizedBatch, PrioritizedBuffer, DEFAULT_PRIORITY_EPS};
pub use ring::{RingBuffer, DEFAULT_CAPACITY};
pub use snapshot::{
    decode_snapshot, encode_snapshot, load_snapshot, merge_snapshots, save_snapshot, Snapshot, SNAPSHOT_MAGIC,
    SNAPSHOT_VERSION,
};
pub use sumtree::SumTree;
pub use transition::{DoneKind, Transition, ALL_HEADS};
