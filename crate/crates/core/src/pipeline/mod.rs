//! Warm start, stream orchestration, mask extraction and persistence.

mod mask;
pub mod snapshot;
mod stream;
mod warm;

pub use mask::{argmax_mask, argmax_threshold, extract_mask, foreground_image, MaskRule};
pub use snapshot::{decode_snapshot, encode_snapshot, load_snapshot, save_snapshot, ModelSnapshot, SnapshotError};
pub use stream::{run_stream, FrameOutput, StreamOptions, StreamSummary};
pub use warm::{warm_start, warm_start_with_stats, WarmStartStats, CARRIER_DELTA};
