//! Online background subtraction with a mixture-of-Gaussians noise model
//! and a recursively updated low-rank background.
//!
//! The usual flow is [`warm_start`] on a short batch, then [`run_stream`]
//! (or [`process_frame`] / [`process_frame_aligned`] directly) per frame.

pub mod alignment;
pub mod error;
pub mod frame;
pub mod io;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod regularize;
pub mod sampling;
pub mod synth;

pub use alignment::{
    iterative_batch_align, process_frame_aligned, warp_frame, AffineTransform, AlignOptions, BatchAlignOptions,
};
pub use error::{Error, Result};
pub use frame::{Frame, Mask};
pub use model::{process_frame, FrameResult, MogState, Model, OnlineConfig, PriorPolicy, Subspace};
pub use pipeline::{
    extract_mask, load_snapshot, run_stream, save_snapshot, warm_start, FrameOutput, MaskRule, ModelSnapshot,
    StreamOptions,
};
pub use regularize::{select_lambda, tv_denoise};
pub use sampling::{draw_sample_set, SampleIndexSet};
