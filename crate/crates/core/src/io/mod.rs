//! Frame files, evaluation against ground truth, and synthetic jitter.

pub mod eval;
pub mod frames;
pub mod jitter;

pub use eval::{evaluate_masks, evaluate_residuals, f_measure, threshold_sweep, EvalReport, Scores};
pub use frames::{
    list_image_files, read_all_frames, read_frames, read_image, read_mask, write_image, write_mask, write_raw_stream,
    FrameReader, FrameSource,
};
pub use jitter::synth_jitter;
