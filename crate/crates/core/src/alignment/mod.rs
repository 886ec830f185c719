//! Affine alignment of frames to the background subspace.

mod affine;
mod tracker;
mod warp;

pub use affine::{
    format_transform_table, image_center, parse_transform_table, read_transform_table, write_transform_table,
    AffineTransform, MIN_DETERMINANT,
};
pub use tracker::{
    iterative_batch_align, process_frame_aligned, solve_coeff_and_delta, AlignOptions, AlignedFrameResult,
    BatchAlignOptions, BatchAlignment, BatchInit,
};
pub use warp::{compute_jacobian, warp_frame, JacobianMatrix, WarpedFrame, PARAMS};
