use std::time::Instant;

use log::warn;

use super::mask::{extract_mask, MaskRule};
use super::snapshot::ModelSnapshot;
use crate::alignment::{process_frame_aligned, AffineTransform, AlignOptions};
use crate::error::{Error, Result};
use crate::frame::{Frame, Mask};
use crate::model::{process_frame, FrameResult};
use crate::sampling::{draw_sample_set, frame_seed, validate_rate};

#[derive(Clone, Debug, Default)]
pub struct StreamOptions {
    /// Estimate a per-frame affine warp before updating.
    pub align: Option<AlignOptions>,
    /// Pixel sub-sampling rate; `None` uses every pixel.
    pub subsample: Option<f64>,
    /// Compute a foreground mask for every frame.
    pub masks: bool,
    pub mask_rule: MaskRule,
    /// Allow alignment together with sub-sampling.
    pub experimental: bool,
}

impl StreamOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(rate) = self.subsample {
            validate_rate(rate)?;
            if self.align.is_some() && !self.experimental {
                return Err(Error::InvalidConfig(
                    "alignment with sub-sampling is experimental; enable it explicitly".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Everything produced for one frame.
#[derive(Clone, Debug)]
pub struct FrameOutput {
    /// Position in the stream since the warm start.
    pub index: u64,
    pub width: usize,
    pub height: usize,
    /// `None` when alignment failed; the model was not updated then.
    pub result: Option<FrameResult>,
    pub transform: Option<AffineTransform>,
    /// Pixels of the aligned frame sampled from outside the input.
    pub out_of_bounds: Option<Vec<bool>>,
    pub failure: Option<String>,
    pub mask: Option<Mask>,
    /// Time spent in the model update, excluding mask extraction and I/O.
    pub model_seconds: f64,
}

impl FrameOutput {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn background(&self) -> Option<Frame> {
        let r = self.result.as_ref()?;
        Frame::new(self.width, self.height, r.background.clone()).ok()
    }

    pub fn residual(&self) -> Option<Frame> {
        let r = self.result.as_ref()?;
        Frame::new(self.width, self.height, r.residual.clone()).ok()
    }
}

#[derive(Clone, Debug, Default)]
pub struct StreamSummary {
    pub frames: usize,
    pub failures: usize,
    pub model_seconds: f64,
}

impl StreamSummary {
    /// Frames per second of model time.
    pub fn fps(&self) -> f64 {
        if self.model_seconds > 0.0 {
            self.frames as f64 / self.model_seconds
        } else {
            f64::INFINITY
        }
    }
}

/// Processes `frames` in order, updating `snapshot` in place and handing
/// each frame's output to `sink`.
///
/// A fresh sample set is drawn per frame from the snapshot seed and frame
/// counter. Frames whose alignment fails are reported with a failure message
/// and leave the model unchanged; the frame counter still advances.
pub fn run_stream<I, F>(snapshot: &mut ModelSnapshot, frames: I, options: &StreamOptions, mut sink: F) -> Result<StreamSummary>
where
    I: IntoIterator<Item = Result<Frame>>,
    F: FnMut(FrameOutput) -> Result<()>,
{
    options.validate()?;
    snapshot.model.check()?;
    let (w, h) = (snapshot.model.width, snapshot.model.height);
    let d = w * h;
    let mut summary = StreamSummary::default();

    for (position, frame) in frames.into_iter().enumerate() {
        let frame = frame?;
        if frame.shape() != (w, h) {
            return Err(Error::FrameSizeMismatch {
                index: position,
                expected: (w, h),
                found: frame.shape(),
            });
        }
        let index = snapshot.frame_counter;
        let sample = match options.subsample {
            Some(rate) if rate < 1.0 => Some(draw_sample_set(d, rate, frame_seed(snapshot.seed, index))?),
            _ => None,
        };

        let start = Instant::now();
        let mut output = FrameOutput {
            index,
            width: w,
            height: h,
            result: None,
            transform: None,
            out_of_bounds: None,
            failure: None,
            mask: None,
            model_seconds: 0.0,
        };
        match &options.align {
            None => {
                output.result = Some(process_frame(&mut snapshot.model, &frame, sample.as_ref())?);
            }
            Some(align) => {
                match process_frame_aligned(
                    &mut snapshot.model,
                    &frame,
                    &AffineTransform::identity(),
                    align,
                    sample.as_ref(),
                ) {
                    Ok(out) => {
                        output.result = Some(out.result);
                        output.transform = Some(out.transform);
                        output.out_of_bounds = Some(out.out_of_bounds);
                    }
                    Err(Error::AlignmentFailure(msg)) => {
                        warn!("frame {index}: {msg}");
                        output.failure = Some(msg);
                        summary.failures += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        output.model_seconds = start.elapsed().as_secs_f64();
        summary.model_seconds += output.model_seconds;
        summary.frames += 1;
        snapshot.frame_counter += 1;

        if options.masks {
            if let Some(result) = &output.result {
                output.mask = Some(extract_mask(result, &snapshot.model.mog, w, h, options.mask_rule));
            }
        }
        sink(output)?;
    }
    Ok(summary)
}
