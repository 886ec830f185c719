use crate::frame::{Frame, Mask};
use crate::model::{compute_responsibilities, FrameResult, MogState};
use crate::regularize::{select_lambda, tv_denoise};

/// How foreground pixels are picked from a frame result.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum MaskRule {
    /// Foreground where the largest-variance component has the highest
    /// responsibility.
    #[default]
    Argmax,
    /// TV-denoise the residual magnitude with `λ = 1.5 max σ²` and threshold
    /// it. Without an explicit threshold the cut is the smallest magnitude at
    /// which the largest-variance component wins the argmax.
    Tv { threshold: Option<f64> },
}

/// `|x - U v|` as an image.
pub fn foreground_image(result: &FrameResult, width: usize, height: usize) -> Frame {
    Frame::new(width, height, result.residual.iter().map(|e| e.abs()).collect()).expect("residual has the frame shape")
}

/// Argmax mask for a full residual vector.
pub fn argmax_mask(residual: &[f64], mog: &MogState, width: usize, height: usize) -> Mask {
    let fg = mog.largest_variance();
    let resp = compute_responsibilities(residual, mog);
    let bits = (0..residual.len()).map(|i| resp.argmax(i) == fg).collect();
    Mask::new(width, height, bits).expect("residual has the frame shape")
}

fn log_density(e: f64, weight: f64, variance: f64) -> f64 {
    weight.ln() - 0.5 * (2.0 * std::f64::consts::PI * variance).ln() - e * e / (2.0 * variance)
}

/// Smallest residual magnitude at which the largest-variance component has
/// the highest posterior.
pub fn argmax_threshold(mog: &MogState) -> f64 {
    let fg = mog.largest_variance();
    let margin = |e: f64| {
        let own = log_density(e, mog.weights[fg], mog.variances[fg]);
        let other = (0..mog.components())
            .filter(|&k| k != fg)
            .map(|k| log_density(e, mog.weights[k], mog.variances[k]))
            .fold(f64::NEG_INFINITY, f64::max);
        own - other
    };
    if margin(0.0) >= 0.0 {
        return 0.0;
    }
    let hi_limit = 20.0 * mog.variances[fg].sqrt();
    let steps = 2000;
    let mut lo = 0.0;
    let mut hi = None;
    for s in 1..=steps {
        let e = hi_limit * s as f64 / steps as f64;
        if margin(e) >= 0.0 {
            hi = Some(e);
            break;
        }
        lo = e;
    }
    let Some(mut hi) = hi else {
        // the foreground component never wins (zero weight)
        return f64::INFINITY;
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Foreground mask for one processed frame. Responsibilities are evaluated
/// on every pixel of `result.residual` with `mog`, so sub-sampled frames get
/// full masks too.
pub fn extract_mask(result: &FrameResult, mog: &MogState, width: usize, height: usize, rule: MaskRule) -> Mask {
    match rule {
        MaskRule::Argmax => argmax_mask(&result.residual, mog, width, height),
        MaskRule::Tv { threshold } => {
            let fg = foreground_image(result, width, height);
            let smoothed = tv_denoise(&fg, select_lambda(mog));
            let t = threshold.unwrap_or_else(|| argmax_threshold(mog));
            let bits = smoothed.values().iter().map(|&v| v >= t && v > 0.0).collect();
            Mask::new(width, height, bits).expect("residual has the frame shape")
        }
    }
}
