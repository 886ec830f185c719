use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{image_center, warp_frame, AffineTransform};
use crate::error::{Error, Result};
use crate::frame::Frame;

fn symmetric(rng: &mut ChaCha8Rng, max: f64) -> f64 {
    if max == 0.0 {
        0.0
    } else {
        rng.random_range(-max..=max)
    }
}

/// Warps every frame by an independent random rotation about the image
/// center (uniform in `±max_rot_deg`) and translation (uniform in
/// `±max_shift` on each axis).
///
/// Returns the jittered frames and the generating transforms: jittered
/// frame `j` is `frames[j] ∘ τ_j`, so aligning it back needs `τ_j⁻¹`.
pub fn synth_jitter(frames: &[Frame], max_rot_deg: f64, max_shift: f64, seed: u64) -> Result<(Vec<Frame>, Vec<AffineTransform>)> {
    if !(max_rot_deg >= 0.0 && max_shift >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "jitter ranges must be non-negative (rotation {max_rot_deg}, shift {max_shift})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(frames.len());
    let mut transforms = Vec::with_capacity(frames.len());
    for f in frames {
        let theta = symmetric(&mut rng, max_rot_deg);
        let tx = symmetric(&mut rng, max_shift);
        let ty = symmetric(&mut rng, max_shift);
        let tau = AffineTransform::rotation_about(theta, image_center(f.width(), f.height()), tx, ty);
        out.push(warp_frame(f, &tau)?.frame);
        transforms.push(tau);
    }
    Ok((out, transforms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames() -> Vec<Frame> {
        (0..3)
            .map(|k| Frame::from_fn(16, 12, |c, r| ((c * 7 + r * 3 + k) % 11) as f64 / 10.0).unwrap())
            .collect()
    }

    #[test]
    fn zero_jitter_is_identity() {
        let fs = frames();
        let (out, ts) = synth_jitter(&fs, 0.0, 0.0, 3).unwrap();
        assert_eq!(out, fs);
        assert!(ts.iter().all(|t| *t == AffineTransform::identity()));
    }

    #[test]
    fn deterministic_per_seed() {
        let fs = frames();
        assert_eq!(synth_jitter(&fs, 5.0, 5.0, 9).unwrap(), synth_jitter(&fs, 5.0, 5.0, 9).unwrap());
        assert_ne!(synth_jitter(&fs, 5.0, 5.0, 9).unwrap().1, synth_jitter(&fs, 5.0, 5.0, 10).unwrap().1);
        assert!(synth_jitter(&fs, -1.0, 0.0, 0).is_err());
    }

    #[test]
    fn ranges_are_covered() {
        let blank = vec![Frame::filled(8, 8, 0.5).unwrap(); 400];
        let (_, ts) = synth_jitter(&blank, 5.0, 5.0, 1).unwrap();
        let center = image_center(8, 8);
        let rot: Vec<f64> = ts.iter().map(|t| t.rotation_deg()).collect();
        // translation component is the displacement of the center
        let tx: Vec<f64> = ts.iter().map(|t| t.apply(center.0, center.1).0 - center.0).collect();
        let ty: Vec<f64> = ts.iter().map(|t| t.apply(center.0, center.1).1 - center.1).collect();
        for xs in [&rot, &tx, &ty] {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // the expected gap at each end for 400 uniform draws is 10/401
            assert!(lo >= -5.0 - 1e-9 && lo < -4.85, "{lo}");
            assert!(hi <= 5.0 + 1e-9 && hi > 4.85, "{hi}");
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            // sd of the mean is 5/√3/20 ≈ 0.144
            assert!(mean.abs() < 0.5, "{mean}");
        }
    }
}
