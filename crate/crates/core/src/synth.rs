//! Synthetic scenes with known ground truth: low-rank backgrounds, mixture
//! noise and a moving foreground square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::frame::{Frame, Mask};

/// Smooth random field: a sum of low-frequency sinusoids and Gaussian blobs,
/// rescaled to `[lo, hi]`.
pub fn smooth_field(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let period = rng.random_range(10.0..28.0);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let k = 2.0 * std::f64::consts::PI / period;
            (k * angle.cos(), k * angle.sin(), rng.random_range(0.0..6.3), rng.random_range(0.5..1.0))
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(3.0..9.0),
                rng.random_range(-1.5..1.5),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..width * height)
        .map(|i| {
            let (c, r) = ((i % width) as f64, (i / width) as f64);
            let mut v = 0.0;
            for &(kx, ky, phase, amp) in &waves {
                v += amp * (kx * c + ky * r + phase).sin();
            }
            for &(bx, by, s, amp) in &blobs {
                v += amp * (-((c - bx).powi(2) + (r - by).powi(2)) / (2.0 * s * s)).exp();
            }
            v
        })
        .collect();
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    Frame::new(width, height, raw.into_iter().map(|v| lo + (hi - lo) * (v - min) / span).collect())
        .expect("field has a valid shape")
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseComponent {
    pub weight: f64,
    pub variance: f64,
}

/// A square moving with constant velocity and bouncing off the borders.
/// Inside it the residual is `±(offset + spread·u)`, `u ~ U(0, 1)`, signed
/// toward mid-gray (darker on bright background, brighter on dark), so its
/// second moment is `offset² + offset·spread + spread²/3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovingSquare {
    pub size: usize,
    pub offset: f64,
    pub spread: f64,
    pub velocity: (f64, f64),
    /// First frame showing the square.
    pub appears_at: usize,
}

impl MovingSquare {
    pub fn second_moment(&self) -> f64 {
        self.offset * self.offset + self.offset * self.spread + self.spread * self.spread / 3.0
    }
}

/// Multiplies the background in columns `0..columns` by `factor` from frame
/// `at` on, like a light switched on over part of the scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlluminationJump {
    pub at: usize,
    pub factor: f64,
    pub columns: usize,
}

#[derive(Clone, Debug)]
pub struct StreamSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub rank: usize,
    /// Dense noise outside the square; weights are relative.
    pub noise: Vec<NoiseComponent>,
    pub square: Option<MovingSquare>,
    /// Standard deviation of the non-mean coefficients.
    pub coefficient_spread: f64,
    pub illumination_jump: Option<IlluminationJump>,
    pub seed: u64,
}

impl StreamSpec {
    /// 64×64 rank-3 stream with two dense noise components (σ² = 1e-4 and
    /// 1e-3) and a 14×14 moving square (about 5% of the pixels) whose
    /// residual magnitude lies in [0.25, 0.3].
    pub fn standard(frames: usize, seed: u64) -> Self {
        StreamSpec {
            width: 64,
            height: 64,
            frames,
            rank: 3,
            noise: vec![
                NoiseComponent { weight: 0.74, variance: 1e-4 },
                NoiseComponent { weight: 0.26, variance: 1e-3 },
            ],
            square: Some(MovingSquare {
                size: 14,
                offset: 0.25,
                spread: 0.05,
                velocity: (1.3, 0.9),
                appears_at: 0,
            }),
            coefficient_spread: 0.3,
            illumination_jump: None,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticStream {
    pub width: usize,
    pub height: usize,
    pub rank: usize,
    /// True background basis, row-major `d × rank`.
    pub basis: Vec<f64>,
    pub frames: Vec<Frame>,
    pub backgrounds: Vec<Frame>,
    /// Square support per frame (empty without a square).
    pub truth: Vec<Mask>,
}

fn square_origin(sq: &MovingSquare, t: usize, width: usize, height: usize) -> (usize, usize) {
    let bounce = |pos: f64, span: f64| {
        if span <= 0.0 {
            return 0.0;
        }
        let p = pos.rem_euclid(2.0 * span);
        if p > span {
            2.0 * span - p
        } else {
            p
        }
    };
    let sx = (width - sq.size) as f64;
    let sy = (height - sq.size) as f64;
    let x = bounce(5.0 + sq.velocity.0 * t as f64, sx);
    let y = bounce(9.0 + sq.velocity.1 * t as f64, sy);
    (x.round() as usize, y.round() as usize)
}

pub fn generate_stream(spec: &StreamSpec) -> SyntheticStream {
    let (w, h, r) = (spec.width, spec.height, spec.rank);
    let d = w * h;
    let mut basis = vec![0.0; d * r];
    for c in 0..r {
        let (lo, hi) = if c == 0 { (0.2, 0.8) } else { (-0.25, 0.25) };
        let field = smooth_field(w, h, lo, hi, spec.seed.wrapping_mul(31).wrapping_add(c as u64));
        for i in 0..d {
            basis[i * r + c] = field.values()[i];
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let total: f64 = spec.noise.iter().map(|n| n.weight).sum();
    let cumulative: Vec<f64> = spec
        .noise
        .iter()
        .scan(0.0, |acc, n| {
            *acc += n.weight / total;
            Some(*acc)
        })
        .collect();
    let spread = Normal::new(0.0, spec.coefficient_spread.max(0.0)).unwrap();

    let mut frames = Vec::with_capacity(spec.frames);
    let mut backgrounds = Vec::with_capacity(spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut v: Vec<f64> = (0..r).map(|_| spread.sample(&mut rng)).collect();
        v[0] = 1.0 + 0.05 * std_normal(&mut rng);
        let bg: Vec<f64> = (0..d)
            .map(|i| {
                let gain = match spec.illumination_jump {
                    Some(j) if t >= j.at && i % w < j.columns => j.factor,
                    _ => 1.0,
                };
                gain * (0..r).map(|c| basis[i * r + c] * v[c]).sum::<f64>()
            })
            .collect();
        let mut mask = Mask::empty(w, h);
        if let Some(sq) = spec.square.as_ref().filter(|sq| t >= sq.appears_at) {
            let (x0, y0) = square_origin(sq, t, w, h);
            for row in y0..y0 + sq.size {
                for col in x0..x0 + sq.size {
                    mask.set(row * w + col, true);
                }
            }
        }
        let values: Vec<f64> = (0..d)
            .map(|i| {
                let e = if mask.bits()[i] {
                    let sq = spec.square.as_ref().unwrap();
                    let mag = sq.offset + sq.spread * rng.random::<f64>();
                    if bg[i] > 0.5 {
                        -mag
                    } else {
                        mag
                    }
                } else {
                    let u: f64 = rng.random();
                    let k = cumulative.iter().position(|&c| u < c).unwrap_or(spec.noise.len() - 1);
                    spec.noise[k].variance.sqrt() * std_normal(&mut rng)
                };
                bg[i] + e
            })
            .collect();
        frames.push(Frame::new(w, h, values).expect("valid frame"));
        backgrounds.push(Frame::new(w, h, bg).expect("valid frame"));
        truth.push(mask);
    }
    SyntheticStream {
        width: w,
        height: h,
        rank: r,
        basis,
        frames,
        backgrounds,
        truth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_range_and_determinism() {
        let a = smooth_field(20, 10, 0.1, 0.9, 4);
        let min = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((min - 0.1).abs() < 1e-12 && (max - 0.9).abs() < 1e-12);
        assert_eq!(a, smooth_field(20, 10, 0.1, 0.9, 4));
    }

    #[test]
    fn standard_stream_shape() {
        let s = generate_stream(&StreamSpec::standard(30, 1));
        assert_eq!(s.frames.len(), 30);
        let frac = s.truth[0].count() as f64 / 4096.0;
        assert!((frac - 0.048).abs() < 0.001);
        // the square moves
        assert_ne!(s.truth[0], s.truth[10]);
        let e: Vec<f64> = s.frames[3].values().iter().zip(s.backgrounds[3].values()).map(|(x, b)| x - b).collect();
        for (i, &inside) in s.truth[3].bits().iter().enumerate() {
            if inside {
                assert!(e[i].abs() >= 0.25 && e[i].abs() <= 0.3);
            }
        }
    }
}
