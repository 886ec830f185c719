//! Random pixel sub-sampling.
//!
//! A fresh index set is drawn every frame from `seed + frame_index`, so over
//! time every pixel gets updated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Strictly increasing pixel indices `Ω ⊆ {0, …, d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleIndexSet {
    indices: Vec<usize>,
    rate: f64,
}

impl SampleIndexSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Builds a set from explicit indices (sorted and de-duplicated).
    pub fn from_indices(dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.last().filter(|&&i| i >= dim) {
            return Err(Error::InvalidInput(format!("sample index {bad} out of range for {dim} pixels")));
        }
        let rate = indices.len() as f64 / dim as f64;
        Ok(SampleIndexSet { indices, rate })
    }
}

pub fn validate_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidConfig(format!("sub-sampling rate must lie in (0, 1], got {rate}")));
    }
    Ok(())
}

/// Number of indices drawn for `dim` pixels at `rate`.
pub fn sample_size(dim: usize, rate: f64) -> usize {
    if rate >= 1.0 {
        dim
    } else {
        ((rate * dim as f64).round() as usize).clamp(1, dim)
    }
}

/// Uniform sample without replacement, deterministic in `(dim, rate, seed)`.
pub fn draw_sample_set(dim: usize, rate: f64, seed: u64) -> Result<SampleIndexSet> {
    validate_rate(rate)?;
    if dim == 0 {
        return Err(Error::InvalidConfig("cannot sample from zero pixels".into()));
    }
    let m = sample_size(dim, rate);
    let indices = if m == dim {
        (0..dim).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = rand::seq::index::sample(&mut rng, dim, m).into_vec();
        v.sort_unstable();
        v
    };
    Ok(SampleIndexSet { indices, rate })
}

/// Seed for frame `frame_index` given the stream's base seed.
pub fn frame_seed(base: u64, frame_index: u64) -> u64 {
    base.wrapping_add(frame_index)
}
