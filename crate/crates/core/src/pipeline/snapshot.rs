//! Binary model snapshots.
//!
//! Layout (little-endian): magic `OMOG`, `u32` version, the configuration,
//! `u32` width, `u32` height, `u64` frame counter, `u64` seed, then the
//! mixture weights, variances and counts (`K` × `f64` each), the basis
//! (`d·r`), the `A_i` (`d·r·r`) and the `b_i` (`d·r`), all row-major `f64`.

use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::model::{MogState, Model, OnlineConfig, PriorPolicy, Subspace};

pub const MAGIC: &[u8; 4] = b"OMOG";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("not a model snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {found} (expected {VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("snapshot is truncated")]
    Truncated,
    #[error("snapshot is corrupt: {0}")]
    Corrupt(String),
}

/// Model state plus the stream position and base seed needed to resume.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSnapshot {
    pub model: Model,
    /// Number of stream frames processed since the warm start.
    pub frame_counter: u64,
    pub seed: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&u32::try_from(v).expect("field fits in u32").to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], SnapshotError> {
        let end = self.pos.checked_add(n).ok_or(SnapshotError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(SnapshotError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> std::result::Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> std::result::Result<usize, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> std::result::Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> std::result::Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, SnapshotError> {
        let bytes = self.take(n.checked_mul(8).ok_or(SnapshotError::Truncated)?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn encode_snapshot(s: &ModelSnapshot) -> Vec<u8> {
    let m = &s.model;
    let c = &m.config;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    w.u32(c.rank);
    w.u32(c.mog_components);
    w.u32(c.window_frames);
    w.f64s(&[c.rho, c.inner_tol]);
    w.u32(c.inner_max_iters);
    w.f64s(&[c.variance_floor]);
    w.u8(match c.prior_policy {
        PriorPolicy::FixedWindow => 0,
        PriorPolicy::Accumulate => 1,
    });
    w.u32(m.width);
    w.u32(m.height);
    w.u64(s.frame_counter);
    w.u64(s.seed);
    w.f64s(&m.mog.weights);
    w.f64s(&m.mog.variances);
    w.f64s(&m.mog.counts);
    w.f64s(m.subspace.basis());
    w.f64s(m.subspace.carriers_a());
    w.f64s(m.subspace.carriers_b());
    w.0
}

pub fn decode_snapshot(bytes: &[u8]) -> std::result::Result<ModelSnapshot, SnapshotError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.u32()? as u32;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion { found: version });
    }
    let rank = r.u32()?;
    let mog_components = r.u32()?;
    let window_frames = r.u32()?;
    let rho = r.f64()?;
    let inner_tol = r.f64()?;
    let inner_max_iters = r.u32()?;
    let variance_floor = r.f64()?;
    let prior_policy = match r.u8()? {
        0 => PriorPolicy::FixedWindow,
        1 => PriorPolicy::Accumulate,
        other => return Err(SnapshotError::Corrupt(format!("unknown prior policy tag {other}"))),
    };
    let config = OnlineConfig {
        rank,
        mog_components,
        window_frames,
        rho,
        inner_tol,
        inner_max_iters,
        variance_floor,
        prior_policy,
    };
    let width = r.u32()?;
    let height = r.u32()?;
    let frame_counter = r.u64()?;
    let seed = r.u64()?;
    let d = width.checked_mul(height).ok_or(SnapshotError::Truncated)?;
    let k = mog_components;

    // Reject absurd sizes before allocating.
    let needed = (3 * k)
        .checked_add(d.checked_mul(rank).and_then(|dr| dr.checked_mul(rank + 2)).ok_or(SnapshotError::Truncated)?)
        .and_then(|n| n.checked_mul(8))
        .ok_or(SnapshotError::Truncated)?;
    if bytes.len() - r.pos < needed {
        return Err(SnapshotError::Truncated);
    }

    let weights = r.f64s(k)?;
    let variances = r.f64s(k)?;
    let counts = r.f64s(k)?;
    let basis = r.f64s(d * rank)?;
    let carriers_a = r.f64s(d * rank * rank)?;
    let carriers_b = r.f64s(d * rank)?;
    if r.pos != bytes.len() {
        return Err(SnapshotError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    let corrupt = |e: Error| SnapshotError::Corrupt(e.to_string());
    let model = Model {
        config,
        mog: MogState::new(weights, variances, counts).map_err(corrupt)?,
        subspace: Subspace::new(d, rank, basis, carriers_a, carriers_b).map_err(corrupt)?,
        width,
        height,
    };
    model.check().map_err(corrupt)?;
    Ok(ModelSnapshot {
        model,
        frame_counter,
        seed,
    })
}

pub fn save_snapshot(snapshot: &ModelSnapshot, path: &Path) -> Result<()> {
    std::fs::write(path, encode_snapshot(snapshot)).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<ModelSnapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_snapshot(&bytes)?)
}
