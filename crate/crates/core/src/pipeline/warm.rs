use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::snapshot::ModelSnapshot;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{weighted_least_squares, RIDGE_REL};
use crate::model::{
    batch_squared_weights, compute_responsibilities, fit_batch_mog, init_carriers, squared_weights, update_mog, MogState, Model,
    OnlineConfig, PriorPolicy,
};

/// Regularizer added to each carrier before inversion.
pub const CARRIER_DELTA: f64 = 1e-6;
const EM_RESTARTS: usize = 3;
const REFINE_ITERS: usize = 10;

/// Batch residual statistics reported by the warm start.
#[derive(Clone, Debug)]
pub struct WarmStartStats {
    pub frames: usize,
    pub residual_mean_abs: f64,
    pub residual_rms: f64,
    /// Mean per-residual log-likelihood of the fitted mixture.
    pub mean_log_likelihood: f64,
}

/// Initial model from a batch of frames.
///
/// The basis starts as the batch mean followed by the top `r - 1` principal
/// directions of the centered batch, each scaled by its singular value over
/// `√n`. Every frame gets least-squares coefficients and a mixture is fitted
/// to the pooled residuals by batch EM. A few rounds of mixture-weighted
/// alternating least squares then refine basis, coefficients and mixture,
/// and the row carriers are built from the batch so that `u_i = A_i b_i`
/// holds from the start.
pub fn warm_start(frames: &[Frame], cfg: &OnlineConfig, seed: u64) -> Result<ModelSnapshot> {
    warm_start_with_stats(frames, cfg, seed).map(|(s, _)| s)
}

pub fn warm_start_with_stats(frames: &[Frame], cfg: &OnlineConfig, seed: u64) -> Result<(ModelSnapshot, WarmStartStats)> {
    cfg.validate()?;
    let r = cfg.rank;
    let n = frames.len();
    if n < r + 1 {
        return Err(Error::BatchTooSmall { needed: r + 1, found: n });
    }
    let (w, h) = frames[0].shape();
    for (index, f) in frames.iter().enumerate() {
        if f.shape() != (w, h) {
            return Err(Error::FrameSizeMismatch {
                index,
                expected: (w, h),
                found: f.shape(),
            });
        }
    }
    let d = w * h;
    if r >= d {
        return Err(Error::InvalidConfig(format!("rank {r} must be below the pixel count {d}")));
    }

    let mut mean = vec![0.0; d];
    for f in frames {
        for (m, x) in mean.iter_mut().zip(f.values()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();

    // Columns of the basis, each of length d.
    let mut columns: Vec<Vec<f64>> = vec![mean.clone()];
    if r > 1 {
        let centered: Vec<Vec<f64>> = frames
            .iter()
            .map(|f| f.values().iter().zip(&mean).map(|(x, m)| x - m).collect())
            .collect();
        let gram = DMatrix::from_fn(n, n, |a, b| {
            centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum::<f64>()
        });
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &j in order.iter().take(r - 1) {
            let lambda = eig.eigenvalues[j];
            if lambda > 1e-12 * top.max(f64::MIN_POSITIVE) && lambda > 0.0 {
                // X_c e_j = s_j u_j, so u_j s_j / √n = X_c e_j / √n.
                let e = eig.eigenvectors.column(j);
                let mut col = vec![0.0; d];
                for (a, c) in centered.iter().enumerate() {
                    for (o, x) in col.iter_mut().zip(c) {
                        *o += e[a] * x;
                    }
                }
                col.iter_mut().for_each(|v| *v /= (n as f64).sqrt());
                columns.push(col);
            } else {
                // The batch has fewer independent directions than requested.
                warn!("warm-start batch is rank deficient; padding the basis with a small random direction");
                let scale = 1e-3 * mean_norm.max(1e-3) / (d as f64).sqrt();
                columns.push((0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect());
            }
        }
    }
    let mut basis = vec![0.0; d * r];
    for (c, col) in columns.iter().enumerate() {
        for i in 0..d {
            basis[i * r + c] = col[i];
        }
    }

    let ones = vec![1.0; d];
    let mut coefficients = Vec::with_capacity(n * r);
    for f in frames {
        coefficients.extend(weighted_least_squares(&basis, r, &ones, f.values(), RIDGE_REL)?);
    }
    let mut residuals = batch_residuals(frames, &basis, &coefficients, r);
    let mut fit = fit_batch_mog(&residuals, cfg.mog_components, cfg.variance_floor, EM_RESTARTS, seed)?;

    // Robust refinement: alternate the mixture-weighted coefficient and row
    // solves with one mixture M-step, so foreground pixels stop steering the
    // basis.
    for _ in 0..REFINE_ITERS {
        let mog = MogState::from_weights(fit.weights.clone(), fit.variances.clone(), 1.0)?;
        let resp = compute_responsibilities(&residuals, &mog);
        let w2 = squared_weights(&resp, &mog);
        for (j, f) in frames.iter().enumerate() {
            let v = weighted_least_squares(&basis, r, &w2[j * d..(j + 1) * d], f.values(), RIDGE_REL)?;
            coefficients[j * r..(j + 1) * r].copy_from_slice(&v);
        }
        let mut row_w2 = vec![0.0; n];
        let mut row_x = vec![0.0; n];
        for i in 0..d {
            for (j, f) in frames.iter().enumerate() {
                row_w2[j] = w2[j * d + i];
                row_x[j] = f.values()[i];
            }
            let u = weighted_least_squares(&coefficients, r, &row_w2, &row_x, RIDGE_REL)?;
            basis[i * r..(i + 1) * r].copy_from_slice(&u);
        }
        residuals = batch_residuals(frames, &basis, &coefficients, r);
        let resp = compute_responsibilities(&residuals, &mog);
        let next = update_mog(&resp, &residuals, &mog, 0.0, cfg.variance_floor)?;
        fit.weights = next.weights;
        fit.variances = next.variances;
    }
    if REFINE_ITERS > 0 {
        fit = fit_batch_mog(&residuals, cfg.mog_components, cfg.variance_floor, EM_RESTARTS, seed)?;
    }

    let total = match cfg.prior_policy {
        PriorPolicy::FixedWindow => (cfg.window_frames * d) as f64,
        PriorPolicy::Accumulate => (n * d) as f64,
    };
    let mog = MogState::from_weights(fit.weights, fit.variances, total)?;
    let w2 = batch_squared_weights(&residuals, &mog);
    let subspace = init_carriers(basis, d, r, &coefficients, &w2, CARRIER_DELTA)?;

    let count = residuals.len() as f64;
    let stats = WarmStartStats {
        frames: n,
        residual_mean_abs: residuals.iter().map(|e| e.abs()).sum::<f64>() / count,
        residual_rms: (residuals.iter().map(|e| e * e).sum::<f64>() / count).sqrt(),
        mean_log_likelihood: fit.mean_log_likelihood,
    };
    let model = Model {
        config: cfg.clone(),
        mog,
        subspace,
        width: w,
        height: h,
    };
    model.check()?;
    Ok((
        ModelSnapshot {
            model,
            frame_counter: 0,
            seed,
        },
        stats,
    ))
}

/// `x - U v` for every frame, frame-major.
fn batch_residuals(frames: &[Frame], basis: &[f64], coefficients: &[f64], r: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames.len() * basis.len() / r);
    for (f, v) in frames.iter().zip(coefficients.chunks(r)) {
        for (i, x) in f.values().iter().enumerate() {
            out.push(x - basis[i * r..(i + 1) * r].iter().zip(v).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    out
}
