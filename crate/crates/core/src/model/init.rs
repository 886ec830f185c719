//! Batch fits used to initialize the online state.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mog::{responsibilities_and_nll, Responsibilities};
use super::{MogState, Subspace};
use crate::error::{check_len, Error, Result};

/// Pooled residual sets larger than this are thinned by uniform striding.
const MAX_EM_SAMPLES: usize = 200_000;
const EM_MAX_ITERS: usize = 300;
const EM_ATTEMPTS: usize = 3;

#[derive(Clone, Debug)]
pub struct BatchMogFit {
    pub weights: Vec<f64>,
    pub variances: Vec<f64>,
    /// Mean log-likelihood per residual at the optimum.
    pub mean_log_likelihood: f64,
}

fn em_once(e: &[f64], mut weights: Vec<f64>, mut variances: Vec<f64>, floor: f64) -> Option<BatchMogFit> {
    let k = weights.len();
    let n = e.len() as f64;
    let mut prev = f64::INFINITY;
    let mut nll = f64::INFINITY;
    for _ in 0..EM_MAX_ITERS {
        let mog = MogState {
            weights: weights.clone(),
            variances: variances.clone(),
            counts: vec![0.0; k],
        };
        let (resp, cur) = responsibilities_and_nll(e, &mog);
        if !cur.is_finite() {
            return None;
        }
        nll = cur;
        let nk = resp.column_sums();
        for c in 0..k {
            weights[c] = nk[c] / n;
            if nk[c] > 0.0 {
                let s: f64 = (0..e.len()).map(|i| resp.row(i)[c] * e[i] * e[i]).sum();
                variances[c] = (s / nk[c]).max(floor);
            }
        }
        if (prev - cur).abs() <= 1e-10 * cur.abs().max(1.0) {
            break;
        }
        prev = cur;
    }
    if weights.iter().chain(&variances).any(|v| !v.is_finite()) {
        return None;
    }
    Some(BatchMogFit {
        weights,
        variances,
        mean_log_likelihood: -nll / n,
    })
}

/// Zero-mean mixture fit to pooled residuals by batch EM.
///
/// The first start spreads the variances log-uniformly around the residual
/// mean square; further restarts are random. The best fit by likelihood is
/// kept and its components are ordered by increasing variance.
pub fn fit_batch_mog(residuals: &[f64], k: usize, floor: f64, restarts: usize, seed: u64) -> Result<BatchMogFit> {
    if residuals.is_empty() || k == 0 {
        return Err(Error::InvalidInput("batch EM needs residuals and at least one component".into()));
    }
    let stride = residuals.len().div_ceil(MAX_EM_SAMPLES);
    let e: Vec<f64> = residuals.iter().step_by(stride).copied().collect();
    let ms = (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).max(floor);

    let mut last_reason = String::new();
    for attempt in 0..EM_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut best: Option<BatchMogFit> = None;
        for start in 0..restarts.max(1) {
            let (w, v): (Vec<f64>, Vec<f64>) = if start == 0 && attempt == 0 {
                let v = (0..k)
                    .map(|c| {
                        let t = if k == 1 { 0.0 } else { c as f64 / (k - 1) as f64 * 2.0 - 1.0 };
                        (ms * 10f64.powf(t)).max(floor)
                    })
                    .collect();
                (vec![1.0 / k as f64; k], v)
            } else {
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let w = raw.iter().map(|x| x / s).collect();
                let v = (0..k).map(|_| (ms * 10f64.powf(rng.random_range(-2.0..1.0))).max(floor)).collect();
                (w, v)
            };
            match em_once(&e, w, v, floor) {
                Some(fit) => {
                    if best.as_ref().is_none_or(|b| fit.mean_log_likelihood > b.mean_log_likelihood) {
                        best = Some(fit);
                    }
                }
                None => last_reason = "non-finite likelihood".into(),
            }
        }
        if let Some(mut fit) = best {
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| fit.variances[a].partial_cmp(&fit.variances[b]).unwrap());
            fit.weights = order.iter().map(|&c| fit.weights[c]).collect();
            fit.variances = order.iter().map(|&c| fit.variances[c]).collect();
            let s: f64 = fit.weights.iter().sum();
            fit.weights.iter_mut().for_each(|w| *w /= s);
            return Ok(fit);
        }
    }
    Err(Error::EmFailure {
        attempts: EM_ATTEMPTS,
        reason: last_reason,
    })
}

/// Builds the recursion carriers for a batch.
///
/// For each row `A_i = (Σ_j w_ij² v_j v_jᵀ + δI)⁻¹` and `b_i = A_i⁻¹ u_i`,
/// so `u_i = A_i b_i` holds from the start. `coefficients` is row-major
/// `n × r` (one `v_j` per frame), `w2` row-major `n × d`.
pub fn init_carriers(basis: Vec<f64>, dim: usize, rank: usize, coefficients: &[f64], w2: &[f64], delta: f64) -> Result<Subspace> {
    check_len("carrier basis", dim * rank, basis.len())?;
    let n = coefficients.len() / rank;
    check_len("carrier coefficients", n * rank, coefficients.len())?;
    check_len("carrier weights", n * dim, w2.len())?;

    let rr = rank * rank;
    let mut outer = vec![0.0; n * rr];
    for j in 0..n {
        let v = &coefficients[j * rank..(j + 1) * rank];
        for p in 0..rank {
            for q in 0..rank {
                outer[j * rr + p * rank + q] = v[p] * v[q];
            }
        }
    }

    let mut carriers_a = vec![0.0; dim * rr];
    let mut carriers_b = vec![0.0; dim * rank];
    let mut m = vec![0.0; rr];
    for i in 0..dim {
        m.fill(0.0);
        for p in 0..rank {
            m[p * rank + p] = delta;
        }
        for j in 0..n {
            let w = w2[j * dim + i];
            if w != 0.0 {
                for (mm, o) in m.iter_mut().zip(&outer[j * rr..(j + 1) * rr]) {
                    *mm += w * o;
                }
            }
        }
        let mat = DMatrix::from_row_slice(rank, rank, &m);
        let inv = mat
            .cholesky()
            .ok_or_else(|| Error::DegenerateSubspace(format!("carrier {i} is not positive definite")))?
            .inverse();
        let u = &basis[i * rank..(i + 1) * rank];
        for p in 0..rank {
            for q in 0..rank {
                // nalgebra stores column-major; the inverse is symmetric.
                carriers_a[i * rr + p * rank + q] = 0.5 * (inv[(p, q)] + inv[(q, p)]);
            }
            carriers_b[i * rank + p] = (0..rank).map(|q| m[p * rank + q] * u[q]).sum();
        }
    }
    Subspace::new(dim, rank, basis, carriers_a, carriers_b)
}

/// Squared weights for every pixel of every batch frame, row-major `n × d`.
pub(crate) fn batch_squared_weights(residuals: &[f64], mog: &MogState) -> Vec<f64> {
    let resp: Responsibilities = responsibilities_and_nll(residuals, mog).0;
    super::mog::squared_weights(&resp, mog)
}
