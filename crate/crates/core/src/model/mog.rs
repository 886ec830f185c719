use std::f64::consts::PI;

use super::MogState;
use crate::error::{check_len, Result};
use crate::linalg::pairwise_sum;

/// Posterior assignment probabilities, row-major `n × K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    k: usize,
    gamma: Vec<f64>,
}

impl Responsibilities {
    pub fn components(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.gamma.len() / self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    /// Column sums `N̄_k`.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.rows();
        let mut col = vec![0.0; n];
        (0..self.k)
            .map(|k| {
                for i in 0..n {
                    col[i] = self.gamma[i * self.k + k];
                }
                pairwise_sum(&col)
            })
            .collect()
    }

    /// Index of the most responsible component at row `i` (first on ties).
    pub fn argmax(&self, i: usize) -> usize {
        let row = self.row(i);
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        best
    }
}

#[inline]
fn log_component_terms(mog: &MogState) -> Vec<(f64, f64)> {
    // (ln π_k - ½ ln(2π σ_k²), 1 / (2σ_k²))
    mog.weights
        .iter()
        .zip(&mog.variances)
        .map(|(&w, &v)| (w.ln() - 0.5 * (2.0 * PI * v).ln(), 0.5 / v))
        .collect()
}

/// E-step over residuals `e_i = x_i - u_iᵀv`, evaluated in log space.
///
/// Returns the responsibilities and the negative log-likelihood
/// `-Σ_i ln Σ_k π_k N(e_i | 0, σ_k²)` as a by-product. A pixel where every
/// component underflows gets uniform responsibilities and contributes
/// nothing to the likelihood sum.
pub fn responsibilities_and_nll(residuals: &[f64], mog: &MogState) -> (Responsibilities, f64) {
    let k = mog.components();
    let terms = log_component_terms(mog);
    let mut gamma = vec![0.0; residuals.len() * k];
    let mut ll = vec![0.0; residuals.len()];
    let mut logp = vec![0.0; k];
    for (i, &e) in residuals.iter().enumerate() {
        let e2 = e * e;
        let mut max = f64::NEG_INFINITY;
        for (lp, &(c, h)) in logp.iter_mut().zip(&terms) {
            *lp = c - h * e2;
            if *lp > max {
                max = *lp;
            }
        }
        let row = &mut gamma[i * k..(i + 1) * k];
        if !max.is_finite() {
            row.fill(1.0 / k as f64);
            continue;
        }
        let mut sum = 0.0;
        for (g, &lp) in row.iter_mut().zip(&logp) {
            *g = (lp - max).exp();
            sum += *g;
        }
        for g in row.iter_mut() {
            *g /= sum;
        }
        ll[i] = max + sum.ln();
    }
    (Responsibilities { k, gamma }, -pairwise_sum(&ll))
}

pub fn compute_responsibilities(residuals: &[f64], mog: &MogState) -> Responsibilities {
    responsibilities_and_nll(residuals, mog).0
}

/// Online M-step for the mixture.
///
/// Prior counts are `N_k^{t-1} = n_prior π_k^{t-1}`. Weights and variances
/// move from the previous values toward the current-frame statistics by the
/// fraction `N̄ / N` (resp. `N̄_k / N_k`); a component with no current mass
/// keeps its variance. Returned counts are `N_k^{t-1} + N̄_k`.
pub fn update_mog(
    resp: &Responsibilities,
    residuals: &[f64],
    prev: &MogState,
    n_prior: f64,
    variance_floor: f64,
) -> Result<MogState> {
    check_len("responsibility rows", residuals.len(), resp.rows())?;
    check_len("mixture components", prev.components(), resp.components())?;
    let k = prev.components();
    let n_obs = residuals.len() as f64;
    let n_bar_k = resp.column_sums();

    let mut weighted = vec![0.0; residuals.len()];
    let mut weights = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    let mut counts = Vec::with_capacity(k);
    let n_total = n_prior + n_obs;
    for c in 0..k {
        let prior_k = n_prior * prev.weights[c];
        let nk = prior_k + n_bar_k[c];

        let pi_bar = if n_obs > 0.0 { n_bar_k[c] / n_obs } else { prev.weights[c] };
        let pi = if n_total > 0.0 {
            prev.weights[c] - (n_obs / n_total) * (prev.weights[c] - pi_bar)
        } else {
            prev.weights[c]
        };

        let var = if n_bar_k[c] > 0.0 && nk > 0.0 {
            for (i, (&e, w)) in residuals.iter().zip(weighted.iter_mut()).enumerate() {
                *w = resp.gamma[i * k + c] * e * e;
            }
            let sigma_bar = pairwise_sum(&weighted) / n_bar_k[c];
            let v = prev.variances[c] - (n_bar_k[c] / nk) * (prev.variances[c] - sigma_bar);
            assert!(v >= 0.0 || (v.abs() < 1e-300), "variance update left the convex hull: {v}");
            v.max(variance_floor)
        } else {
            prev.variances[c]
        };
        weights.push(pi.max(0.0));
        variances.push(var);
        counts.push(nk);
    }
    let s: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= s;
    }
    Ok(MogState {
        weights,
        variances,
        counts,
    })
}

/// `w_i = sqrt(Σ_k γ_ik / (2σ_k²))`.
pub fn compute_weights(resp: &Responsibilities, mog: &MogState) -> Vec<f64> {
    squared_weights(resp, mog).into_iter().map(f64::sqrt).collect()
}

/// `w_i²`, the form the least-squares solves consume.
pub fn squared_weights(resp: &Responsibilities, mog: &MogState) -> Vec<f64> {
    let inv: Vec<f64> = mog.variances.iter().map(|v| 0.5 / v).collect();
    (0..resp.rows())
        .map(|i| resp.row(i).iter().zip(&inv).map(|(g, h)| g * h).sum())
        .collect()
}

/// `n_prior · KL(p(x,z | Π_a, Σ_a) ‖ p(x,z | Π_b, Σ_b))` for zero-mean
/// mixtures, using `0 ln 0 = 0`.
pub fn kl_regularizer(a: &MogState, b: &MogState, n_prior: f64) -> f64 {
    let mut kl = 0.0;
    for c in 0..a.components() {
        let pa = a.weights[c];
        if pa == 0.0 {
            continue;
        }
        let ratio = a.variances[c] / b.variances[c];
        let gauss = 0.5 * (ratio - 1.0 - ratio.ln());
        kl += pa * ((pa / b.weights[c]).ln() + gauss);
    }
    n_prior * kl
}
