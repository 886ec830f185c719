//! The per-frame MAP objective, used for diagnostics and tests.

use nalgebra::{DMatrix, DVector};

use super::mog::responsibilities_and_nll;
use super::{MogState, Subspace};
use crate::error::{check_len, Result};

pub fn negative_log_likelihood(residuals: &[f64], mog: &MogState) -> f64 {
    responsibilities_and_nll(residuals, mog).1
}

/// Conjugate-prior penalty on the mixture:
/// `Σ_k N_k' (σ'_k² / (2σ_k²) + ln σ_k) - N' Σ_k π'_k ln π_k` with
/// `N_k' = n_prior π'_k`.
pub fn prior_regularizer(mog: &MogState, prev: &MogState, n_prior: f64) -> f64 {
    let mut total = 0.0;
    for c in 0..mog.components() {
        let pk = prev.weights[c];
        if pk == 0.0 {
            continue;
        }
        let nk = n_prior * pk;
        total += nk * (0.5 * prev.variances[c] / mog.variances[c] + 0.5 * mog.variances[c].ln());
        total -= n_prior * pk * mog.weights[c].ln();
    }
    total
}

/// `ρ Σ_i (u_i - u_i')ᵀ (A_i')⁻¹ (u_i - u_i')` against the previous state.
pub fn subspace_regularizer(basis: &[f64], prev: &Subspace, rho: f64) -> Result<f64> {
    check_len("regularizer basis", prev.basis.len(), basis.len())?;
    let r = prev.rank;
    let mut total = 0.0;
    for i in 0..prev.dim {
        let diff = DVector::from_iterator(r, (0..r).map(|p| basis[i * r + p] - prev.basis[i * r + p]));
        if diff.iter().all(|&d| d == 0.0) {
            continue;
        }
        let a = DMatrix::from_row_slice(r, r, prev.a(i));
        let sol = a
            .cholesky()
            .map(|c| c.solve(&diff))
            .ok_or_else(|| crate::error::Error::DegenerateSubspace(format!("carrier {i} is not SPD")))?;
        total += diff.dot(&sol);
    }
    Ok(rho * total)
}

/// Full objective: negative log-likelihood of the residuals plus the
/// mixture prior plus the subspace prior.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    residuals: &[f64],
    mog: &MogState,
    prev_mog: &MogState,
    n_prior: f64,
    basis: &[f64],
    prev_subspace: &Subspace,
    rho: f64,
) -> Result<f64> {
    Ok(negative_log_likelihood(residuals, mog)
        + prior_regularizer(mog, prev_mog, n_prior)
        + subspace_regularizer(basis, prev_subspace, rho)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kl_regularizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subspace_regularizer_vanishes_at_previous_basis() {
        let s = Subspace::new(2, 1, vec![0.3, 0.4], vec![2.0, 0.5], vec![0.15, 0.8]).unwrap();
        assert_eq!(subspace_regularizer(&s.basis.clone(), &s, 0.98).unwrap(), 0.0);
        let moved = subspace_regularizer(&[0.5, 0.4], &s, 1.0).unwrap();
        assert!((moved - 0.04 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn prior_penalty_minus_kl_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let prev = MogState::from_weights(vec![0.6, 0.3, 0.1], vec![1e-3, 1e-2, 1e-1], 5000.0).unwrap();
        let n = prev.count_total();
        let mut reference = None;
        for _ in 0..100 {
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let w = raw.iter().map(|x| x / s).collect();
            let v = (0..3).map(|_| 10f64.powf(rng.random_range(-4.0..0.0))).collect();
            let cur = MogState::from_weights(w, v, 1.0).unwrap();
            let diff = prior_regularizer(&cur, &prev, n) - kl_regularizer(&prev, &cur, n);
            let c = *reference.get_or_insert(diff);
            assert!((diff - c).abs() < 1e-8 * c.abs().max(1.0), "{diff} vs {c}");
        }
    }
}
