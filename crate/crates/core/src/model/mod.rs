//! Probabilistic state and the online EM updates.
//!
//! The foreground is modelled per frame as a zero-mean mixture of Gaussians
//! over the residual `x - U v`; the background is a rank-`r` subspace `U`
//! whose rows carry recursive-least-squares state `(A_i, b_i)` with
//! `u_i = A_i b_i`.

mod init;
mod mog;
mod objective;
mod online;
mod subspace;

pub use init::{fit_batch_mog, init_carriers, BatchMogFit};
pub use mog::{
    compute_responsibilities, compute_weights, kl_regularizer, responsibilities_and_nll, squared_weights,
    update_mog, Responsibilities,
};
pub use objective::{negative_log_likelihood, objective, prior_regularizer, subspace_regularizer};
pub use online::{process_frame, run_inner_loop, FrameResult, InnerOutcome};
pub use subspace::{solve_coefficients, update_subspace_row, RowUpdate};

pub(crate) use init::batch_squared_weights;
pub(crate) use online::{commit_update, gather_rows, initial_coefficients};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the effective prior count `N^{t-1}` is chosen each frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorPolicy {
    /// `N^{t-1} = window_frames * N̄`: the previous `window_frames` frames
    /// dominate the prior and counts are rescaled after each frame.
    FixedWindow,
    /// `N^{t-1}` = all counts seen so far (`(t-1) d` for full frames).
    Accumulate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    pub rank: usize,
    pub mog_components: usize,
    pub window_frames: usize,
    pub rho: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub variance_floor: f64,
    pub prior_policy: PriorPolicy,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            rank: 3,
            mog_components: 3,
            window_frames: 50,
            rho: 0.98,
            inner_tol: 1e-6,
            inner_max_iters: 20,
            variance_floor: 1e-6,
            prior_policy: PriorPolicy::FixedWindow,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.rank < 1 {
            return bad("rank must be at least 1".into());
        }
        if self.mog_components < 1 {
            return bad("mog_components must be at least 1".into());
        }
        if self.window_frames < 1 {
            return bad("window_frames must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(self.inner_tol >= 0.0) {
            return bad(format!("inner_tol must be non-negative, got {}", self.inner_tol));
        }
        if self.inner_max_iters < 1 {
            return bad("inner_max_iters must be at least 1".into());
        }
        if !(self.variance_floor > 0.0) {
            return bad(format!(
                "variance_floor must be positive, got {}",
                self.variance_floor
            ));
        }
        Ok(())
    }

    /// Prior count for a frame with `n_obs` participating pixels.
    pub fn prior_count(&self, mog: &MogState, n_obs: usize) -> f64 {
        match self.prior_policy {
            PriorPolicy::FixedWindow => (self.window_frames * n_obs) as f64,
            PriorPolicy::Accumulate => mog.count_total(),
        }
    }
}

/// Mixture weights, variances and effective counts of the foreground noise.
///
/// Component order is never changed by the updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogState {
    pub weights: Vec<f64>,
    pub variances: Vec<f64>,
    pub counts: Vec<f64>,
}

impl MogState {
    pub fn new(weights: Vec<f64>, variances: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || variances.len() != k || counts.len() != k {
            return Err(Error::InvalidInput(
                "mixture vectors must be non-empty and of equal length".into(),
            ));
        }
        let s = MogState {
            weights,
            variances,
            counts,
        };
        s.check()?;
        Ok(s)
    }

    /// Weights `π`, variances `σ²`, counts `total * π`.
    pub fn from_weights(weights: Vec<f64>, variances: Vec<f64>, total: f64) -> Result<Self> {
        let counts = weights.iter().map(|w| w * total).collect();
        MogState::new(weights, variances, counts)
    }

    pub fn check(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "mixture weights must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        if self.variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("mixture variances must be positive".into()));
        }
        if self.counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("mixture counts must be non-negative".into()));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn count_total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Index of the largest-variance component (the foreground component).
    pub fn largest_variance(&self) -> usize {
        let mut best = 0;
        for k in 1..self.variances.len() {
            if self.variances[k] > self.variances[best] {
                best = k;
            }
        }
        best
    }

    /// Scales counts so they sum to `total`, keeping proportions.
    pub fn rescale_counts(&mut self, total: f64) {
        let current = self.count_total();
        if current > 0.0 {
            let s = total / current;
            for c in &mut self.counts {
                *c *= s;
            }
        } else {
            for (c, w) in self.counts.iter_mut().zip(&self.weights) {
                *c = w * total;
            }
        }
    }
}

/// Background subspace with per-row recursion carriers.
///
/// All matrices are row-major; row `i` of the basis is `u_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    pub(crate) dim: usize,
    pub(crate) rank: usize,
    pub(crate) basis: Vec<f64>,
    pub(crate) carriers_a: Vec<f64>,
    pub(crate) carriers_b: Vec<f64>,
}

impl Subspace {
    pub fn new(
        dim: usize,
        rank: usize,
        basis: Vec<f64>,
        carriers_a: Vec<f64>,
        carriers_b: Vec<f64>,
    ) -> Result<Self> {
        if rank == 0 || dim == 0 {
            return Err(Error::InvalidInput("subspace needs d >= 1 and r >= 1".into()));
        }
        crate::error::check_len("subspace basis", dim * rank, basis.len())?;
        crate::error::check_len("subspace carriers A", dim * rank * rank, carriers_a.len())?;
        crate::error::check_len("subspace carriers b", dim * rank, carriers_b.len())?;
        Ok(Subspace {
            dim,
            rank,
            basis,
            carriers_a,
            carriers_b,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn carriers_a(&self) -> &[f64] {
        &self.carriers_a
    }

    pub fn carriers_b(&self) -> &[f64] {
        &self.carriers_b
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.rank..(i + 1) * self.rank]
    }

    #[inline]
    pub fn a(&self, i: usize) -> &[f64] {
        let rr = self.rank * self.rank;
        &self.carriers_a[i * rr..(i + 1) * rr]
    }

    #[inline]
    pub fn b(&self, i: usize) -> &[f64] {
        &self.carriers_b[i * self.rank..(i + 1) * self.rank]
    }

    /// `U v` for every row.
    pub fn reconstruct(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// Largest relative violation of `u_i = A_i b_i` over all rows.
    pub fn recursion_residual(&self) -> f64 {
        let r = self.rank;
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            let a = self.a(i);
            let b = self.b(i);
            let u = self.row(i);
            let mut num = 0.0;
            let mut den = 0.0;
            for p in 0..r {
                let ab: f64 = (0..r).map(|q| a[p * r + q] * b[q]).sum();
                num += (ab - u[p]).powi(2);
                den += u[p] * u[p];
            }
            worst = worst.max(num.sqrt() / den.sqrt().max(1e-300));
        }
        worst
    }
}

/// A complete online model: configuration, noise state, background state and
/// the frame shape it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: OnlineConfig,
    pub mog: MogState,
    pub subspace: Subspace,
    pub width: usize,
    pub height: usize,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.width * self.height
    }

    pub fn check(&self) -> Result<()> {
        self.config.validate()?;
        self.mog.check()?;
        if self.mog.components() != self.config.mog_components {
            return Err(Error::InvalidInput(format!(
                "model has {} components but config requests {}",
                self.mog.components(),
                self.config.mog_components
            )));
        }
        if self.subspace.rank != self.config.rank {
            return Err(Error::InvalidInput(format!(
                "model has rank {} but config requests {}",
                self.subspace.rank, self.config.rank
            )));
        }
        crate::error::check_len("model pixels", self.dim(), self.subspace.dim)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
