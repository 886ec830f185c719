use super::mog::{responsibilities_and_nll, squared_weights, update_mog, Responsibilities};
use super::objective::prior_regularizer;
use super::subspace::update_row_in_place;
use super::{dot, MogState, Model, OnlineConfig, PriorPolicy};
use crate::error::{check_len, Error, Result};
use crate::frame::Frame;
use crate::linalg::{weighted_least_squares, RIDGE_REL};
use crate::sampling::SampleIndexSet;

/// Output of the alternating E/M loop for one linearized design.
#[derive(Clone, Debug)]
pub struct InnerOutcome {
    /// Solution of the weighted least-squares step (`v`, or `(v, Δτ)`).
    pub coefficients: Vec<f64>,
    pub mog: MogState,
    /// Responsibilities evaluated at the final parameters.
    pub responsibilities: Responsibilities,
    /// `target - design · coefficients`.
    pub residuals: Vec<f64>,
    /// Squared weights `w_i²` from the final responsibilities and mixture.
    pub squared_weights: Vec<f64>,
    /// Objective (negative log-likelihood + mixture prior) before the first
    /// iteration and after each one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let num: f64 = new.iter().zip(old).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = old.iter().map(|b| b * b).sum();
    num.sqrt() / den.sqrt().max(1e-12)
}

fn residuals_of(design: &[f64], p: usize, target: &[f64], z: &[f64]) -> Vec<f64> {
    target
        .iter()
        .enumerate()
        .map(|(i, &y)| y - dot(&design[i * p..(i + 1) * p], z))
        .collect()
}

/// Alternates E-step, mixture M-step and weighted least squares on a fixed
/// design matrix (row-major `n × p`) until the relative change of both the
/// coefficients and the variances drops below `cfg.inner_tol`, or
/// `cfg.inner_max_iters` iterations have run.
///
/// `prior` is the previous frame's mixture; every M-step is regularized
/// toward it with weight `n_prior`.
pub fn run_inner_loop(
    design: &[f64],
    p: usize,
    target: &[f64],
    prior: &MogState,
    n_prior: f64,
    cfg: &OnlineConfig,
    initial: &[f64],
) -> Result<InnerOutcome> {
    check_len("inner loop design", target.len() * p, design.len())?;
    check_len("inner loop coefficients", p, initial.len())?;

    let mut z = initial.to_vec();
    let mut mog = prior.clone();
    let mut residuals = residuals_of(design, p, target, &z);
    let (mut resp, nll) = responsibilities_and_nll(&residuals, &mog);
    let mut trace = vec![nll + prior_regularizer(&mog, prior, n_prior)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.inner_max_iters {
        iterations += 1;
        let mog_new = update_mog(&resp, &residuals, prior, n_prior, cfg.variance_floor)?;
        let w2 = squared_weights(&resp, &mog_new);
        let z_new = weighted_least_squares(design, p, &w2, target, RIDGE_REL)?;
        residuals = residuals_of(design, p, target, &z_new);
        let (resp_new, nll) = responsibilities_and_nll(&residuals, &mog_new);
        trace.push(nll + prior_regularizer(&mog_new, prior, n_prior));

        let change = relative_change(&z_new, &z).max(relative_change(&mog_new.variances, &mog.variances));
        z = z_new;
        mog = mog_new;
        resp = resp_new;
        if change < cfg.inner_tol {
            converged = true;
            break;
        }
    }

    let w2 = squared_weights(&resp, &mog);
    Ok(InnerOutcome {
        coefficients: z,
        mog,
        responsibilities: resp,
        residuals,
        squared_weights: w2,
        trace,
        iterations,
        converged,
    })
}

/// Per-frame output of the online update.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub coefficients: Vec<f64>,
    /// Responsibilities on the participating pixels (all pixels unless a
    /// sample set was used; see `participating`).
    pub responsibilities: Responsibilities,
    /// Pixel indices that took part in the update, when sub-sampled.
    pub participating: Option<Vec<usize>>,
    pub mog: MogState,
    /// `U v` with the basis the coefficients were fitted against.
    pub background: Vec<f64>,
    /// `x - U v` over every pixel.
    pub residual: Vec<f64>,
    pub trace: Vec<f64>,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Gathers rows `indices` of a row-major matrix with `cols` columns.
pub(crate) fn gather_rows(m: &[f64], cols: usize, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * cols);
    for &i in indices {
        out.extend_from_slice(&m[i * cols..(i + 1) * cols]);
    }
    out
}

pub(crate) fn participating_indices(dim: usize, sample: Option<&SampleIndexSet>) -> Result<Vec<usize>> {
    match sample {
        None => Ok((0..dim).collect()),
        Some(s) => {
            if s.is_empty() {
                return Err(Error::EmptySampleSet);
            }
            if let Some(&bad) = s.indices().iter().find(|&&i| i >= dim) {
                return Err(Error::InvalidInput(format!(
                    "sample index {bad} out of range for {dim} pixels"
                )));
            }
            Ok(s.indices().to_vec())
        }
    }
}

/// Ordinary least-squares start for `v`.
pub(crate) fn initial_coefficients(design: &[f64], p: usize, target: &[f64]) -> Result<Vec<f64>> {
    weighted_least_squares(design, p, &vec![1.0; target.len()], target, RIDGE_REL)
}

/// Finishes a frame: rescales counts, applies the row recursion on
/// `indices` with `x` and `w2` aligned to them, and commits the mixture.
pub(crate) fn commit_update(
    model: &mut Model,
    mut mog: MogState,
    indices: &[usize],
    x: &[f64],
    w2: &[f64],
    v: &[f64],
) {
    if model.config.prior_policy == PriorPolicy::FixedWindow {
        mog.rescale_counts((model.config.window_frames * indices.len()) as f64);
    }
    let r = model.subspace.rank;
    let rr = r * r;
    let rho = model.config.rho;
    let sub = &mut model.subspace;
    let mut scratch = vec![0.0; r];
    for (j, &i) in indices.iter().enumerate() {
        let (a, b, u) = (
            &mut sub.carriers_a[i * rr..(i + 1) * rr],
            &mut sub.carriers_b[i * r..(i + 1) * r],
            &mut sub.basis[i * r..(i + 1) * r],
        );
        update_row_in_place(a, b, u, &mut scratch, w2[j], v, x[j], rho);
    }
    model.mog = mog;
}

/// One online step: E/M iterations on `(Π, Σ, v)` with the subspace held
/// fixed, then a single recursive update of every participating basis row.
///
/// With a sample set only the sampled pixels enter the mixture statistics,
/// the coefficient solve and the row updates; other rows are untouched.
pub fn process_frame(model: &mut Model, frame: &Frame, sample: Option<&SampleIndexSet>) -> Result<FrameResult> {
    model.check()?;
    if frame.shape() != (model.width, model.height) {
        return Err(Error::DimensionMismatch {
            context: "frame pixels",
            expected: model.dim(),
            found: frame.len(),
        });
    }
    let r = model.subspace.rank;
    let indices = participating_indices(model.dim(), sample)?;
    let x: Vec<f64> = indices.iter().map(|&i| frame.values()[i]).collect();
    let design = gather_rows(&model.subspace.basis, r, &indices);

    let v0 = initial_coefficients(&design, r, &x)?;
    let n_prior = model.config.prior_count(&model.mog, indices.len());
    let outcome = run_inner_loop(&design, r, &x, &model.mog, n_prior, &model.config, &v0)?;

    let v = outcome.coefficients.clone();
    let background = model.subspace.reconstruct(&v);
    let residual: Vec<f64> = frame.values().iter().zip(&background).map(|(x, b)| x - b).collect();

    commit_update(model, outcome.mog.clone(), &indices, &x, &outcome.squared_weights, &v);

    Ok(FrameResult {
        coefficients: v,
        responsibilities: outcome.responsibilities,
        participating: sample.map(|_| indices),
        mog: model.mog.clone(),
        background,
        residual,
        trace: outcome.trace,
        inner_iterations: outcome.iterations,
        converged: outcome.converged,
    })
}
