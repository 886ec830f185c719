use log::debug;

use super::affine::{image_center, AffineTransform};
use super::warp::{compute_jacobian, warp_frame, JacobianMatrix, PARAMS};
use crate::error::{check_len, Error, Result};
use crate::frame::Frame;
use crate::linalg::{weighted_least_squares, RIDGE_REL};
use crate::model::{
    batch_squared_weights, commit_update, dot, fit_batch_mog, gather_rows, init_carriers, initial_coefficients,
    negative_log_likelihood, prior_regularizer, run_inner_loop, FrameResult, MogState, Model, OnlineConfig,
};
use crate::sampling::SampleIndexSet;

/// Row-major `[U, -J]` restricted to `indices`.
fn stacked_design(basis: &[f64], rank: usize, jac: &JacobianMatrix, indices: &[usize]) -> Vec<f64> {
    let p = rank + PARAMS;
    let mut t = Vec::with_capacity(indices.len() * p);
    for &i in indices {
        t.extend_from_slice(&basis[i * rank..(i + 1) * rank]);
        t.extend(jac.row(i).iter().map(|j| -j));
    }
    t
}

/// Joint weighted solve for the coefficients and the transform increment:
/// minimizes `‖w ⊙ (x∘τ + J Δτ - U v)‖²` over `(v, Δτ)`.
///
/// `w2` holds squared weights; pixels with weight zero do not participate.
pub fn solve_coeff_and_delta(
    warped: &[f64],
    jacobian: &JacobianMatrix,
    basis: &[f64],
    rank: usize,
    w2: &[f64],
) -> Result<(Vec<f64>, [f64; PARAMS])> {
    let d = warped.len();
    check_len("jacobian rows", d, jacobian.rows())?;
    check_len("basis", d * rank, basis.len())?;
    check_len("weights", d, w2.len())?;
    let all: Vec<usize> = (0..d).collect();
    let t = stacked_design(basis, rank, jacobian, &all);
    let z = weighted_least_squares(&t, rank + PARAMS, w2, warped, RIDGE_REL).map_err(|_| Error::RankDeficient)?;
    let mut delta = [0.0; PARAMS];
    delta.copy_from_slice(&z[rank..]);
    Ok((z[..rank].to_vec(), delta))
}

#[derive(Clone, Debug)]
pub struct AlignOptions {
    pub outer_max_iters: usize,
    /// Stop once the solved increment `‖Δτ‖` falls below this.
    pub align_tol: f64,
    /// Largest tolerated displacement of the image center, as a fraction of
    /// the frame width (x) and height (y).
    pub max_shift_frac: f64,
    pub max_rotation_deg: f64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            outer_max_iters: 8,
            align_tol: 1e-3,
            max_shift_frac: 0.25,
            max_rotation_deg: 30.0,
        }
    }
}

impl AlignOptions {
    fn within_bounds(&self, tau: &AffineTransform, width: usize, height: usize) -> bool {
        if tau.validate().is_err() || tau.rotation_deg().abs() > self.max_rotation_deg {
            return false;
        }
        let center = image_center(width, height);
        let (sx, sy) = tau.apply(center.0, center.1);
        (sx - center.0).abs() <= self.max_shift_frac * width as f64
            && (sy - center.1).abs() <= self.max_shift_frac * height as f64
    }
}

#[derive(Clone, Debug)]
pub struct AlignedFrameResult {
    /// Result in the aligned frame's coordinates. The residual is zero on
    /// out-of-bounds pixels.
    pub result: FrameResult,
    pub transform: AffineTransform,
    pub out_of_bounds: Vec<bool>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// `(before, after)` objective for every accepted outer step, both
    /// evaluated on the same pixel set.
    pub outer_trace: Vec<(f64, f64)>,
}

fn in_bounds_indices(oob: &[bool], sample: Option<&SampleIndexSet>) -> Vec<usize> {
    match sample {
        None => (0..oob.len()).filter(|&i| !oob[i]).collect(),
        Some(s) => s.indices().iter().copied().filter(|&i| !oob[i]).collect(),
    }
}

/// Negative log-likelihood plus mixture prior on `indices`.
#[allow(clippy::too_many_arguments)]
fn restricted_objective(
    x: &[f64],
    indices: &[usize],
    basis: &[f64],
    rank: usize,
    v: &[f64],
    mog: &MogState,
    prior: &MogState,
    n_prior: f64,
) -> f64 {
    let e: Vec<f64> = indices
        .iter()
        .map(|&i| x[i] - dot(&basis[i * rank..(i + 1) * rank], v))
        .collect();
    negative_log_likelihood(&e, mog) + prior_regularizer(mog, prior, n_prior)
}

/// Transformed online step: estimates the warp `τ` aligning `frame` to the
/// background subspace by repeated linearization, then updates the model on
/// the aligned frame.
///
/// Each outer iteration runs the E/M loop on the stacked design `[U, -J]`
/// and moves `τ` by the solved increment, halving the step until the
/// objective does not increase. Pixels mapped from outside the frame are
/// excluded everywhere. If the final warp leaves the allowed range the frame
/// fails and the model is left untouched.
pub fn process_frame_aligned(
    model: &mut Model,
    frame: &Frame,
    initial: &AffineTransform,
    options: &AlignOptions,
    sample: Option<&SampleIndexSet>,
) -> Result<AlignedFrameResult> {
    model.check()?;
    if frame.shape() != (model.width, model.height) {
        return Err(Error::DimensionMismatch {
            context: "frame pixels",
            expected: model.dim(),
            found: frame.len(),
        });
    }
    if sample.is_some_and(|s| s.is_empty()) {
        return Err(Error::EmptySampleSet);
    }
    initial.validate()?;
    let (w, h) = frame.shape();
    let r = model.subspace.rank;
    let basis = model.subspace.basis.clone();
    let prior = model.mog.clone();
    let cfg = &model.config;

    let mut tau = *initial;
    let mut mog_cur = prior.clone();
    let mut v_cur: Option<Vec<f64>> = None;
    let mut outer_trace = Vec::new();
    let mut outer_iterations = 0;
    let mut converged = false;

    let mut warped = warp_frame(frame, &tau)?;
    while outer_iterations < options.outer_max_iters {
        outer_iterations += 1;
        let jac = compute_jacobian(frame, &tau)?;
        let idx = in_bounds_indices(&warped.out_of_bounds, sample);
        if idx.len() < r + PARAMS {
            return Err(Error::AlignmentFailure(format!(
                "only {} pixels remain inside the frame",
                idx.len()
            )));
        }
        let x_all = warped.frame.values();
        let x: Vec<f64> = idx.iter().map(|&i| x_all[i]).collect();
        let u_rows = gather_rows(&basis, r, &idx);
        let v_start = match &v_cur {
            Some(v) => v.clone(),
            None => initial_coefficients(&u_rows, r, &x)?,
        };
        let design = stacked_design(&basis, r, &jac, &idx);
        let mut z0 = v_start.clone();
        z0.extend([0.0; PARAMS]);
        let n_prior = cfg.prior_count(&prior, idx.len());
        let inner = run_inner_loop(&design, r + PARAMS, &x, &prior, n_prior, cfg, &z0)
            .map_err(|e| match e {
                Error::DegenerateSubspace(_) => Error::RankDeficient,
                other => other,
            })?;
        let v_new = inner.coefficients[..r].to_vec();
        let delta = &inner.coefficients[r..];
        let proposed = delta.iter().map(|d| d * d).sum::<f64>().sqrt();

        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..6 {
            let mut cand = tau;
            for (p, dp) in cand.params.iter_mut().zip(delta) {
                *p += step * dp;
            }
            if options.within_bounds(&cand, w, h) {
                let cand_warped = warp_frame(frame, &cand)?;
                let common: Vec<usize> = idx
                    .iter()
                    .copied()
                    .filter(|&i| !cand_warped.out_of_bounds[i])
                    .collect();
                if !common.is_empty() {
                    let n_common = cfg.prior_count(&prior, common.len());
                    let before = restricted_objective(x_all, &common, &basis, r, &v_start, &mog_cur, &prior, n_common);
                    let after = restricted_objective(
                        cand_warped.frame.values(),
                        &common,
                        &basis,
                        r,
                        &v_new,
                        &inner.mog,
                        &prior,
                        n_common,
                    );
                    if after <= before + 1e-12 * before.abs() {
                        accepted = Some((cand, cand_warped, before, after));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((cand, cand_warped, before, after)) = accepted else {
            debug!("alignment line search stalled after {outer_iterations} outer iterations");
            converged = proposed < options.align_tol;
            break;
        };
        outer_trace.push((before, after));
        tau = cand;
        warped = cand_warped;
        mog_cur = inner.mog;
        v_cur = Some(v_new);
        if proposed < options.align_tol {
            converged = true;
            break;
        }
    }

    if !options.within_bounds(&tau, w, h) {
        return Err(Error::AlignmentFailure(format!(
            "transform left the allowed range: rotation {:.2} deg, params {:?}",
            tau.rotation_deg(),
            tau.params
        )));
    }

    // Final E/M on the aligned frame with U fixed, then one subspace step.
    let idx = in_bounds_indices(&warped.out_of_bounds, sample);
    if idx.is_empty() {
        return Err(Error::AlignmentFailure("no pixels remain inside the frame".into()));
    }
    let x_all = warped.frame.values();
    let x: Vec<f64> = idx.iter().map(|&i| x_all[i]).collect();
    let u_rows = gather_rows(&basis, r, &idx);
    let v0 = match v_cur {
        Some(v) => v,
        None => initial_coefficients(&u_rows, r, &x)?,
    };
    let n_prior = cfg.prior_count(&prior, idx.len());
    let outcome = run_inner_loop(&u_rows, r, &x, &prior, n_prior, cfg, &v0)?;
    let v = outcome.coefficients.clone();
    let background = model.subspace.reconstruct(&v);
    let residual: Vec<f64> = x_all
        .iter()
        .zip(&background)
        .zip(&warped.out_of_bounds)
        .map(|((x, b), &oob)| if oob { 0.0 } else { x - b })
        .collect();

    commit_update(model, outcome.mog.clone(), &idx, &x, &outcome.squared_weights, &v);

    let full = idx.len() == model.dim();
    Ok(AlignedFrameResult {
        result: FrameResult {
            coefficients: v,
            responsibilities: outcome.responsibilities,
            participating: if full { None } else { Some(idx) },
            mog: model.mog.clone(),
            background,
            residual,
            trace: outcome.trace,
            inner_iterations: outcome.iterations,
            converged: outcome.converged,
        },
        transform: tau,
        out_of_bounds: warped.out_of_bounds,
        outer_iterations,
        converged,
        outer_trace,
    })
}

/// How the batch aligner builds its initial rank-1 background.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchInit {
    Median,
    Mean,
}

#[derive(Clone, Debug)]
pub struct BatchAlignOptions {
    pub passes: usize,
    pub init: BatchInit,
    pub align: AlignOptions,
    /// Seed for the batch EM restarts.
    pub seed: u64,
}

impl Default for BatchAlignOptions {
    fn default() -> Self {
        BatchAlignOptions {
            passes: 4,
            init: BatchInit::Median,
            align: AlignOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchAlignment {
    pub model: Model,
    pub transforms: Vec<AffineTransform>,
    /// Whether each frame's last visit converged.
    pub converged: Vec<bool>,
    /// Failed frames per pass.
    pub failures: Vec<usize>,
}

fn pixelwise_center(frames: &[Frame], init: BatchInit) -> Vec<f64> {
    let d = frames[0].len();
    let n = frames.len();
    let mut column = vec![0.0; n];
    (0..d)
        .map(|i| {
            for (c, f) in column.iter_mut().zip(frames) {
                *c = f.values()[i];
            }
            match init {
                BatchInit::Mean => column.iter().sum::<f64>() / n as f64,
                BatchInit::Median => {
                    column.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    if n % 2 == 1 {
                        column[n / 2]
                    } else {
                        0.5 * (column[n / 2 - 1] + column[n / 2])
                    }
                }
            }
        })
        .collect()
}

/// Rank-1 model around the per-pixel median (or mean) of `frames`.
fn center_model(frames: &[Frame], cfg: &OnlineConfig, init: BatchInit, seed: u64) -> Result<Model> {
    let (w, h) = frames[0].shape();
    let d = w * h;
    let basis = pixelwise_center(frames, init);
    let norm2: f64 = basis.iter().map(|b| b * b).sum();
    if norm2 == 0.0 {
        return Err(Error::DegenerateSubspace("all batch frames are zero".into()));
    }
    let coefficients: Vec<f64> = frames.iter().map(|f| dot(f.values(), &basis) / norm2).collect();
    let mut residuals = Vec::with_capacity(frames.len() * d);
    for (f, &v) in frames.iter().zip(&coefficients) {
        residuals.extend(f.values().iter().zip(&basis).map(|(x, b)| x - v * b));
    }
    let fit = fit_batch_mog(&residuals, cfg.mog_components, cfg.variance_floor, 3, seed)?;
    let total = match cfg.prior_policy {
        crate::model::PriorPolicy::FixedWindow => (cfg.window_frames * d) as f64,
        crate::model::PriorPolicy::Accumulate => (frames.len() * d) as f64,
    };
    let mog = MogState::from_weights(fit.weights, fit.variances, total)?;
    let w2 = batch_squared_weights(&residuals, &mog);
    let subspace = init_carriers(basis, d, 1, &coefficients, &w2, 1e-6)?;
    Ok(Model {
        config: cfg.clone(),
        mog,
        subspace,
        width: w,
        height: h,
    })
}

/// Iterative batch alignment: starts from a rank-1 background at the
/// per-pixel median (or mean) and sweeps the transformed online step over
/// all frames `passes` times, carrying each frame's transform between
/// passes.
///
/// The model uses `cfg` with the rank forced to 1. A pass in which more than
/// half of the frames fail aborts the alignment.
pub fn iterative_batch_align(frames: &[Frame], cfg: &OnlineConfig, options: &BatchAlignOptions) -> Result<BatchAlignment> {
    if frames.len() < 2 {
        return Err(Error::BatchTooSmall {
            needed: 2,
            found: frames.len(),
        });
    }
    let shape = frames[0].shape();
    for (index, f) in frames.iter().enumerate() {
        if f.shape() != shape {
            return Err(Error::FrameSizeMismatch {
                index,
                expected: shape,
                found: f.shape(),
            });
        }
    }
    let cfg = OnlineConfig { rank: 1, ..cfg.clone() };
    cfg.validate()?;
    let mut model = center_model(frames, &cfg, options.init, options.seed)?;
    let mut transforms = vec![AffineTransform::identity(); frames.len()];
    let mut converged = vec![false; frames.len()];
    let mut failures = Vec::with_capacity(options.passes);

    for pass in 0..options.passes {
        let mut failed = 0;
        for (j, frame) in frames.iter().enumerate() {
            match process_frame_aligned(&mut model, frame, &transforms[j], &options.align, None) {
                Ok(out) => {
                    transforms[j] = out.transform;
                    converged[j] = out.converged;
                }
                Err(Error::AlignmentFailure(msg)) => {
                    debug!("pass {pass}, frame {j}: {msg}");
                    converged[j] = false;
                    failed += 1;
                }
                Err(e) => return Err(e),
            }
        }
        failures.push(failed);
        if 2 * failed > frames.len() {
            return Err(Error::AlignmentFailure(format!(
                "{failed} of {} frames failed in pass {}",
                frames.len(),
                pass + 1
            )));
        }
    }
    Ok(BatchAlignment {
        model,
        transforms,
        converged,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::super::warp::tests::smooth_image;
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_jacobian(d: usize, rng: &mut ChaCha8Rng) -> JacobianMatrix {
        JacobianMatrix {
            entries: (0..d * PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn joint_solve_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (d, r) = (50, 3);
        for _ in 0..20 {
            let basis: Vec<f64> = (0..d * r).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jac = random_jacobian(d, &mut rng);
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let w2: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..2.0)).collect();
            let (v, delta) = solve_coeff_and_delta(&x, &jac, &basis, r, &w2).unwrap();

            let t = DMatrix::from_fn(d, r + PARAMS, |i, c| {
                if c < r {
                    basis[i * r + c]
                } else {
                    -jac.row(i)[c - r]
                }
            });
            let wm = DMatrix::from_diagonal(&DVector::from_vec(w2.clone()));
            let lhs = t.transpose() * &wm * &t;
            let rhs = t.transpose() * &wm * DVector::from_vec(x.clone());
            let z = lhs.lu().solve(&rhs).unwrap();
            let ours: Vec<f64> = v.iter().chain(delta.iter()).copied().collect();
            let err = (DVector::from_vec(ours) - &z).norm() / z.norm();
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn joint_solve_equals_alternating_block_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (d, r) = (60, 2);
        let basis: Vec<f64> = (0..d * r).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jac = random_jacobian(d, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let w2: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
        let (v, delta) = solve_coeff_and_delta(&x, &jac, &basis, r, &w2).unwrap();

        let neg_j: Vec<f64> = jac.entries.iter().map(|j| -j).collect();
        let mut va = vec![0.0; r];
        let mut da = vec![0.0; PARAMS];
        for _ in 0..5000 {
            let target: Vec<f64> = (0..d).map(|i| x[i] - dot(&neg_j[i * PARAMS..(i + 1) * PARAMS], &da)).collect();
            va = weighted_least_squares(&basis, r, &w2, &target, 0.0).unwrap();
            let target: Vec<f64> = (0..d).map(|i| x[i] - dot(&basis[i * r..(i + 1) * r], &va)).collect();
            da = weighted_least_squares(&neg_j, PARAMS, &w2, &target, 0.0).unwrap();
        }
        for (a, b) in v.iter().zip(&va).chain(delta.iter().zip(&da)) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn no_alignment_signal_gives_zero_delta() {
        let d = 8;
        // orthonormal columns e0, e1
        let mut basis = vec![0.0; d * 2];
        basis[0] = 1.0;
        basis[3] = 1.0;
        let jac = JacobianMatrix {
            entries: vec![0.0; d * PARAMS],
        };
        let x: Vec<f64> = (0..d).map(|i| i as f64 * 0.1 + 0.05).collect();
        let (v, delta) = solve_coeff_and_delta(&x, &jac, &basis, 2, &vec![1.0; d]).unwrap();
        assert!(delta.iter().all(|&t| t.abs() < 1e-12));
        assert!((v[0] - x[0]).abs() < 1e-9 && (v[1] - x[1]).abs() < 1e-9);
    }

    fn rank1_model(bg: &Frame, sigma2: f64) -> Model {
        let frames = vec![bg.clone(), bg.clone(), bg.clone()];
        let cfg = OnlineConfig {
            rank: 1,
            ..Default::default()
        };
        let mut model = center_model(&frames, &cfg, BatchInit::Median, 0).unwrap();
        model.mog = MogState::from_weights(vec![0.6, 0.3, 0.1], vec![sigma2, 4.0 * sigma2, 0.05], model.mog.count_total()).unwrap();
        model
    }

    #[test]
    fn aligned_frame_stays_at_identity() {
        let bg = smooth_image(40, 32);
        let mut model = rank1_model(&bg, 1e-4);
        let out = process_frame_aligned(&mut model, &bg, &AffineTransform::identity(), &AlignOptions::default(), None).unwrap();
        assert!(out.converged);
        assert!(out.outer_iterations <= 2);
        for (a, b) in out.transform.params.iter().zip(AffineTransform::identity().params) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn recovers_known_warp_with_foreground() {
        let (w, h) = (64, 64);
        let bg = smooth_image(w, h);
        let mut model = rank1_model(&bg, 1e-4);
        let center = image_center(w, h);
        let truth = AffineTransform::rotation_about(3.0, center, 2.0, -1.0);
        let mut observed = warp_frame(&bg, &truth).unwrap().frame.into_values();
        // four 7x7 occluders, about 5% of the frame
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..4 {
            let (x0, y0) = (rng.random_range(4..w - 11), rng.random_range(4..h - 11));
            let level = rng.random::<f64>();
            for r in y0..y0 + 7 {
                for c in x0..x0 + 7 {
                    observed[r * w + c] = level;
                }
            }
        }
        let observed = Frame::new(w, h, observed).unwrap();
        let out = process_frame_aligned(&mut model, &observed, &AffineTransform::identity(), &AlignOptions::default(), None).unwrap();
        // recovered ∘ truth should be the identity
        let composed = truth.compose(&out.transform);
        assert!(composed.rotation_deg().abs() < 0.5, "{:?}", out.transform);
        assert!(composed.displacement_at(center) < 0.5, "{:?}", out.transform);
        for (b, a) in out.outer_trace {
            assert!(a <= b + 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn divergence_guard_leaves_model_untouched() {
        let bg = smooth_image(32, 32);
        let mut model = rank1_model(&bg, 1e-4);
        let before = model.clone();
        let far = AffineTransform::translation(20.0, 0.0);
        let err = process_frame_aligned(&mut model, &bg, &far, &AlignOptions::default(), None);
        assert!(matches!(err, Err(Error::AlignmentFailure(_))), "{err:?}");
        assert_eq!(model, before);
    }

    #[test]
    fn batch_align_identical_frames() {
        let bg = smooth_image(24, 20);
        let frames = vec![bg.clone(); 4];
        let out = iterative_batch_align(&frames, &OnlineConfig::default(), &BatchAlignOptions::default()).unwrap();
        for t in &out.transforms {
            for (a, b) in t.params.iter().zip(AffineTransform::identity().params) {
                assert!((a - b).abs() < 1e-3);
            }
        }
        let v = bg.values().iter().zip(out.model.subspace.basis()).map(|(x, u)| x * u).sum::<f64>()
            / out.model.subspace.basis().iter().map(|u| u * u).sum::<f64>();
        let recon = out.model.subspace.reconstruct(&[v]);
        assert!(recon.iter().zip(bg.values()).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn zero_passes_returns_median() {
        let a = Frame::filled(6, 5, 0.2).unwrap();
        let b = Frame::filled(6, 5, 0.4).unwrap();
        let c = Frame::filled(6, 5, 0.9).unwrap();
        let opts = BatchAlignOptions {
            passes: 0,
            ..Default::default()
        };
        let out = iterative_batch_align(&[a, b, c], &OnlineConfig::default(), &opts).unwrap();
        assert!(out.model.subspace.basis().iter().all(|&u| u == 0.4));
        assert!(out.transforms.iter().all(|t| *t == AffineTransform::identity()));
        assert!(iterative_batch_align(&[Frame::filled(2, 2, 0.1).unwrap()], &OnlineConfig::default(), &opts).is_err());
    }

    #[test]
    fn batch_align_self_consistency() {
        let (w, h) = (48, 48);
        let bg = smooth_image(w, h);
        let center = image_center(w, h);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let frames: Vec<Frame> = (0..30)
            .map(|_| {
                let t = AffineTransform::rotation_about(
                    rng.random_range(-5.0..5.0),
                    center,
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                );
                warp_frame(&bg, &t).unwrap().frame
            })
            .collect();
        let out = iterative_batch_align(&frames, &OnlineConfig::default(), &BatchAlignOptions::default()).unwrap();
        let aligned: Vec<_> = frames
            .iter()
            .zip(&out.transforms)
            .map(|(f, t)| warp_frame(f, t).unwrap())
            .collect();
        let mut total = 0.0;
        let mut pairs = 0;
        for a in 0..aligned.len() {
            for b in a + 1..aligned.len() {
                let (mut s, mut n) = (0.0, 0);
                for i in 0..w * h {
                    if !aligned[a].out_of_bounds[i] && !aligned[b].out_of_bounds[i] {
                        s += (aligned[a].frame.values()[i] - aligned[b].frame.values()[i]).abs();
                        n += 1;
                    }
                }
                total += s / n as f64;
                pairs += 1;
            }
        }
        let mae = total / pairs as f64;
        assert!(mae < 0.03, "pairwise MAE {mae}");
    }
}
