//! Total-variation refinement of foreground images.
//!
//! `tv_denoise` computes the proximal point
//! `argmin_F ½‖F - G‖² + λ‖F‖_TV` for the isotropic TV norm with forward
//! differences and Neumann boundary, by accelerated projected gradient on
//! the dual (step 1/8).

use crate::frame::Frame;
use crate::model::MogState;

/// Residual-magnitude image the TV step operates on.
pub type ForegroundImage = Frame;

pub const TV_MAX_ITERS: usize = 200;
pub const TV_GAP_TOL: f64 = 1e-5;

/// Forward-difference gradient, zero on the last column / row.
fn gradient(f: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gx[i] = if c + 1 < w { f[i + 1] - f[i] } else { 0.0 };
            gy[i] = if r + 1 < h { f[i + w] - f[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of `gradient`.
fn divergence(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let dx = if c + 1 < w { px[i] } else { 0.0 } - if c > 0 { px[i - 1] } else { 0.0 };
            let dy = if r + 1 < h { py[i] } else { 0.0 } - if r > 0 { py[i - w] } else { 0.0 };
            out[i] = dx + dy;
        }
    }
}

/// Isotropic total variation `Σ ‖∇F‖₂`.
pub fn tv_norm(image: &Frame) -> f64 {
    let (w, h) = image.shape();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    gradient(image.values(), w, h, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// `½‖F - G‖² + λ‖F‖_TV`.
pub fn tv_objective(f: &Frame, g: &Frame, lambda: f64) -> f64 {
    let fid: f64 = f.values().iter().zip(g.values()).map(|(a, b)| (a - b).powi(2)).sum();
    0.5 * fid + lambda * tv_norm(f)
}

#[derive(Clone, Debug)]
pub struct TvOutcome {
    pub image: Frame,
    pub iterations: usize,
    pub gap: f64,
}

pub fn tv_denoise(fg: &ForegroundImage, lambda: f64) -> Frame {
    tv_denoise_with(fg, lambda, TV_GAP_TOL, TV_MAX_ITERS).image
}

/// TV prox with explicit stopping parameters: stops when
/// `gap / ‖G‖² < gap_tol` or after `max_iters` iterations.
pub fn tv_denoise_with(fg: &ForegroundImage, lambda: f64, gap_tol: f64, max_iters: usize) -> TvOutcome {
    assert!(lambda >= 0.0, "lambda must be non-negative");
    let (w, h) = fg.shape();
    let n = w * h;
    if lambda == 0.0 {
        return TvOutcome { image: fg.clone(), iterations: 0, gap: 0.0 };
    }
    let g = fg.values();
    let g_norm2: f64 = g.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);

    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    // extrapolated point
    let mut qx = vec![0.0; n];
    let mut qy = vec![0.0; n];
    let mut px_old = vec![0.0; n];
    let mut py_old = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut f = g.to_vec();
    let mut t = 1.0f64;
    let step = 1.0 / 8.0;

    let primal_dual_gap = |f: &[f64], div: &[f64], gx: &mut [f64], gy: &mut [f64]| {
        // F = G + λ div p; gap = P(F) - D(p)
        gradient(f, w, h, gx, gy);
        let tv: f64 = gx.iter().zip(gy.iter()).map(|(a, b)| a.hypot(*b)).sum();
        let fid: f64 = div.iter().map(|d| (lambda * d).powi(2)).sum();
        let primal = 0.5 * fid + lambda * tv;
        let dual = 0.5 * g_norm2 - 0.5 * f.iter().map(|v| v * v).sum::<f64>();
        primal - dual
    };

    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        // gradient step on h(q) = ½‖G + λ div q‖² at the extrapolated point
        divergence(&qx, &qy, w, h, &mut div);
        for i in 0..n {
            tmp[i] = div[i] + g[i] / lambda;
        }
        gradient(&tmp, w, h, &mut gx, &mut gy);
        px_old.copy_from_slice(&px);
        py_old.copy_from_slice(&py);
        for i in 0..n {
            let ax = qx[i] + step * gx[i];
            let ay = qy[i] + step * gy[i];
            let norm = ax.hypot(ay).max(1.0);
            px[i] = ax / norm;
            py[i] = ay / norm;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            qx[i] = px[i] + beta * (px[i] - px_old[i]);
            qy[i] = py[i] + beta * (py[i] - py_old[i]);
        }
        t = t_next;

        divergence(&px, &py, w, h, &mut div);
        for i in 0..n {
            f[i] = g[i] + lambda * div[i];
        }
        gap = primal_dual_gap(&f, &div, &mut gx, &mut gy);
        if gap / g_norm2 < gap_tol {
            break;
        }
    }
    TvOutcome {
        image: Frame::new(w, h, f).expect("TV output keeps the input shape"),
        iterations,
        gap,
    }
}

/// `λ = 1.5 · max_k σ_k²`.
pub fn select_lambda(mog: &MogState) -> f64 {
    1.5 * mog.variances.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}
