use super::affine::AffineTransform;
use crate::error::Result;
use crate::frame::Frame;

/// Number of warp parameters.
pub const PARAMS: usize = 6;

const EDGE_EPS: f64 = 1e-9;

/// Warped image plus the pixels whose source position fell outside the
/// input (those carry the nearest border value).
#[derive(Clone, Debug)]
pub struct WarpedFrame {
    pub frame: Frame,
    pub out_of_bounds: Vec<bool>,
}

impl WarpedFrame {
    pub fn in_bounds_count(&self) -> usize {
        self.out_of_bounds.iter().filter(|&&o| !o).count()
    }
}

/// `d × 6` derivative of the warped image with respect to the transform
/// parameters, row-major, columns ordered as `AffineTransform::params`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix {
    pub entries: Vec<f64>,
}

impl JacobianMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len() / PARAMS
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * PARAMS..(i + 1) * PARAMS]
    }
}

/// Bilinear sample with border replication.
#[inline]
fn bilinear(values: &[f64], w: usize, h: usize, sx: f64, sy: f64) -> f64 {
    let x = sx.clamp(0.0, (w - 1) as f64);
    let y = sy.clamp(0.0, (h - 1) as f64);
    let x0 = (x.floor() as usize).min(w.saturating_sub(2));
    let y0 = (y.floor() as usize).min(h.saturating_sub(2));
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = values[y0 * w + x0] * (1.0 - fx) + values[y0 * w + x1] * fx;
    let bottom = values[y1 * w + x0] * (1.0 - fx) + values[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

#[inline]
fn outside(sx: f64, sy: f64, w: usize, h: usize, margin: f64) -> bool {
    sx < margin - EDGE_EPS
        || sy < margin - EDGE_EPS
        || sx > (w - 1) as f64 - margin + EDGE_EPS
        || sy > (h - 1) as f64 - margin + EDGE_EPS
}

/// Output pixel `(c, r)` is the bilinear sample of `image` at `τ(c, r)`.
pub fn warp_frame(image: &Frame, tau: &AffineTransform) -> Result<WarpedFrame> {
    tau.validate()?;
    let (w, h) = image.shape();
    let src = image.values();
    let mut values = Vec::with_capacity(w * h);
    let mut out_of_bounds = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (sx, sy) = tau.apply(c as f64, r as f64);
            out_of_bounds.push(outside(sx, sy, w, h, 0.0));
            values.push(bilinear(src, w, h, sx, sy));
        }
    }
    Ok(WarpedFrame {
        frame: Frame::new(w, h, values)?,
        out_of_bounds,
    })
}

/// Central-difference gradients of the source image; one-sided at the edges.
fn source_gradients(image: &Frame) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = image.shape();
    let v = image.values();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gx[i] = match (c > 0, c + 1 < w) {
                (true, true) => 0.5 * (v[i + 1] - v[i - 1]),
                (false, true) => v[i + 1] - v[i],
                (true, false) => v[i] - v[i - 1],
                (false, false) => 0.0,
            };
            gy[i] = match (r > 0, r + 1 < h) {
                (true, true) => 0.5 * (v[i + w] - v[i - w]),
                (false, true) => v[i + w] - v[i],
                (true, false) => v[i] - v[i - w],
                (false, false) => 0.0,
            };
        }
    }
    (gx, gy)
}

/// Chain rule: image gradient at the source position times the derivative
/// of the source coordinates, `∂s_x/∂(a11, a12, tx) = (c, r, 1)` and
/// `∂s_y/∂(a21, a22, ty) = (c, r, 1)`.
///
/// Rows whose source position lies outside the image or on its outermost
/// pixel ring are zero.
pub fn compute_jacobian(image: &Frame, tau: &AffineTransform) -> Result<JacobianMatrix> {
    tau.validate()?;
    let (w, h) = image.shape();
    let (gx, gy) = source_gradients(image);
    let mut entries = vec![0.0; w * h * PARAMS];
    for r in 0..h {
        for c in 0..w {
            let (sx, sy) = tau.apply(c as f64, r as f64);
            if outside(sx, sy, w, h, 1.0) {
                continue;
            }
            let ix = bilinear(&gx, w, h, sx, sy);
            let iy = bilinear(&gy, w, h, sx, sy);
            let (cf, rf) = (c as f64, r as f64);
            let row = &mut entries[(r * w + c) * PARAMS..(r * w + c + 1) * PARAMS];
            row.copy_from_slice(&[ix * cf, ix * rf, iy * cf, iy * rf, ix, iy]);
        }
    }
    Ok(JacobianMatrix { entries })
}
