use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Smallest determinant accepted for the linear part.
pub const MIN_DETERMINANT: f64 = 0.1;

/// Six-parameter affine warp mapping output pixel coordinates `(col, row)`
/// to source coordinates: `source = A · dest + t` with
/// `A = [[a11, a12], [a21, a22]]`, `t = (tx, ty)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineTransform {
    pub params: [f64; 6],
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub const fn identity() -> Self {
        AffineTransform {
            params: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        }
    }

    pub fn new(params: [f64; 6]) -> Self {
        AffineTransform { params }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        AffineTransform {
            params: [1.0, 0.0, 0.0, 1.0, tx, ty],
        }
    }

    /// Rotation by `degrees` about `center` followed by a shift `(tx, ty)`.
    pub fn rotation_about(degrees: f64, center: (f64, f64), tx: f64, ty: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        let (cx, cy) = center;
        AffineTransform {
            params: [c, -s, s, c, cx - (c * cx - s * cy) + tx, cy - (s * cx + c * cy) + ty],
        }
    }

    pub fn determinant(&self) -> f64 {
        let [a11, a12, a21, a22, ..] = self.params;
        a11 * a22 - a12 * a21
    }

    pub fn validate(&self) -> Result<()> {
        let det = self.determinant();
        if !(det > MIN_DETERMINANT) || self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegenerateTransform { det });
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, col: f64, row: f64) -> (f64, f64) {
        let [a11, a12, a21, a22, tx, ty] = self.params;
        (a11 * col + a12 * row + tx, a21 * col + a22 * row + ty)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        let [a11, a12, a21, a22, tx, ty] = self.params;
        let [b11, b12, b21, b22, sx, sy] = other.params;
        AffineTransform {
            params: [
                a11 * b11 + a12 * b21,
                a11 * b12 + a12 * b22,
                a21 * b11 + a22 * b21,
                a21 * b12 + a22 * b22,
                a11 * sx + a12 * sy + tx,
                a21 * sx + a22 * sy + ty,
            ],
        }
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateTransform { det });
        }
        let [a11, a12, a21, a22, tx, ty] = self.params;
        let (i11, i12, i21, i22) = (a22 / det, -a12 / det, -a21 / det, a11 / det);
        Ok(AffineTransform {
            params: [i11, i12, i21, i22, -(i11 * tx + i12 * ty), -(i21 * tx + i22 * ty)],
        })
    }

    /// Rotation angle of the linear part in degrees.
    pub fn rotation_deg(&self) -> f64 {
        self.params[2].atan2(self.params[0]).to_degrees()
    }

    /// Displacement of `point` under the transform.
    pub fn displacement_at(&self, point: (f64, f64)) -> f64 {
        let (x, y) = self.apply(point.0, point.1);
        (x - point.0).hypot(y - point.1)
    }
}

/// Image center in pixel coordinates.
pub fn image_center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Formats `x` with 9 significant digits in plain decimal notation.
fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.8}", if x == 0.0 { 0.0 } else { x });
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// One line per frame: `frame_index,a11,a12,a21,a22,tx,ty`.
pub fn format_transform_table(rows: &[(usize, AffineTransform)]) -> String {
    let mut out = String::new();
    for (index, t) in rows {
        write!(out, "{index}").unwrap();
        for p in t.params {
            write!(out, ",{}", sig9(p)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_transform_table(text: &str) -> std::result::Result<Vec<(usize, AffineTransform)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(format!("line {}: expected 7 fields, found {}", lineno + 1, fields.len()));
        }
        let index = fields[0]
            .parse::<usize>()
            .map_err(|e| format!("line {}: bad frame index: {e}", lineno + 1))?;
        let mut params = [0.0; 6];
        for (p, f) in params.iter_mut().zip(&fields[1..]) {
            *p = f.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        rows.push((index, AffineTransform { params }));
    }
    Ok(rows)
}

pub fn write_transform_table(path: &Path, rows: &[(usize, AffineTransform)]) -> Result<()> {
    std::fs::write(path, format_transform_table(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_transform_table(path: &Path) -> Result<Vec<(usize, AffineTransform)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transform_table(&text).map_err(|m| Error::format(path, m))
}
