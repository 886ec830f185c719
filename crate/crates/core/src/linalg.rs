//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative ridge used for the r×r (or (r+6)×(r+6)) normal equations:
/// `eps = RIDGE_REL * trace(G) / p`.
pub const RIDGE_REL: f64 = 1e-10;

/// Solves `min_z Σ_i w2_i (y_i - design_i · z)^2` through the ridged normal
/// equations. `design` is row-major `m × p`.
pub fn weighted_least_squares(
    design: &[f64],
    p: usize,
    w2: &[f64],
    y: &[f64],
    ridge_rel: f64,
) -> Result<Vec<f64>> {
    let m = y.len();
    debug_assert_eq!(design.len(), m * p);
    debug_assert_eq!(w2.len(), m);

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for i in 0..m {
        let wi = w2[i];
        if wi == 0.0 {
            continue;
        }
        let row = &design[i * p..(i + 1) * p];
        let wy = wi * y[i];
        for a in 0..p {
            let wa = wi * row[a];
            rhs[a] += wy * row[a];
            for b in a..p {
                gram[a * p + b] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
    }
    solve_ridged(gram, rhs, p, ridge_rel)
}

/// Solves `(G + eps I) z = rhs` with `eps = ridge_rel * trace(G) / p`.
pub fn solve_ridged(mut gram: Vec<f64>, rhs: Vec<f64>, p: usize, ridge_rel: f64) -> Result<Vec<f64>> {
    let trace: f64 = (0..p).map(|a| gram[a * p + a]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::DegenerateSubspace(format!(
            "normal matrix has trace {trace}"
        )));
    }
    let eps = ridge_rel * trace / p as f64;
    for a in 0..p {
        gram[a * p + a] += eps;
    }
    let g = DMatrix::from_row_slice(p, p, &gram);
    let b = DVector::from_vec(rhs);
    let sol = match g.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => g
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::DegenerateSubspace("normal matrix is singular".into()))?,
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSubspace("non-finite solution".into()));
    }
    Ok(sol.as_slice().to_vec())
}

/// Orthonormal basis for the column span of a row-major `rows × cols` matrix.
fn orthonormal_columns(m: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(rows, cols, m);
    a.qr().q()
}

/// Principal angles (radians, ascending) between the column spans of two
/// row-major `rows × cols` matrices.
pub fn principal_angles(a: &[f64], b: &[f64], rows: usize, cols_a: usize, cols_b: usize) -> Vec<f64> {
    let qa = orthonormal_columns(a, rows, cols_a);
    let qb = orthonormal_columns(b, rows, cols_b);
    let m = qa.transpose() * qb;
    let mut sv: Vec<f64> = m.singular_values().iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
    sv.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sv
}

/// Largest principal angle between two subspaces, in degrees.
pub fn subspace_angle_deg(a: &[f64], b: &[f64], rows: usize, cols_a: usize, cols_b: usize) -> f64 {
    principal_angles(a, b, rows, cols_a, cols_b)
        .last()
        .copied()
        .unwrap_or(0.0)
        .to_degrees()
}

/// Pairwise (tree) summation; fixed association order keeps reductions
/// reproducible regardless of how callers chunk the data.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
