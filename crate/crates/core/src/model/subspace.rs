use crate::error::{check_len, Error, Result};
use crate::linalg::{weighted_least_squares, RIDGE_REL};

/// Weighted coefficient solve `v = (Uᵀ W² U + εI)⁻¹ Uᵀ W² x` over the rows
/// given. `basis` is row-major `n × r`, `w2` holds squared weights.
pub fn solve_coefficients(x: &[f64], basis: &[f64], rank: usize, w2: &[f64]) -> Result<Vec<f64>> {
    check_len("coefficient solve rows", x.len(), w2.len())?;
    check_len("coefficient solve basis", x.len() * rank, basis.len())?;
    if x.iter().chain(w2).chain(basis).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in coefficient solve".into()));
    }
    weighted_least_squares(basis, rank, w2, x, RIDGE_REL)
}

/// Result of one row recursion step.
#[derive(Clone, Debug, PartialEq)]
pub struct RowUpdate {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
}

/// Rank-one recursion for one basis row:
///
/// ```text
/// A' = (A - w² A v vᵀ A / (ρ + w² vᵀ A v)) / ρ
/// b' = ρ b + w² x v
/// u' = A' b'
/// ```
///
/// `w2` is the squared weight of the pixel. No r×r inverse is formed.
pub fn update_subspace_row(a: &[f64], b: &[f64], w2: f64, v: &[f64], x: f64, rho: f64) -> RowUpdate {
    let r = v.len();
    let mut out = RowUpdate {
        a: a.to_vec(),
        b: b.to_vec(),
        u: vec![0.0; r],
    };
    let mut scratch = vec![0.0; r];
    update_row_in_place(&mut out.a, &mut out.b, &mut out.u, &mut scratch, w2, v, x, rho);
    out
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn update_row_in_place(
    a: &mut [f64],
    b: &mut [f64],
    u: &mut [f64],
    av: &mut [f64],
    w2: f64,
    v: &[f64],
    x: f64,
    rho: f64,
) {
    let r = v.len();
    for p in 0..r {
        av[p] = (0..r).map(|q| a[p * r + q] * v[q]).sum();
    }
    let vav: f64 = v.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
    let denom = rho + w2 * vav;
    assert!(denom > 0.0, "rank-one denominator must be positive, got {denom}");
    let scale = w2 / denom;
    let inv_rho = 1.0 / rho;
    for p in 0..r {
        for q in p..r {
            let val = (a[p * r + q] - scale * av[p] * av[q]) * inv_rho;
            let sym = if p == q {
                val
            } else {
                0.5 * (val + (a[q * r + p] - scale * av[q] * av[p]) * inv_rho)
            };
            a[p * r + q] = sym;
            a[q * r + p] = sym;
        }
    }
    debug_assert!((0..r).all(|p| a[p * r + p] > 0.0), "carrier lost positive definiteness");
    for p in 0..r {
        b[p] = rho * b[p] + w2 * x * v[p];
    }
    for p in 0..r {
        u[p] = (0..r).map(|q| a[p * r + q] * b[q]).sum();
    }
}
