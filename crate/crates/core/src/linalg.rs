//! Dense linear-algebra helpers shared by every module.
//!
//! Numerical rank is always decided from singular values:
//! `rank = #{ σ_i : σ_i > tol_rel · σ_max }`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Thin SVD `a = U · diag(σ) · Vᵀ` with `σ` in decreasing order.
///
/// Computed with `faer`: the bidiagonal SVD in `nalgebra` occasionally returns
/// factors that do not reconstruct rank-deficient inputs.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Result<Svd> {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd { u: DMatrix::zeros(r, 0), singular_values: Vec::new(), v: DMatrix::zeros(c, 0) });
    }
    let f = faer::Mat::from_fn(r, c, |i, j| a[(i, j)]);
    let dec = f
        .thin_svd()
        .map_err(|e| Error::invalid(format!("SVD did not converge: {e:?}")))?;
    let (fu, fs, fv) = (dec.U(), dec.S(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| fs[y].total_cmp(&fs[x]));
    Ok(Svd {
        u: DMatrix::from_fn(r, k, |i, j| fu[(i, order[j])]),
        singular_values: order.iter().map(|&j| fs[j]).collect(),
        v: DMatrix::from_fn(c, k, |i, j| fv[(i, order[j])]),
    })
}

/// Singular values in decreasing order. Empty for matrices with a zero dimension.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let f = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut sv = match f.singular_values() {
        Ok(sv) => sv,
        // never expected; fall back to the nalgebra routine
        Err(_) => m.singular_values().iter().copied().collect(),
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn numerical_rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    rank_from_singular_values(&singular_values(m), tol_rel)
}

pub fn rank_from_singular_values(sv: &[f64], tol_rel: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rel * smax).count()
}

/// Minimum-norm least-squares solution of `a · x = b`.
///
/// Singular values at or below `tol_rel · σ_max` are treated as zero.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, tol_rel: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::dim(format!(
            "least squares: lhs has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.is_empty() {
        return Ok(DMatrix::zeros(a.ncols(), b.ncols()));
    }
    let dec = svd(a)?;
    let smax = dec.singular_values.first().copied().unwrap_or(0.0);
    let cut = tol_rel * smax;
    // x = V · diag(1/σ) · Uᵀ b over the kept singular values
    let mut utb = dec.u.transpose() * b;
    for (i, &sv) in dec.singular_values.iter().enumerate() {
        let scale = if sv > cut && sv > 0.0 { 1.0 / sv } else { 0.0 };
        utb.row_mut(i).scale_mut(scale);
    }
    Ok(&dec.v * utb)
}

pub fn lstsq_min_norm_vec(a: &DMatrix<f64>, b: &DVector<f64>, tol_rel: f64) -> Result<DVector<f64>> {
    let x = lstsq_min_norm(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), tol_rel)?;
    Ok(x.column(0).into_owned())
}

/// Moore-Penrose pseudo-inverse with relative truncation.
pub fn pinv(a: &DMatrix<f64>, tol_rel: f64) -> Result<DMatrix<f64>> {
    lstsq_min_norm(a, &DMatrix::identity(a.nrows(), a.nrows()), tol_rel)
}

/// Largest eigenvalue modulus, computed over the complex field.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `(M + Mᵀ) / 2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric matrix (`-inf` when empty).
pub fn max_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::NEG_INFINITY;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Concatenates vectors of equal length into one long column (time-major stacking).
pub fn stack_vectors(samples: &[DVector<f64>]) -> DVector<f64> {
    let total = samples.iter().map(|s| s.len()).sum();
    let mut out = DVector::zeros(total);
    let mut row = 0;
    for s in samples {
        out.rows_mut(row, s.len()).copy_from(s);
        row += s.len();
    }
    out
}

/// Splits a stacked column back into `len / dim` samples of dimension `dim`.
pub fn unstack_vector(v: &DVector<f64>, dim: usize) -> Vec<DVector<f64>> {
    if dim == 0 {
        return Vec::new();
    }
    v.as_slice()
        .chunks(dim)
        .map(DVector::from_column_slice)
        .collect()
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hconcat(blocks: &[DMatrix<f64>], rows: usize) -> Result<DMatrix<f64>> {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for (i, b) in blocks.iter().enumerate() {
        if b.nrows() != rows {
            return Err(Error::dim(format!(
                "block {i} has {} rows, expected {rows}",
                b.nrows()
            )));
        }
        out.columns_mut(c, b.ncols()).copy_from(b);
        c += b.ncols();
    }
    Ok(out)
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vconcat(blocks: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for (i, b) in blocks.iter().enumerate() {
        if b.ncols() != cols {
            return Err(Error::dim(format!(
                "block {i} has {} columns, expected {cols}",
                b.ncols()
            )));
        }
        out.rows_mut(r, b.nrows()).copy_from(*b);
        r += b.nrows();
    }
    Ok(out)
}

/// Relative Frobenius residual `‖r‖ / ‖reference‖`, falling back to the absolute
/// value when the reference is zero.
pub fn relative_residual(residual_norm: f64, reference_norm: f64) -> f64 {
    if reference_norm > 0.0 {
        residual_norm / reference_norm
    } else {
        residual_norm
    }
}
