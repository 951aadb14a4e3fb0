//! Internal dense linear-algebra helpers shared across modules.
//!
//! Factorizations run on the faer backend (nalgebra's iterative SVD loses
//! accuracy on exactly rank-deficient inputs, which are the norm here:
//! rank-p data in a larger ambient space). Conversions at these sizes are
//! negligible. Conventions: descending singular values, sign-canonicalized
//! vectors, explicit convergence errors instead of panics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn to_faer(x: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)])
}

/// Thin SVD with singular values sorted in descending order.
///
/// Returns `(u, sigma, v)` with `u: n x k`, `v: m x k`, `k = min(n, m)`, so
/// that `x = u * diag(sigma) * v^T`. Each pair of singular vectors is sign
/// fixed: the largest-magnitude entry of every column of `u` is positive,
/// with the matching column of `v` flipped alongside.
pub fn thin_svd(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = to_faer(x).thin_svd().map_err(|_| Error::ConvergenceFailure)?;
    let k = x.nrows().min(x.ncols());
    let fu = svd.U();
    let fs = svd.S();
    let fv = svd.V();

    // faer returns descending order already; re-sorting is a cheap guard.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));

    let mut u_sorted = DMatrix::zeros(x.nrows(), k);
    let mut v_sorted = DMatrix::zeros(x.ncols(), k);
    let mut s_sorted = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..x.nrows() {
            u_sorted[(i, dst)] = fu[(i, src)];
        }
        for j in 0..x.ncols() {
            v_sorted[(j, dst)] = fv[(j, src)];
        }
        s_sorted[dst] = fs[src];
    }
    sign_fix_pair(&mut u_sorted, &mut v_sorted);
    Ok((u_sorted, s_sorted, v_sorted))
}

/// Flips column signs so the largest-magnitude entry of each column of `u`
/// is positive; ties break to the lowest row index. Columns of `v` flip in
/// lockstep so products `u * diag * v^T` are preserved.
pub fn sign_fix_pair(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for c in 0..u.ncols() {
        if dominant_entry(&u.column(c).iter().copied().collect::<Vec<_>>()) < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
}

/// Sign convention for a standalone set of column vectors.
pub fn sign_fix_columns(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        if dominant_entry(&m.column(c).iter().copied().collect::<Vec<_>>()) < 0.0 {
            m.column_mut(c).neg_mut();
        }
    }
}

fn dominant_entry(col: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut best_abs = -1.0f64;
    for &x in col {
        let a = x.abs();
        if a > best_abs {
            best_abs = a;
            best = x;
        }
    }
    best
}

/// Thin QR orthonormalization: returns `q: n x min(n, p)` spanning the
/// column space of `x`, sign fixed so the diagonal of `r` is nonnegative.
/// That correction makes the QR of a Gaussian matrix Haar distributed.
pub fn orthonormalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = x.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..q.ncols().min(r.nrows()) {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
/// eigenvectors sign fixed by the largest-magnitude-entry-positive rule.
pub fn sym_eigen(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = to_faer(s)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::ConvergenceFailure)?;
    let n = s.nrows();
    let fu = eig.U();
    let fs = eig.S();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = fs[src];
        for i in 0..n {
            vectors[(i, dst)] = fu[(i, src)];
        }
    }
    sign_fix_columns(&mut vectors);
    Ok((values, vectors))
}

/// `m` raised to a nonnegative integer power by repeated squaring.
pub fn matrix_power(m: &DMatrix<f64>, t: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Median of a nonempty slice; even lengths average the two middle values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Max absolute deviation of `b^T b` from the identity.
pub fn gram_defect(b: &DMatrix<f64>) -> f64 {
    let p = b.ncols();
    let mut gram = b.transpose() * b;
    for i in 0..p {
        gram[(i, i)] -= 1.0;
    }
    gram.amax()
}
