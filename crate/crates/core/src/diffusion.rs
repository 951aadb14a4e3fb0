//! Diffusion maps over kernel matrices.
//!
//! Pipeline: degrees `D_ii = sum_j k_ij`, graph-Laplacian normalization
//! `kappa_ij = k_ij / sqrt(D_ii D_jj)`, row-stochastic transition matrix
//! `P = Dk^{-1} kappa` (`Dk` holds the degrees of `kappa`), eigenpairs of
//! `P`, and diffusion coordinates `xi_jk = lambda_k^t psi_jk` for the
//! nontrivial pairs `k = 1..q`.
//!
//! Eigenpairs are computed on the symmetric conjugate
//! `S = Dk^{1/2} P Dk^{-1/2}`, which shares eigenvalues with `P`; right
//! eigenvectors map back as `psi = Dk^{-1/2} v`. With `v` unit length the
//! resulting `psi` are unit length in the `Dk`-weighted inner product, which
//! is exactly the normalization that makes the diffusion distance equal the
//! Euclidean distance between coordinate rows.
//!
//! The dataset pipelines sort samples into a canonical order before any
//! arithmetic and scatter the results back afterwards, so permuting the
//! input permutes every output row bitwise exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{self, CompositionRule, KernelKind, KernelMatrix};
use crate::linalg;
use crate::manifold::{self, GrassmannPoint};

/// Degrees at or below this are treated as isolated vertices.
pub const DEGREE_TOL: f64 = 1e-14;
/// Max deviation of transition-matrix row sums from one.
pub const ROW_SUM_TOL: f64 = 1e-10;
/// A second eigenvalue this close to one means the graph is disconnected.
pub const CONNECTIVITY_TOL: f64 = 1e-12;
/// Spectral gaps below this make the embedding dimension ill defined.
pub const GAP_TOL: f64 = 1e-12;

/// Row sums of a kernel matrix.
#[derive(Debug, Clone)]
pub struct DegreeVector {
    values: DVector<f64>,
}

impl DegreeVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Stationary distribution of the diffusion chain: degrees normalized to
/// sum to one.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    values: DVector<f64>,
}

impl StationaryDistribution {
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Row-stochastic transition matrix with its diffusion time.
///
/// Stores the one-step matrix; [`TransitionMatrix::powered`] materializes
/// `P^t`. The degrees of the normalized kernel it was built from ride along
/// because the spectral routines and the diffusion distance both weight by
/// them.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    one_step: DMatrix<f64>,
    t: u32,
    kappa_degrees: DegreeVector,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.one_step.nrows()
    }

    pub fn one_step(&self) -> &DMatrix<f64> {
        &self.one_step
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// `P^t` by repeated squaring.
    pub fn powered(&self) -> DMatrix<f64> {
        linalg::matrix_power(&self.one_step, self.t)
    }

    /// Degrees of the normalized kernel behind this matrix.
    pub fn kappa_degrees(&self) -> &DegreeVector {
        &self.kappa_degrees
    }
}

/// Eigenvalues, eigenvectors, and diffusion coordinates of a transition
/// matrix.
///
/// `eigenvalues` holds the top `q + 1` values in descending order, led by
/// the trivial `lambda_0 = 1`; `eigenvectors` are the matching right
/// eigenvectors of `P`, unit length in the degree-weighted inner product
/// and sign fixed so the largest-magnitude entry of each is positive.
/// `coordinates` drops the trivial pair: column `k - 1` is
/// `lambda_k^t psi_k`.
#[derive(Debug, Clone)]
pub struct DiffusionEmbedding {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    coordinates: DMatrix<f64>,
    t: u32,
    q: usize,
    spectral_gap: Option<f64>,
}

impl DiffusionEmbedding {
    pub fn num_samples(&self) -> usize {
        self.coordinates.nrows()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn coordinates(&self) -> &DMatrix<f64> {
        &self.coordinates
    }

    /// Gap `lambda_q - lambda_{q+1}`; absent when the embedding already
    /// uses the full spectrum.
    pub fn spectral_gap(&self) -> Option<f64> {
        self.spectral_gap
    }

    /// True when the cut between retained and discarded eigenvalues is
    /// numerically ambiguous.
    pub fn gap_warning(&self) -> bool {
        matches!(self.spectral_gap, Some(g) if g < GAP_TOL)
    }
}

/// Row sums of a kernel matrix; errors if any vertex is isolated.
pub fn degree_vector(kernel: &KernelMatrix) -> Result<DegreeVector> {
    let entries = kernel.entries();
    let n = entries.nrows();
    let mut values = DVector::zeros(n);
    for i in 0..n {
        let d: f64 = entries.row(i).iter().sum();
        if !(d > DEGREE_TOL) {
            return Err(Error::DisconnectedGraph(format!(
                "vertex {i} has degree {d:.3e}"
            )));
        }
        values[i] = d;
    }
    Ok(DegreeVector { values })
}

/// Degrees normalized to a probability vector.
pub fn stationary_distribution(deg: &DegreeVector) -> StationaryDistribution {
    let total: f64 = deg.values().iter().sum();
    StationaryDistribution {
        values: deg.values() / total,
    }
}

/// Graph-Laplacian normalization `kappa_ij = k_ij / sqrt(d_i d_j)`.
pub fn normalize_kernel(kernel: &KernelMatrix, deg: &DegreeVector) -> Result<KernelMatrix> {
    let n = kernel.size();
    if deg.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "degree vector of length {} for kernel of size {n}",
            deg.len()
        )));
    }
    let inv_sqrt: Vec<f64> = deg.values().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.entries()[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    KernelMatrix::new(out, kernel.label())
}

/// Row normalization of a (typically already degree-normalized) kernel into
/// a row-stochastic matrix, tagged with the diffusion time `t >= 1`.
pub fn transition_matrix(kappa: &KernelMatrix, t: u32) -> Result<TransitionMatrix> {
    assert!(t >= 1, "diffusion time must be a positive integer");
    let kappa_degrees = degree_vector(kappa)?;
    let n = kappa.size();
    let mut one_step = kappa.entries().clone();
    for i in 0..n {
        let d = kappa_degrees.get(i);
        for j in 0..n {
            one_step[(i, j)] /= d;
        }
    }
    for i in 0..n {
        let s: f64 = one_step.row(i).iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonFinite(format!(
                "transition row {i} sums to {s}, not 1"
            )));
        }
    }
    Ok(TransitionMatrix {
        one_step,
        t,
        kappa_degrees,
    })
}

/// Top `q + 1` eigenpairs of the transition matrix and the diffusion
/// coordinates they induce.
///
/// Errors with `DisconnectedGraph` when the second eigenvalue reaches one,
/// which happens exactly when the similarity graph has more than one
/// connected component.
pub fn spectral_embedding(p: &TransitionMatrix, q: usize) -> Result<DiffusionEmbedding> {
    let n = p.size();
    if q == 0 || q + 1 > n {
        return Err(Error::Dimension(format!(
            "embedding dimension q = {q} must satisfy 1 <= q <= N - 1 = {}",
            n - 1
        )));
    }
    let sqrt_d: Vec<f64> = p
        .kappa_degrees()
        .values()
        .iter()
        .map(|d| d.sqrt())
        .collect();
    // Symmetric conjugate S = Dk^{1/2} P Dk^{-1/2}; symmetrize to scrub
    // roundoff before the symmetric eigensolver.
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let a = sqrt_d[i] * p.one_step()[(i, j)] / sqrt_d[j];
            let b = sqrt_d[j] * p.one_step()[(j, i)] / sqrt_d[i];
            let v = 0.5 * (a + b);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let (mu, v) = linalg::sym_eigen(&s)?;
    if (mu[0] - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::ConvergenceFailure);
    }
    if n > 1 && mu[1] >= 1.0 - CONNECTIVITY_TOL {
        return Err(Error::DisconnectedGraph(format!(
            "second eigenvalue {} indicates more than one component",
            mu[1]
        )));
    }

    let eigenvalues = DVector::from_iterator(q + 1, mu.iter().take(q + 1).copied());
    let mut eigenvectors = DMatrix::zeros(n, q + 1);
    for k in 0..=q {
        for i in 0..n {
            eigenvectors[(i, k)] = v[(i, k)] / sqrt_d[i];
        }
    }
    linalg::sign_fix_columns(&mut eigenvectors);

    let mut coordinates = DMatrix::zeros(n, q);
    for k in 1..=q {
        let scale = eigenvalues[k].powi(p.t() as i32);
        for i in 0..n {
            coordinates[(i, k - 1)] = scale * eigenvectors[(i, k)];
        }
    }
    let spectral_gap = if q + 1 < n {
        Some(eigenvalues[q] - mu[q + 1])
    } else {
        None
    };
    Ok(DiffusionEmbedding {
        eigenvalues,
        eigenvectors,
        coordinates,
        t: p.t(),
        q,
        spectral_gap,
    })
}

/// Diffusion distance from the transition rows: the L2 distance between
/// rows i and j of `P^t`, weighted by the reciprocal degrees.
pub fn diffusion_distance_direct(
    p: &TransitionMatrix,
    deg: &DegreeVector,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = p.size();
    if i >= n || j >= n {
        return Err(Error::Index(format!(
            "sample indices ({i}, {j}) for {n} samples"
        )));
    }
    if deg.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "degree vector of length {} for {n} samples",
            deg.len()
        )));
    }
    let pt = p.powered();
    let mut acc = 0.0;
    for l in 0..n {
        let diff = pt[(i, l)] - pt[(j, l)];
        acc += diff * diff / deg.get(l);
    }
    Ok(acc.sqrt())
}

/// Diffusion distance from the spectral side: the Euclidean distance
/// between coordinate rows. Equals the direct form when the embedding
/// retains the full spectrum (`q = N - 1`).
pub fn diffusion_distance_spectral(emb: &DiffusionEmbedding, i: usize, j: usize) -> Result<f64> {
    let n = emb.num_samples();
    if i >= n || j >= n {
        return Err(Error::Index(format!(
            "sample indices ({i}, {j}) for {n} samples"
        )));
    }
    let mut acc = 0.0;
    for k in 0..emb.q() {
        let diff = emb.coordinates()[(i, k)] - emb.coordinates()[(j, k)];
        acc += diff * diff;
    }
    Ok(acc.sqrt())
}

/// 2-norm condition number of the `t`-step transition matrix, the ratio of
/// its extreme singular values. Infinite when the smallest is zero.
pub fn transition_condition_number(tm: &TransitionMatrix) -> Result<f64> {
    let powered = tm.powered();
    let (_, sigma, _) = linalg::thin_svd(&powered)?;
    let smallest = sigma[sigma.len() - 1];
    if smallest == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sigma[0] / smallest)
}

/// Parameters of the Grassmannian pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct GdmParams {
    /// Projection rank: dimension of the retained subspaces.
    pub p: usize,
    /// Number of nontrivial diffusion coordinates.
    pub q: usize,
    /// Diffusion time.
    pub t: u32,
    pub kernel: KernelKind,
    pub composition: CompositionRule,
}

impl GdmParams {
    pub fn new(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            t: 1,
            kernel: KernelKind::Projection,
            composition: CompositionRule::Sum,
        }
    }
}

/// Everything the Grassmannian pipeline produces, in input sample order.
#[derive(Debug, Clone)]
pub struct GdmOutput {
    pub embedding: DiffusionEmbedding,
    pub left_kernel: KernelMatrix,
    pub right_kernel: KernelMatrix,
    pub composed: KernelMatrix,
    pub degrees: DegreeVector,
    pub transition: TransitionMatrix,
}

/// Output of the conventional (Gaussian kernel on raw entries) pipeline.
#[derive(Debug, Clone)]
pub struct ConventionalOutput {
    pub embedding: DiffusionEmbedding,
    pub kernel: KernelMatrix,
    pub degrees: DegreeVector,
    pub transition: TransitionMatrix,
    /// Bandwidth actually used (given, or the median heuristic).
    pub epsilon: f64,
}

/// Grassmannian diffusion maps over a set of equally-shaped data matrices.
///
/// Each sample is projected through its rank-p thin SVD; projection or
/// Binet-Cauchy kernel matrices over the left and right spans are composed
/// by the given rule and pushed through the diffusion pipeline. Samples are
/// scaled to unit Frobenius norm before the SVD, which changes no span and
/// makes the embedding invariant to per-sample scaling down to roundoff.
pub fn grassmannian_diffusion_maps(
    data: &[DMatrix<f64>],
    params: &GdmParams,
) -> Result<GdmOutput> {
    let shape = validate_dataset(data)?;
    if params.p == 0 || params.p > shape.0.min(shape.1) {
        return Err(Error::Dimension(format!(
            "projection rank {} must satisfy 0 < p <= min{:?}",
            params.p, shape
        )));
    }
    let order = canonical_order(data);
    let inverse = invert_permutation(&order);

    let triplets: Vec<manifold::SvdTriplet> = order
        .par_iter()
        .map(|&idx| {
            let x = &data[idx];
            let norm = x.norm();
            if norm > 0.0 {
                manifold::project_svd(&(x / norm), params.p)
            } else {
                manifold::project_svd(x, params.p)
            }
        })
        .collect::<Result<_>>()?;
    let lefts: Vec<GrassmannPoint> = triplets.iter().map(|t| t.left.clone()).collect();
    let rights: Vec<GrassmannPoint> = triplets.iter().map(|t| t.right.clone()).collect();

    let left_kernel = kernels::build_kernel_matrix(&lefts, params.kernel)?;
    let right_kernel = kernels::build_kernel_matrix(&rights, params.kernel)?;
    let composed = kernels::compose_kernels(&left_kernel, &right_kernel, params.composition)?;

    let (degrees, transition, embedding) = diffuse(&composed, params.t, params.q)?;

    Ok(GdmOutput {
        embedding: scatter_embedding(&embedding, &inverse),
        left_kernel: scatter_kernel(&left_kernel, &inverse)?,
        right_kernel: scatter_kernel(&right_kernel, &inverse)?,
        composed: scatter_kernel(&composed, &inverse)?,
        degrees: scatter_degrees(&degrees, &inverse),
        transition: scatter_transition(&transition, &inverse),
    })
}

/// Conventional diffusion maps: Gaussian kernel on raw matrix entries.
///
/// With `epsilon` unset the median heuristic (median pairwise squared
/// distance over 4) fixes the bandwidth.
pub fn conventional_diffusion_maps(
    data: &[DMatrix<f64>],
    epsilon: Option<f64>,
    q: usize,
    t: u32,
) -> Result<ConventionalOutput> {
    validate_dataset(data)?;
    let order = canonical_order(data);
    let inverse = invert_permutation(&order);
    let canon: Vec<DMatrix<f64>> = order.iter().map(|&i| data[i].clone()).collect();

    let eps = match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidBandwidth(e)),
        None => kernels::median_bandwidth(&canon)?,
    };
    let kernel = kernels::build_gaussian_kernel_matrix(&canon, eps)?;
    let (degrees, transition, embedding) = diffuse(&kernel, t, q)?;

    Ok(ConventionalOutput {
        embedding: scatter_embedding(&embedding, &inverse),
        kernel: scatter_kernel(&kernel, &inverse)?,
        degrees: scatter_degrees(&degrees, &inverse),
        transition: scatter_transition(&transition, &inverse),
        epsilon: eps,
    })
}

fn diffuse(
    kernel: &KernelMatrix,
    t: u32,
    q: usize,
) -> Result<(DegreeVector, TransitionMatrix, DiffusionEmbedding)> {
    let degrees = degree_vector(kernel)?;
    let kappa = normalize_kernel(kernel, &degrees)?;
    let transition = transition_matrix(&kappa, t)?;
    let embedding = spectral_embedding(&transition, q)?;
    Ok((degrees, transition, embedding))
}

fn validate_dataset(data: &[DMatrix<f64>]) -> Result<(usize, usize)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("no data matrices".into()));
    }
    let shape = data[0].shape();
    for (i, x) in data.iter().enumerate() {
        if x.shape() != shape {
            return Err(Error::HeterogeneousShapes(format!(
                "sample {i} has shape {:?}, expected {:?}",
                x.shape(),
                shape
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
    }
    Ok(shape)
}

/// Sorts sample indices by entrywise total order on the matrix data, ties
/// broken by original index. Processing samples in this order makes every
/// downstream float operation independent of how the caller ordered the
/// input.
fn canonical_order(data: &[DMatrix<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        for (x, y) in data[a].iter().zip(data[b].iter()) {
            let c = x.total_cmp(y);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        a.cmp(&b)
    });
    order
}

fn invert_permutation(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; order.len()];
    for (pos, &idx) in order.iter().enumerate() {
        inv[idx] = pos;
    }
    inv
}

/// Maps canonical-order rows back to input order: row i of the result is
/// row `inv[i]` of the canonical matrix.
fn permute_rows(m: &DMatrix<f64>, inv: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, &src) in inv.iter().enumerate() {
        out.set_row(i, &m.row(src));
    }
    out
}

fn permute_square(m: &DMatrix<f64>, inv: &[usize]) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = m[(inv[i], inv[j])];
        }
    }
    out
}

fn scatter_kernel(k: &KernelMatrix, inv: &[usize]) -> Result<KernelMatrix> {
    KernelMatrix::new(permute_square(k.entries(), inv), k.label())
}

fn scatter_degrees(d: &DegreeVector, inv: &[usize]) -> DegreeVector {
    let values = DVector::from_iterator(d.len(), inv.iter().map(|&src| d.get(src)));
    DegreeVector { values }
}

fn scatter_transition(p: &TransitionMatrix, inv: &[usize]) -> TransitionMatrix {
    TransitionMatrix {
        one_step: permute_square(&p.one_step, inv),
        t: p.t,
        kappa_degrees: scatter_degrees(&p.kappa_degrees, inv),
    }
}

fn scatter_embedding(e: &DiffusionEmbedding, inv: &[usize]) -> DiffusionEmbedding {
    DiffusionEmbedding {
        eigenvalues: e.eigenvalues.clone(),
        eigenvectors: permute_rows(&e.eigenvectors, inv),
        coordinates: permute_rows(&e.coordinates, inv),
        t: e.t,
        q: e.q,
        spectral_gap: e.spectral_gap,
    }
}
