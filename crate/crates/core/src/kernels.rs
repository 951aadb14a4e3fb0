//! Grassmannian kernels and their sampling statistics.
//!
//! Two positive semi-definite subspace kernels, both functions of the
//! principal angles between spans:
//!
//! * projection kernel `k(a, b) = |a^T b|_F^2 = sum_i cos^2(theta_i)`,
//!   diagonal value p;
//! * Binet-Cauchy kernel `k(a, b) = det(a^T b)^2 = prod_i cos^2(theta_i)`,
//!   diagonal value 1, computed as a product of squared singular values so
//!   no explicit determinant is formed.
//!
//! For uniformly distributed subspaces the expected off-diagonal projection
//! kernel value is `p^2 / n`; the Binet-Cauchy expectation is bounded by
//! `(p/n)^p` below `p = n/2` and `((n-p)/n)^{n-p}` at or above it, with its
//! minimum near `p = n/2`. [`monte_carlo_offdiag_samples`] reproduces these
//! statistics against a fixed coordinate-block reference point.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{self, GrassmannPoint};

/// Max allowed asymmetry in a kernel matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// The two subspace kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Projection,
    BinetCauchy,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Projection => "projection",
            KernelKind::BinetCauchy => "binet-cauchy",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "projection" => Ok(KernelKind::Projection),
            "binet-cauchy" => Ok(KernelKind::BinetCauchy),
            other => Err(format!(
                "unknown kernel {other:?}; expected projection or binet-cauchy"
            )),
        }
    }
}

/// How the left-span and right-span kernel matrices combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionRule {
    LeftOnly,
    RightOnly,
    Sum,
    Hadamard,
}

impl CompositionRule {
    pub fn name(self) -> &'static str {
        match self {
            CompositionRule::LeftOnly => "left",
            CompositionRule::RightOnly => "right",
            CompositionRule::Sum => "sum",
            CompositionRule::Hadamard => "hadamard",
        }
    }
}

impl std::str::FromStr for CompositionRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "left" => Ok(CompositionRule::LeftOnly),
            "right" => Ok(CompositionRule::RightOnly),
            "sum" => Ok(CompositionRule::Sum),
            "hadamard" => Ok(CompositionRule::Hadamard),
            other => Err(format!(
                "unknown composition rule {other:?}; expected left, right, sum, or hadamard"
            )),
        }
    }
}

/// Provenance tag carried by a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelLabel {
    Projection,
    BinetCauchy,
    Gaussian { epsilon: f64 },
    Composed(CompositionRule),
}

impl std::fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelLabel::Projection => write!(f, "projection"),
            KernelLabel::BinetCauchy => write!(f, "binet-cauchy"),
            KernelLabel::Gaussian { epsilon } => write!(f, "gaussian(epsilon={epsilon})"),
            KernelLabel::Composed(rule) => write!(f, "composed({})", rule.name()),
        }
    }
}

/// Symmetric matrix of pairwise kernel evaluations.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    label: KernelLabel,
}

impl KernelMatrix {
    /// Validates squareness, finiteness, and symmetry within
    /// [`SYMMETRY_TOL`]. Positive semi-definiteness is a property of the
    /// kernels themselves and is checked by tests, not at construction.
    pub fn new(entries: DMatrix<f64>, label: KernelLabel) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "kernel matrix must be square, got {} x {}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("kernel matrix".into()));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::ShapeMismatch(format!(
                "kernel matrix is asymmetric by {asym:.3e}"
            )));
        }
        Ok(Self { entries, label })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn label(&self) -> KernelLabel {
        self.label
    }
}

/// Monte Carlo summary of off-diagonal kernel values on G(p, n).
#[derive(Debug, Clone, Serialize)]
pub struct KernelStats {
    pub kernel: KernelKind,
    pub n: usize,
    pub p: usize,
    pub samples: usize,
    /// Empirical mean of `k(reference, sample)` over uniform samples.
    pub mean: f64,
    /// Closed-form target: `p^2 / n` for the projection kernel, the
    /// Binet-Cauchy upper bound otherwise.
    pub predicted: f64,
    /// Upper bound on the expectation; only the Binet-Cauchy kernel has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Standard error of the mean; absent for single-sample runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// Kernel evaluation between two points on the same Grassmannian.
pub fn kernel_value(kind: KernelKind, a: &GrassmannPoint, b: &GrassmannPoint) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() || a.subspace_dim() != b.subspace_dim() {
        return Err(Error::ShapeMismatch(format!(
            "kernel arguments live on different Grassmannians: G({}, {}) vs G({}, {})",
            a.subspace_dim(),
            a.ambient_dim(),
            b.subspace_dim(),
            b.ambient_dim()
        )));
    }
    let f = a.basis().transpose() * b.basis();
    match kind {
        KernelKind::Projection => Ok(f.norm_squared()),
        KernelKind::BinetCauchy => {
            let (_, s, _) = linalg::thin_svd(&f)?;
            Ok(s.iter().map(|x| x * x).product())
        }
    }
}

/// Gaussian kernel on raw data matrices: `exp(-|x - y|_F^2 / (4 epsilon))`.
pub fn gaussian_kernel(x: &DMatrix<f64>, y: &DMatrix<f64>, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidBandwidth(epsilon));
    }
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gaussian kernel arguments have shapes {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let d2 = (x - y).norm_squared();
    Ok((-d2 / (4.0 * epsilon)).exp())
}

/// Pairwise kernel matrix over a point set. Entries above the diagonal are
/// computed in parallel and mirrored, so the result is exactly symmetric.
pub fn build_kernel_matrix(points: &[GrassmannPoint], kind: KernelKind) -> Result<KernelMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyDataset("kernel matrix over no points".into()));
    }
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| kernel_value(kind, &points[i], &points[j]))
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    let label = match kind {
        KernelKind::Projection => KernelLabel::Projection,
        KernelKind::BinetCauchy => KernelLabel::BinetCauchy,
    };
    KernelMatrix::new(entries, label)
}

/// Pairwise Gaussian kernel matrix over raw data matrices.
pub fn build_gaussian_kernel_matrix(
    data: &[DMatrix<f64>],
    epsilon: f64,
) -> Result<KernelMatrix> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("kernel matrix over no points".into()));
    }
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| gaussian_kernel(&data[i], &data[j], epsilon))
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    KernelMatrix::new(entries, KernelLabel::Gaussian { epsilon })
}

/// Default Gaussian bandwidth: median pairwise squared distance over 4.
pub fn median_bandwidth(data: &[DMatrix<f64>]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::EmptyDataset(
            "bandwidth heuristic needs at least two points".into(),
        ));
    }
    let mut d2 = Vec::with_capacity(data.len() * (data.len() - 1) / 2);
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            if data[i].shape() != data[j].shape() {
                return Err(Error::ShapeMismatch(
                    "bandwidth heuristic over mixed shapes".into(),
                ));
            }
            d2.push((&data[i] - &data[j]).norm_squared());
        }
    }
    let eps = linalg::median(&d2) / 4.0;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidBandwidth(eps));
    }
    Ok(eps)
}

/// Combines left-span and right-span kernel matrices.
pub fn compose_kernels(
    left: &KernelMatrix,
    right: &KernelMatrix,
    rule: CompositionRule,
) -> Result<KernelMatrix> {
    if left.size() != right.size() {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose kernel matrices of sizes {} and {}",
            left.size(),
            right.size()
        )));
    }
    let entries = match rule {
        CompositionRule::LeftOnly => left.entries().clone(),
        CompositionRule::RightOnly => right.entries().clone(),
        CompositionRule::Sum => left.entries() + right.entries(),
        CompositionRule::Hadamard => left.entries().component_mul(right.entries()),
    };
    KernelMatrix::new(entries, KernelLabel::Composed(rule))
}

/// Expected off-diagonal projection kernel value between uniform subspaces.
pub fn projection_offdiag_expectation(n: usize, p: usize) -> f64 {
    (p * p) as f64 / n as f64
}

/// Variance of `cos^2(theta)` between uniform lines in R^n (p = 1).
pub fn projection_p1_variance(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * (nf - 1.0) / (nf * nf * (nf + 2.0))
}

/// Upper bound on the expected off-diagonal Binet-Cauchy kernel value.
pub fn binet_cauchy_offdiag_bound(n: usize, p: usize) -> f64 {
    assert!(p > 0 && p < n, "bound defined for 0 < p < n");
    let nf = n as f64;
    if 2 * p < n {
        (p as f64 / nf).powi(p as i32)
    } else {
        let q = n - p;
        (q as f64 / nf).powi(q as i32)
    }
}

/// Kernel values between the coordinate-block reference point and uniform
/// samples, one per stream so results are independent of thread scheduling.
pub fn monte_carlo_offdiag_samples(
    kind: KernelKind,
    n: usize,
    p: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if p == 0 || p >= n {
        return Err(Error::Dimension(format!(
            "off-diagonal statistics need 0 < p < n, got p = {p}, n = {n}"
        )));
    }
    if samples == 0 {
        return Err(Error::EmptyDataset("zero Monte Carlo samples".into()));
    }
    let reference = GrassmannPoint::canonical(n, p)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let psi = manifold::sample_uniform(n, p, &mut rng)?;
            kernel_value(kind, &reference, &psi)
        })
        .collect()
}

/// Monte Carlo estimate of the expected off-diagonal kernel value, with the
/// matching closed-form prediction or bound.
pub fn monte_carlo_offdiag_mean(
    kind: KernelKind,
    n: usize,
    p: usize,
    samples: usize,
    seed: u64,
) -> Result<KernelStats> {
    let values = monte_carlo_offdiag_samples(kind, n, p, samples, seed)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std_error = if values.len() >= 2 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (values.len() - 1) as f64;
        Some((var / values.len() as f64).sqrt())
    } else {
        None
    };
    let (predicted, bound) = match kind {
        KernelKind::Projection => (projection_offdiag_expectation(n, p), None),
        KernelKind::BinetCauchy => {
            let b = binet_cauchy_offdiag_bound(n, p);
            (b, Some(b))
        }
    };
    Ok(KernelStats {
        kernel: kind,
        n,
        p,
        samples,
        mean,
        predicted,
        bound,
        std_error,
    })
}
