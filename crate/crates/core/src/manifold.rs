//! Grassmann manifold primitives.
//!
//! A point on G(p, n) is an equivalence class of n x p orthonormal bases
//! sharing a column span. All comparisons between points go through
//! principal angles, so the stored representative is free to differ by a
//! right rotation. Exp and log maps use the tangent-space SVD
//! parameterization: for a tangent `gamma = U S V^T` at base `psi`, the
//! geodesic is `span(psi V cos(tS) + U sin(tS))`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

/// Max deviation of a basis Gram matrix from the identity.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Relative singular-value cutoff below which a projection is rank deficient.
pub const RANK_REL_TOL: f64 = 1e-12;
/// Smallest singular value of `base^T target` for which the log map is
/// accepted; below this the target sits at the cut locus.
pub const CUT_LOCUS_TOL: f64 = 1e-10;
/// Max allowed overlap between a tangent matrix and its base point.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Orthonormal representative of a p-dimensional subspace of R^n.
///
/// `p = n` is admitted (the Grassmannian is then a single point); it shows
/// up as the right factor when projecting matrices with `m = p` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: DMatrix<f64>,
}

impl GrassmannPoint {
    /// Validates orthonormality within [`ORTHONORMAL_TOL`] and dimension
    /// bounds `0 < p <= n`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, p) = basis.shape();
        if p == 0 || p > n {
            return Err(Error::Dimension(format!(
                "subspace dimension {p} must satisfy 0 < p <= n = {n}"
            )));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Grassmann basis".into()));
        }
        let defect = linalg::gram_defect(&basis);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Self { basis })
    }

    /// The subspace spanned by the first `p` coordinate axes of R^n.
    pub fn canonical(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::Dimension(format!(
                "subspace dimension {p} must satisfy 0 < p <= n = {n}"
            )));
        }
        let mut basis = DMatrix::zeros(n, p);
        for i in 0..p {
            basis[(i, i)] = 1.0;
        }
        Ok(Self { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_basis(self) -> DMatrix<f64> {
        self.basis
    }
}

/// Rank-p thin SVD of a data matrix: `left * diag(s) * right^T`.
#[derive(Debug, Clone)]
pub struct SvdTriplet {
    pub left: GrassmannPoint,
    pub singular_values: Vec<f64>,
    pub right: GrassmannPoint,
}

/// Principal angles between two subspaces, nondecreasing in [0, pi/2].
#[derive(Debug, Clone)]
pub struct PrincipalAngleVector {
    angles: Vec<f64>,
}

impl PrincipalAngleVector {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Tangent matrix at a base point; columns are orthogonal to the base span.
#[derive(Debug, Clone)]
pub struct TangentVector {
    matrix: DMatrix<f64>,
    base: GrassmannPoint,
}

impl TangentVector {
    /// Validates shape agreement and tangency within [`TANGENCY_TOL`].
    pub fn new(matrix: DMatrix<f64>, base: GrassmannPoint) -> Result<Self> {
        if matrix.shape() != base.basis().shape() {
            return Err(Error::Dimension(format!(
                "tangent shape {:?} does not match base shape {:?}",
                matrix.shape(),
                base.basis().shape()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tangent matrix".into()));
        }
        let overlap = (base.basis().transpose() * &matrix).amax();
        if overlap > TANGENCY_TOL {
            return Err(Error::Dimension(format!(
                "matrix is not tangent at the base point: overlap {overlap:.3e}"
            )));
        }
        Ok(Self { matrix, base })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn base(&self) -> &GrassmannPoint {
        &self.base
    }

    /// Frobenius norm; equals the arc length of the geodesic it generates.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Scales the tangent in place by `t`, keeping the base point.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            matrix: &self.matrix * t,
            base: self.base.clone(),
        }
    }
}

/// Grassmann distance functions, all evaluated on principal angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Largest principal angle.
    Asimov,
    /// `sqrt(1 - prod cos^2(theta_i))`.
    BinetCauchy,
    /// `sqrt(sum theta_i^2)`, the geodesic arc length.
    ArcLength,
    /// `sqrt(sum sin^2 theta_i)`.
    Chordal,
    /// `2 sqrt(sum sin^2(theta_i / 2))`.
    Procrustes,
    /// Sine of the largest principal angle.
    Projection,
    /// `2 sin(theta_p / 2)`.
    Spectral,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Asimov,
        MetricKind::BinetCauchy,
        MetricKind::ArcLength,
        MetricKind::Chordal,
        MetricKind::Procrustes,
        MetricKind::Projection,
        MetricKind::Spectral,
    ];
}

/// Projects a data matrix onto the Grassmannian through its rank-p thin SVD.
///
/// The left factor spans the dominant column space, the right factor the
/// dominant row space. Fails with `RankDeficient` when the p-th singular
/// value falls below `RANK_REL_TOL` relative to the largest.
pub fn project_svd(x: &DMatrix<f64>, p: usize) -> Result<SvdTriplet> {
    let (n, m) = x.shape();
    if p == 0 || p > n.min(m) {
        return Err(Error::Dimension(format!(
            "projection rank {p} must satisfy 0 < p <= min(n, m) = {}",
            n.min(m)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection input".into()));
    }
    let (u, s, v) = linalg::thin_svd(x)?;
    let sigma_max = s[0];
    let threshold = RANK_REL_TOL * sigma_max;
    if sigma_max == 0.0 || s[p - 1] < threshold {
        return Err(Error::RankDeficient {
            index: p - 1,
            value: s[p - 1],
            threshold,
        });
    }
    let left = GrassmannPoint::new(u.columns(0, p).into_owned())?;
    let right = GrassmannPoint::new(v.columns(0, p).into_owned())?;
    Ok(SvdTriplet {
        left,
        singular_values: s.iter().take(p).copied().collect(),
        right,
    })
}

/// Principal angles between equal-dimension subspaces.
///
/// Cosines come from the SVD of `a^T b`. Angles whose cosine exceeds
/// 1/sqrt(2) are recomputed from the orthogonal complement
/// `b - a (a^T b)`, whose singular values are the matching sines; the sine
/// route keeps near-zero angles accurate at machine precision, where a bare
/// arccos would floor out near 1e-8.
pub fn principal_angles(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<PrincipalAngleVector> {
    check_same_manifold(a, b)?;
    let f = a.basis().transpose() * b.basis();
    let (_, cosines, _) = linalg::thin_svd(&f)?;
    let complement = b.basis() - a.basis() * &f;
    let (_, sines_desc, _) = linalg::thin_svd(&complement)?;

    let p = a.subspace_dim();
    let mut angles = Vec::with_capacity(p);
    for i in 0..p {
        let c = cosines[i].clamp(0.0, 1.0);
        // cosines descend, so the matching sine ascends from the tail.
        let s = sines_desc[p - 1 - i].clamp(0.0, 1.0);
        let theta = if c * c > 0.5 { s.asin() } else { c.acos() };
        angles.push(theta);
    }
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngleVector { angles })
}

/// Distance of the given kind, evaluated on principal angles.
pub fn distance(kind: MetricKind, a: &GrassmannPoint, b: &GrassmannPoint) -> Result<f64> {
    let thetas = principal_angles(a, b)?;
    Ok(distance_from_angles(kind, &thetas))
}

/// Same distances, reusing an already-computed angle vector.
pub fn distance_from_angles(kind: MetricKind, thetas: &PrincipalAngleVector) -> f64 {
    let angles = thetas.angles();
    let largest = *angles.last().expect("nonempty angle vector");
    match kind {
        MetricKind::Asimov => largest,
        MetricKind::BinetCauchy => {
            let prod: f64 = angles.iter().map(|t| t.cos().powi(2)).product();
            (1.0 - prod).max(0.0).sqrt()
        }
        MetricKind::ArcLength => angles.iter().map(|t| t * t).sum::<f64>().sqrt(),
        MetricKind::Chordal => angles.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt(),
        MetricKind::Procrustes => {
            2.0 * angles
                .iter()
                .map(|t| (t / 2.0).sin().powi(2))
                .sum::<f64>()
                .sqrt()
        }
        MetricKind::Projection => largest.sin(),
        MetricKind::Spectral => 2.0 * (largest / 2.0).sin(),
    }
}

/// Log map: the tangent at `base` whose geodesic reaches `target` at t = 1.
///
/// Computes `M = (target - base base^T target)(base^T target)^{-1}`, takes
/// its thin SVD `U S V^T`, and returns `U atan(S) V^T`. Fails with
/// `SingularProjection` when `base^T target` is singular (the target then
/// lies at the cut locus and the inverse is undefined).
pub fn log_map(base: &GrassmannPoint, target: &GrassmannPoint) -> Result<TangentVector> {
    check_same_manifold(base, target)?;
    let f = base.basis().transpose() * target.basis();
    let (fu, fs, fv) = linalg::thin_svd(&f)?;
    let smallest = fs[fs.len() - 1];
    if smallest < CUT_LOCUS_TOL {
        return Err(Error::SingularProjection { value: smallest });
    }
    let mut inv_s = DVector::zeros(fs.len());
    for i in 0..fs.len() {
        inv_s[i] = 1.0 / fs[i];
    }
    let f_inv = &fv * DMatrix::from_diagonal(&inv_s) * fu.transpose();
    let m = (target.basis() - base.basis() * &f) * f_inv;
    let (u, s, v) = linalg::thin_svd(&m)?;
    let atan_s = DVector::from_iterator(s.len(), s.iter().map(|x| x.atan()));
    let gamma = &u * DMatrix::from_diagonal(&atan_s) * v.transpose();
    TangentVector::new(gamma, base.clone())
}

/// Exp map: follows the geodesic generated by `tangent` for unit time.
pub fn exp_map(base: &GrassmannPoint, tangent: &TangentVector) -> Result<GrassmannPoint> {
    geodesic_from_tangent(base, tangent, 1.0)
}

/// Point at parameter `t` on the geodesic from `a` to `b`.
///
/// `t` must lie in [0, 1]; cut-locus failures propagate from the log map.
pub fn geodesic(a: &GrassmannPoint, b: &GrassmannPoint, t: f64) -> Result<GrassmannPoint> {
    assert!(
        (0.0..=1.0).contains(&t),
        "geodesic parameter {t} outside [0, 1]"
    );
    let gamma = log_map(a, b)?;
    geodesic_from_tangent(a, &gamma, t)
}

fn geodesic_from_tangent(
    base: &GrassmannPoint,
    tangent: &TangentVector,
    t: f64,
) -> Result<GrassmannPoint> {
    if tangent.base().basis().shape() != base.basis().shape() {
        return Err(Error::Dimension(
            "tangent base does not match the given base point".into(),
        ));
    }
    let (u, s, v) = linalg::thin_svd(tangent.matrix())?;
    let cos_ts = DVector::from_iterator(s.len(), s.iter().map(|x| (t * x).cos()));
    let sin_ts = DVector::from_iterator(s.len(), s.iter().map(|x| (t * x).sin()));
    let w = base.basis() * &v * DMatrix::from_diagonal(&cos_ts) * v.transpose()
        + &u * DMatrix::from_diagonal(&sin_ts) * v.transpose();
    // w is orthonormal up to roundoff; re-orthonormalize to keep repeated
    // exp calls from drifting past the Gram tolerance.
    GrassmannPoint::new(linalg::orthonormalize(&w))
}

/// Uniform (Haar) sample from G(p, n): QR of an n x p standard Gaussian
/// matrix with the R-diagonal sign correction.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<GrassmannPoint> {
    if p == 0 || p > n {
        return Err(Error::Dimension(format!(
            "cannot sample G({p}, {n}): need 0 < p <= n"
        )));
    }
    let gauss = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    GrassmannPoint::new(linalg::orthonormalize(&gauss))
}

fn check_same_manifold(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() || a.subspace_dim() != b.subspace_dim() {
        return Err(Error::Dimension(format!(
            "points live on different Grassmannians: G({}, {}) vs G({}, {})",
            a.subspace_dim(),
            a.ambient_dim(),
            b.subspace_dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}
