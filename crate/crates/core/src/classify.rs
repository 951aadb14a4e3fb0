//! Sparse-representation classification and clustering over diffusion
//! coordinates.
//!
//! Training coordinates form a dictionary `A` (one unit-norm column per
//! sample, columns grouped into contiguous class blocks). A test coordinate
//! vector `xi` is sparse-coded against `A` by l1 minimization, either
//!
//! * unconstrained: `min |A c - xi|^2 + beta |c|_1`, solved by accelerated
//!   proximal gradient descent with adaptive restart, or
//! * constrained: `min |c|_1 subject to |A c - xi|^2 <= epsilon`, solved by
//!   bisection on the penalty weight of the unconstrained problem.
//!
//! The predicted class minimizes the residual `|A c_k - xi|` over per-class
//! coefficient masks `c_k`, or maximizes the absolute coefficient.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffusion::{self, GdmParams};
use crate::error::{Error, Result};
use crate::linalg;

/// Max deviation of dictionary column norms from one.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Columns below this norm cannot be normalized.
pub const ZERO_COLUMN_TOL: f64 = 1e-14;
/// Subgradient residual at which an l1 solution counts as converged.
pub const KKT_TOL: f64 = 1e-6;
/// Internal convergence target, kept below [`KKT_TOL`] for headroom.
const KKT_INTERNAL_TOL: f64 = 1e-9;
/// Coefficients above this magnitude count as nonzero in reports.
pub const NNZ_TOL: f64 = 1e-12;
/// Default iteration cap for the l1 solvers.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Default penalty weight for the unconstrained solver.
pub const DEFAULT_BETA: f64 = 1e-3;
/// Default residual budget for the constrained solver.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Lloyd restarts inside [`kmeans`], all seeded from the caller's seed.
const KMEANS_RESTARTS: u64 = 8;

/// Which l1 formulation the classifier solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Unconstrained,
    Constrained,
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unconstrained" => Ok(SolverKind::Unconstrained),
            "constrained" => Ok(SolverKind::Constrained),
            other => Err(format!(
                "unknown solver {other:?}; expected unconstrained or constrained"
            )),
        }
    }
}

/// How the predicted class is chosen from a sparse code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionCriterion {
    /// Class whose masked reconstruction has the smallest residual.
    MinResidual,
    /// Class owning the largest-magnitude coefficient.
    MaxCoefficient,
}

impl std::str::FromStr for DecisionCriterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min-residual" => Ok(DecisionCriterion::MinResidual),
            "max-coefficient" => Ok(DecisionCriterion::MaxCoefficient),
            other => Err(format!(
                "unknown criterion {other:?}; expected min-residual or max-coefficient"
            )),
        }
    }
}

/// Unit-column dictionary with contiguous class blocks.
#[derive(Debug, Clone)]
pub struct SparseDictionary {
    matrix: DMatrix<f64>,
    blocks: Vec<(String, Range<usize>)>,
    column_norms: Vec<f64>,
}

impl SparseDictionary {
    /// `q x N` matrix of normalized atoms.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Class labels with their column ranges, in sorted label order.
    pub fn blocks(&self) -> &[(String, Range<usize>)] {
        &self.blocks
    }

    /// Norms the columns had before normalization; coefficients on the
    /// normalized atoms divide by these to apply to the raw atoms.
    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn num_atoms(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn coordinate_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Class label owning the given column.
    pub fn class_of_column(&self, col: usize) -> Option<&str> {
        self.blocks
            .iter()
            .find(|(_, r)| r.contains(&col))
            .map(|(label, _)| label.as_str())
    }

    /// Sparse coding is only well posed with more atoms than coordinates.
    pub fn is_underdetermined(&self) -> bool {
        self.num_atoms() > self.coordinate_dim()
    }
}

/// Output of the l1 solvers.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub coefficients: DVector<f64>,
    /// `|A c - xi|_2` at the returned coefficients.
    pub residual_norm: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the subgradient
    /// residual dropped below [`KKT_TOL`]; the best iterate is still
    /// returned.
    pub converged: bool,
    /// Penalty weight the solution was computed at. For the constrained
    /// solver this is the weight found by bisection.
    pub beta: f64,
}

/// Classification outcome for a single test sample.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationResult {
    pub predicted: String,
    pub criterion: DecisionCriterion,
    /// Per-class reconstruction residuals.
    pub residuals: BTreeMap<String, f64>,
    /// Number of coefficients with magnitude above [`NNZ_TOL`].
    pub coefficients_nnz: usize,
}

/// K-means clustering result.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    /// Cluster index per sample, each in `0..k`; every cluster is nonempty.
    pub assignments: Vec<usize>,
    /// `k x d` centroid matrix.
    pub centroids: DMatrix<f64>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
}

/// Builds the classification dictionary from training coordinates (one row
/// per sample) and their labels. Columns are grouped by class in sorted
/// label order, preserving training order within each class, and scaled to
/// unit l2 norm.
pub fn build_dictionary(coords: &DMatrix<f64>, labels: &[String]) -> Result<SparseDictionary> {
    let n = coords.nrows();
    if n == 0 {
        return Err(Error::EmptyClass("no training samples".into()));
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {n} training rows",
            labels.len()
        )));
    }
    let q = coords.ncols();
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();

    let mut matrix = DMatrix::zeros(q, n);
    let mut column_norms = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(classes.len());
    let mut col = 0usize;
    for class in &classes {
        let start = col;
        for (row, label) in labels.iter().enumerate() {
            if label != class {
                continue;
            }
            let atom = coords.row(row).transpose();
            let norm = atom.norm();
            if norm < ZERO_COLUMN_TOL {
                return Err(Error::ZeroColumn(col));
            }
            matrix.set_column(col, &(atom / norm));
            column_norms.push(norm);
            col += 1;
        }
        if col == start {
            return Err(Error::EmptyClass(class.clone()));
        }
        blocks.push((class.clone(), start..col));
    }
    if !blocks.is_empty() && matrix.ncols() <= matrix.nrows() {
        log::warn!(
            "dictionary is not underdetermined ({} atoms, {} coordinates); sparse codes may be dense",
            matrix.ncols(),
            matrix.nrows()
        );
    }
    Ok(SparseDictionary {
        matrix,
        blocks,
        column_norms,
    })
}

fn soft_threshold(v: &mut DVector<f64>, tau: f64) {
    for x in v.iter_mut() {
        let a = x.abs() - tau;
        *x = if a > 0.0 { a * x.signum() } else { 0.0 };
    }
}

/// Max violation of the lasso optimality conditions at `c`:
/// `|a_i^T (A c - xi) + (beta/2) sign(c_i)|` on the support and the excess
/// of `|a_i^T (A c - xi)|` over `beta/2` off it.
pub fn kkt_residual(a: &DMatrix<f64>, c: &DVector<f64>, xi: &DVector<f64>, beta: f64) -> f64 {
    let g = a.transpose() * (a * c - xi);
    let half = beta / 2.0;
    let mut worst = 0.0f64;
    for i in 0..c.len() {
        let v = if c[i] != 0.0 {
            (g[i] + half * c[i].signum()).abs()
        } else {
            (g[i].abs() - half).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Lasso objective `|A c - xi|^2 + beta |c|_1`.
pub fn lasso_objective(a: &DMatrix<f64>, c: &DVector<f64>, xi: &DVector<f64>, beta: f64) -> f64 {
    (a * c - xi).norm_squared() + beta * c.iter().map(|x| x.abs()).sum::<f64>()
}

/// Accelerated proximal gradient descent on the lasso objective, from a
/// warm-start iterate. Restarts the momentum whenever it opposes descent.
fn lasso_from(
    a: &DMatrix<f64>,
    xi: &DVector<f64>,
    beta: f64,
    max_iter: usize,
    start: DVector<f64>,
) -> Result<SparseSolution> {
    assert!(beta > 0.0 && beta.is_finite(), "penalty weight must be positive");
    if a.nrows() != xi.len() {
        return Err(Error::ShapeMismatch(format!(
            "dictionary has {} rows, target has {}",
            a.nrows(),
            xi.len()
        )));
    }
    let (_, sigma, _) = linalg::thin_svd(a)?;
    let sigma_max = sigma[0];
    if sigma_max == 0.0 {
        // Zero operator: the penalty alone drives everything to zero.
        return Ok(SparseSolution {
            coefficients: DVector::zeros(a.ncols()),
            residual_norm: xi.norm(),
            iterations: 0,
            converged: true,
            beta,
        });
    }
    let step = 1.0 / (2.0 * sigma_max * sigma_max);
    let tau = step * beta;

    let mut c = start;
    let mut y = c.clone();
    let mut theta = 1.0f64;
    let mut iterations = 0;
    let mut converged = kkt_residual(a, &c, xi, beta) <= KKT_INTERNAL_TOL;

    while !converged && iterations < max_iter {
        iterations += 1;
        let grad = a.transpose() * (a * &y - xi) * 2.0;
        let mut c_next = &y - grad * step;
        soft_threshold(&mut c_next, tau);
        // Momentum restart when the update moves against the last step.
        if (&y - &c_next).dot(&(&c_next - &c)) > 0.0 {
            theta = 1.0;
            let grad = a.transpose() * (a * &c - xi) * 2.0;
            c_next = &c - grad * step;
            soft_threshold(&mut c_next, tau);
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        y = &c_next + (&c_next - &c) * ((theta - 1.0) / theta_next);
        c = c_next;
        theta = theta_next;
        if iterations % 8 == 0 || iterations == max_iter {
            converged = kkt_residual(a, &c, xi, beta) <= KKT_INTERNAL_TOL;
        }
    }
    if !converged {
        converged = kkt_residual(a, &c, xi, beta) <= KKT_TOL;
    }
    let residual_norm = (a * &c - xi).norm();
    Ok(SparseSolution {
        coefficients: c,
        residual_norm,
        iterations,
        converged,
        beta,
    })
}

/// Penalized l1 sparse coding over a raw matrix: `min |A c - xi|^2 +
/// beta |c|_1`. Returns the best iterate with `converged = false` when the
/// iteration cap is exhausted first.
pub fn lasso(
    a: &DMatrix<f64>,
    xi: &DVector<f64>,
    beta: f64,
    max_iter: usize,
) -> Result<SparseSolution> {
    lasso_from(a, xi, beta, max_iter, DVector::zeros(a.ncols()))
}

/// Unconstrained sparse coding against a dictionary.
pub fn solve_l1_unconstrained(
    dict: &SparseDictionary,
    xi: &DVector<f64>,
    beta: f64,
) -> Result<SparseSolution> {
    lasso(dict.matrix(), xi, beta, DEFAULT_MAX_ITER)
}

/// Constrained sparse coding over a raw matrix:
/// `min |c|_1 subject to |A c - xi|^2 <= epsilon`.
///
/// The residual of the penalized problem grows monotonically with the
/// penalty weight, so bisection on that weight finds the solution whose
/// residual sits just inside the budget; the constraint is active (residual
/// squared in `[0.9 epsilon, epsilon]`) unless the zero vector is already
/// optimal. Infeasible budgets (below the least-squares residual) error.
pub fn lasso_constrained(
    a: &DMatrix<f64>,
    xi: &DVector<f64>,
    epsilon: f64,
    max_iter: usize,
) -> Result<SparseSolution> {
    assert!(
        epsilon > 0.0 && epsilon.is_finite(),
        "residual budget must be positive"
    );
    if a.nrows() != xi.len() {
        return Err(Error::ShapeMismatch(format!(
            "dictionary has {} rows, target has {}",
            a.nrows(),
            xi.len()
        )));
    }
    // Least-squares residual bounds what any coefficient vector can reach.
    let (u, sigma, _) = linalg::thin_svd(a)?;
    let rank_tol = sigma[0] * 1e-12;
    let mut projected = DVector::zeros(xi.len());
    for k in 0..sigma.len() {
        if sigma[k] > rank_tol {
            let uk = u.column(k);
            projected += uk * uk.dot(xi);
        }
    }
    let ls_residual_sq = (xi - &projected).norm_squared();
    if ls_residual_sq > epsilon {
        return Err(Error::Infeasible {
            residual: ls_residual_sq,
            epsilon,
        });
    }
    // The zero vector is optimal whenever it is feasible.
    if xi.norm_squared() <= epsilon {
        let beta_zero = 2.0 * (a.transpose() * xi).amax();
        return Ok(SparseSolution {
            coefficients: DVector::zeros(a.ncols()),
            residual_norm: xi.norm(),
            iterations: 0,
            converged: true,
            beta: beta_zero.max(f64::MIN_POSITIVE),
        });
    }

    // Above beta_hi the penalized solution is exactly zero (its residual
    // exceeds the budget, checked above), so [beta_lo, beta_hi] brackets
    // the active constraint.
    let beta_hi_limit = 2.0 * (a.transpose() * xi).amax();
    let mut hi = beta_hi_limit;
    let mut lo = beta_hi_limit * 1e-14;
    let mut current = lasso(a, xi, lo, max_iter)?;
    if current.residual_norm.powi(2) > epsilon {
        // Even a near-zero penalty cannot meet the budget; the least-squares
        // check above makes this unreachable short of roundoff.
        return Err(Error::Infeasible {
            residual: current.residual_norm.powi(2),
            epsilon,
        });
    }
    let mut total_iterations = current.iterations;
    for _ in 0..200 {
        let r2 = current.residual_norm.powi(2);
        if r2 >= 0.9 * epsilon && r2 <= epsilon {
            break;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let trial = lasso_from(a, xi, mid, max_iter, current.coefficients.clone())?;
        total_iterations += trial.iterations;
        if trial.residual_norm.powi(2) > epsilon {
            hi = mid;
        } else {
            lo = mid;
            current = trial;
        }
    }
    current.iterations = total_iterations;
    Ok(current)
}

/// Constrained sparse coding against a dictionary.
pub fn solve_l1_constrained(
    dict: &SparseDictionary,
    xi: &DVector<f64>,
    epsilon: f64,
) -> Result<SparseSolution> {
    lasso_constrained(dict.matrix(), xi, epsilon, DEFAULT_MAX_ITER)
}

/// Residual `|A (mask_k . c) - xi|_2` for every class block `k`, in block
/// order.
pub fn residuals_per_class(
    dict: &SparseDictionary,
    solution: &SparseSolution,
    xi: &DVector<f64>,
) -> Vec<(String, f64)> {
    dict.blocks()
        .iter()
        .map(|(label, range)| {
            let mut recon = DVector::zeros(dict.coordinate_dim());
            for col in range.clone() {
                recon += dict.matrix().column(col) * solution.coefficients[col];
            }
            (label.clone(), (recon - xi).norm())
        })
        .collect()
}

/// Classifier configuration: embedding parameters plus solver choices.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyParams {
    pub gdm: GdmParams,
    pub solver: SolverKind,
    pub criterion: DecisionCriterion,
    /// Penalty weight for the unconstrained solver.
    pub beta: f64,
    /// Residual budget for the constrained solver.
    pub epsilon: f64,
    /// Proximal-iteration budget per solve. Penalties near or below the
    /// subgradient tolerance need more iterations than the default.
    pub max_iter: usize,
}

impl ClassifyParams {
    pub fn new(gdm: GdmParams) -> Self {
        Self {
            gdm,
            solver: SolverKind::Unconstrained,
            criterion: DecisionCriterion::MinResidual,
            beta: DEFAULT_BETA,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Classifies one test sample by re-embedding it jointly with the training
/// set, sparse coding its (unit-normalized) diffusion coordinates against
/// the training dictionary, and comparing per-class residuals.
pub fn classify(
    train: &[DMatrix<f64>],
    labels: &[String],
    test: &DMatrix<f64>,
    params: &ClassifyParams,
) -> Result<ClassificationResult> {
    let results = classify_batch(train, labels, std::slice::from_ref(test), params)?;
    Ok(results.into_iter().next().expect("one test sample"))
}

/// Classifies a batch of test samples from a single joint embedding.
///
/// All test samples share one diffusion map over `N + M` points. For the
/// per-sample protocol (a fresh `N + 1` embedding per query) call
/// [`classify`] once per sample.
pub fn classify_batch(
    train: &[DMatrix<f64>],
    labels: &[String],
    tests: &[DMatrix<f64>],
    params: &ClassifyParams,
) -> Result<Vec<ClassificationResult>> {
    if train.is_empty() {
        return Err(Error::EmptyClass("no training samples".into()));
    }
    if labels.len() != train.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} training samples",
            labels.len(),
            train.len()
        )));
    }
    if tests.is_empty() {
        return Err(Error::EmptyDataset("no test samples".into()));
    }
    let n = train.len();
    let mut augmented: Vec<DMatrix<f64>> = train.to_vec();
    augmented.extend(tests.iter().cloned());
    let out = diffusion::grassmannian_diffusion_maps(&augmented, &params.gdm)?;
    let coords = out.embedding.coordinates();

    let train_coords = coords.rows(0, n).into_owned();
    let dict = build_dictionary(&train_coords, labels)?;

    let mut results = Vec::with_capacity(tests.len());
    for (idx, _) in tests.iter().enumerate() {
        let raw = coords.row(n + idx).transpose();
        let norm = raw.norm();
        if norm < ZERO_COLUMN_TOL {
            return Err(Error::DegenerateData(format!(
                "test sample {idx} embeds at the origin of the diffusion space"
            )));
        }
        let xi = raw / norm;
        let solution = match params.solver {
            SolverKind::Unconstrained => {
                lasso(dict.matrix(), &xi, params.beta, params.max_iter)?
            }
            SolverKind::Constrained => {
                lasso_constrained(dict.matrix(), &xi, params.epsilon, params.max_iter)?
            }
        };
        let residuals = residuals_per_class(&dict, &solution, &xi);
        let predicted = match params.criterion {
            DecisionCriterion::MinResidual => {
                residuals
                    .iter()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("at least one class")
                    .0
                    .clone()
            }
            DecisionCriterion::MaxCoefficient => {
                let mut best_col = 0usize;
                let mut best_mag = -1.0f64;
                for i in 0..solution.coefficients.len() {
                    let mag = solution.coefficients[i].abs();
                    if mag > best_mag {
                        best_mag = mag;
                        best_col = i;
                    }
                }
                dict.class_of_column(best_col)
                    .expect("column belongs to a block")
                    .to_string()
            }
        };
        let coefficients_nnz = solution
            .coefficients
            .iter()
            .filter(|x| x.abs() > NNZ_TOL)
            .count();
        results.push(ClassificationResult {
            predicted,
            criterion: params.criterion,
            residuals: residuals.into_iter().collect(),
            coefficients_nnz,
        });
    }
    Ok(results)
}

/// K-means over coordinate rows with distance-weighted seeding and Lloyd
/// iteration, deterministic for a fixed seed. Runs a handful of internally
/// seeded restarts and keeps the lowest-inertia result. Ties in assignment
/// break to the lowest centroid index; empty clusters re-seed at the point
/// farthest from its centroid.
pub fn kmeans(
    coords: &DMatrix<f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    let mut best: Option<ClusterAssignment> = None;
    for restart in 0..KMEANS_RESTARTS {
        let (candidate, _) = kmeans_single(coords, k, seed, restart, max_iter)?;
        let better = match &best {
            None => true,
            Some(b) => candidate.inertia < b.inertia,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// One seeded k-means run; also returns the per-iteration inertia trace.
pub fn kmeans_single(
    coords: &DMatrix<f64>,
    k: usize,
    seed: u64,
    stream: u64,
    max_iter: usize,
) -> Result<(ClusterAssignment, Vec<f64>)> {
    let n = coords.nrows();
    let d = coords.ncols();
    if k == 0 || n == 0 {
        return Err(Error::DegenerateData(format!(
            "k-means needs k >= 1 and data, got k = {k}, n = {n}"
        )));
    }
    if distinct_rows(coords) < k {
        return Err(Error::DegenerateData(format!(
            "fewer than k = {k} distinct points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    // Distance-weighted seeding.
    let mut centroids = DMatrix::zeros(k, d);
    let first = rng.gen_range(0..n);
    centroids.set_row(0, &coords.row(first));
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| (coords.row(i) - centroids.row(0)).norm_squared())
        .collect();
    for c in 1..k {
        let total: f64 = min_d2.iter().sum();
        let mut next = n - 1;
        if total > 0.0 {
            let mut u = rng.gen_range(0.0..total);
            for (i, &w) in min_d2.iter().enumerate() {
                if u < w {
                    next = i;
                    break;
                }
                u -= w;
            }
        }
        centroids.set_row(c, &coords.row(next));
        for i in 0..n {
            let d2 = (coords.row(i) - centroids.row(c)).norm_squared();
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    loop {
        // Assignment step.
        let mut changed = false;
        let mut inertia = 0.0;
        for i in 0..n {
            let mut best_c = 0usize;
            let mut best_d2 = f64::INFINITY;
            for c in 0..k {
                let d2 = (coords.row(i) - centroids.row(c)).norm_squared();
                if d2 < best_d2 {
                    best_d2 = d2;
                    best_c = c;
                }
            }
            if assignments[i] != best_c {
                changed = true;
                assignments[i] = best_c;
            }
            inertia += best_d2;
        }
        inertia_trace.push(inertia);
        if (!changed && iterations > 0) || iterations >= max_iter {
            let final_inertia = inertia;
            return Ok((
                ClusterAssignment {
                    assignments,
                    centroids,
                    inertia: final_inertia,
                    iterations,
                },
                inertia_trace,
            ));
        }
        iterations += 1;

        // Update step.
        let mut counts = vec![0usize; k];
        let mut sums = DMatrix::zeros(k, d);
        for i in 0..n {
            counts[assignments[i]] += 1;
            let row = sums.row(assignments[i]) + coords.row(i);
            sums.set_row(assignments[i], &row);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.set_row(c, &(sums.row(c) / counts[c] as f64));
            } else {
                // Re-seed an empty cluster at the point farthest from its
                // current centroid.
                let mut far_i = 0usize;
                let mut far_d2 = -1.0f64;
                for i in 0..n {
                    let d2 =
                        (coords.row(i) - centroids.row(assignments[i])).norm_squared();
                    if d2 > far_d2 {
                        far_d2 = d2;
                        far_i = i;
                    }
                }
                centroids.set_row(c, &coords.row(far_i));
            }
        }
    }
}

fn distinct_rows(coords: &DMatrix<f64>) -> usize {
    let mut rows: Vec<Vec<u64>> = (0..coords.nrows())
        .map(|i| coords.row(i).iter().map(|x| x.to_bits()).collect())
        .collect();
    rows.sort();
    rows.dedup();
    rows.len()
}

/// Adjusted Rand index between two labelings of the same samples; 1 for
/// identical partitions, near 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same samples");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        table[a[i]][b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut sum_ij = 0.0;
    let mut row_sums = vec![0u64; ka];
    let mut col_sums = vec![0u64; kb];
    for i in 0..ka {
        for j in 0..kb {
            sum_ij += choose2(table[i][j]);
            row_sums[i] += table[i][j];
            col_sums[j] += table[i][j];
        }
    }
    let sum_a: f64 = row_sums.iter().map(|&x| choose2(x)).sum();
    let sum_b: f64 = col_sums.iter().map(|&x| choose2(x)).sum();
    let total = choose2(n as u64);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}
