//! Synthetic dataset generators and matrix file ingestion.
//!
//! Generators are pure functions of their parameters and seed: the same
//! seed yields a bitwise-identical dataset. Loaders reject malformed input
//! (ragged rows, non-finite tokens, truncated rasters) instead of
//! sanitizing it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points on the two-cone surface `sin(phi) = cos^2(theta)` with radius
/// drawn uniformly from `[0, 2]`.
#[derive(Debug, Clone)]
pub struct SphereConesDataset {
    points: DMatrix<f64>,
    magnitudes: Vec<f64>,
}

impl SphereConesDataset {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    /// `N x 3` Cartesian coordinates.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    /// Radii the points were drawn at; equal to the row norms.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Each point as a `3 x 1` matrix, ready for subspace projection.
    pub fn samples(&self) -> Vec<DMatrix<f64>> {
        (0..self.len())
            .map(|i| DMatrix::from_fn(3, 1, |r, _| self.points[(i, r)]))
            .collect()
    }
}

/// Symmetric rank-`p` fields `X = U A U^T` built from a discrete cosine
/// basis with random shift `T`, frequency offset `L`, and diagonal `A`.
#[derive(Debug, Clone)]
pub struct RandomFieldDataset {
    samples: Vec<DMatrix<f64>>,
    t_values: Vec<usize>,
    l_values: Vec<usize>,
    a_diagonals: DMatrix<f64>,
}

impl RandomFieldDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn t_values(&self) -> &[usize] {
        &self.t_values
    }

    pub fn l_values(&self) -> &[usize] {
        &self.l_values
    }

    /// `N x p` matrix of the diagonals of `A`, one row per sample.
    pub fn a_diagonals(&self) -> &DMatrix<f64> {
        &self.a_diagonals
    }
}

/// Matrices grouped by class label, loaded from a directory-per-class tree.
#[derive(Debug, Clone)]
pub struct LabeledMatrixDataset {
    samples: Vec<DMatrix<f64>>,
    labels: Vec<String>,
    classes: Vec<String>,
    shape: (usize, usize),
    root: PathBuf,
}

impl LabeledMatrixDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct class labels in load order (lexicographic).
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Common `(rows, cols)` shape of every sample.
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn manifest(&self) -> DatasetManifest {
        let mut counts = BTreeMap::new();
        for label in &self.labels {
            *counts.entry(label.clone()).or_insert(0usize) += 1;
        }
        DatasetManifest {
            root: self.root.display().to_string(),
            classes: self.classes.clone(),
            counts,
            shape: [self.shape.0, self.shape.1],
        }
    }
}

/// Summary of a loaded dataset, serialized alongside run artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: String,
    pub classes: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub shape: [usize; 2],
}

/// Draws `count` points on the two-cone surface: azimuth `theta` uniform
/// on `[0, 2 pi)`, elevation `phi = asin(cos^2 theta)`, radius uniform on
/// `[0, 2]`. Row norms equal the drawn radii.
pub fn gen_sphere_cones(count: usize, seed: u64) -> SphereConesDataset {
    assert!(count >= 1, "sphere dataset needs at least one point");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DMatrix::zeros(count, 3);
    let mut magnitudes = Vec::with_capacity(count);
    for i in 0..count {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r: f64 = rng.gen_range(0.0..=2.0);
        let phi = (theta.cos() * theta.cos()).asin();
        points[(i, 0)] = r * phi.cos() * theta.cos();
        points[(i, 1)] = r * phi.cos() * theta.sin();
        points[(i, 2)] = r * phi.sin();
        magnitudes.push(r);
    }
    SphereConesDataset { points, magnitudes }
}

/// The `n x p` shifted discrete cosine block with entries
/// `sqrt(2/n) cos(2 pi (j + l)(i - t) / n)` for row `i`, column `j`.
///
/// Columns are orthonormal whenever every frequency `j + l` stays strictly
/// below `n / 2`; at the boundary frequency `n / 2` (reachable at the top
/// of the valid `l` range for even `n`) the last column has norm `sqrt 2`.
/// The column span is unaffected either way.
pub fn cosine_basis(n: usize, p: usize, t: usize, l: usize) -> DMatrix<f64> {
    assert!(p >= 1 && p <= n, "basis needs 1 <= p <= n");
    assert!(l >= 1, "frequency offset starts at 1");
    let scale = (2.0 / n as f64).sqrt();
    DMatrix::from_fn(n, p, |i, j| {
        let freq = (j + l) as f64;
        let arg = std::f64::consts::TAU * freq * (i as f64 - t as f64) / n as f64;
        scale * arg.cos()
    })
}

/// One field `X = U A U^T` from explicit parameters. `a_diag` supplies the
/// `p` diagonal entries of `A`.
pub fn random_field_sample(n: usize, a_diag: &[f64], t: usize, l: usize) -> DMatrix<f64> {
    let p = a_diag.len();
    let u = cosine_basis(n, p, t, l);
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(a_diag));
    &u * a * u.transpose()
}

fn validate_field_params(count: usize, n: usize, m: usize, p: usize) -> Result<usize> {
    if n != m {
        return Err(Error::Dimension(format!(
            "fields are square by construction; got n = {n}, m = {m}"
        )));
    }
    if count == 0 {
        return Err(Error::EmptyDataset("field dataset needs at least one sample".into()));
    }
    if p < 1 || p > n / 2 {
        return Err(Error::Dimension(format!(
            "rank p = {p} outside [1, {}] for n = {n}",
            n / 2
        )));
    }
    // Largest offset keeping every frequency j + l within [1, n/2].
    Ok(n / 2 + 1 - p)
}

fn gen_fields_from_l_draw(
    count: usize,
    n: usize,
    p: usize,
    seed: u64,
    mut draw_l: impl FnMut(&mut ChaCha8Rng) -> usize,
) -> RandomFieldDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut t_values = Vec::with_capacity(count);
    let mut l_values = Vec::with_capacity(count);
    let mut a_diagonals = DMatrix::zeros(count, p);
    for k in 0..count {
        let mut a_diag = vec![0.0; p];
        for (j, a) in a_diag.iter_mut().enumerate() {
            // 1 - U[0,1) lands in (0, 1].
            *a = 1.0 - rng.gen::<f64>();
            a_diagonals[(k, j)] = *a;
        }
        let t = rng.gen_range(0..n);
        let l = draw_l(&mut rng);
        samples.push(random_field_sample(n, &a_diag, t, l));
        t_values.push(t);
        l_values.push(l);
    }
    RandomFieldDataset {
        samples,
        t_values,
        l_values,
        a_diagonals,
    }
}

/// Generates `count` random fields with `A` diagonals i.i.d. uniform on
/// `(0, 1]`, `T` uniform on `[0, n-1]`, and `L` uniform on
/// `[1, n/2 + 1 - p]`. Requires `n = m` and `1 <= p <= n/2`.
pub fn gen_random_field(
    count: usize,
    n: usize,
    m: usize,
    p: usize,
    seed: u64,
) -> Result<RandomFieldDataset> {
    let l_max = validate_field_params(count, n, m, p)?;
    Ok(gen_fields_from_l_draw(count, n, p, seed, |rng| {
        rng.gen_range(1..=l_max)
    }))
}

/// Generates random fields with `L` drawn uniformly from an explicit set of
/// offsets instead of the full valid range. Used by experiments that pin
/// the number of distinct frequency groups.
pub fn gen_random_field_with_l(
    count: usize,
    n: usize,
    m: usize,
    p: usize,
    l_choices: &[usize],
    seed: u64,
) -> Result<RandomFieldDataset> {
    let l_max = validate_field_params(count, n, m, p)?;
    if l_choices.is_empty() {
        return Err(Error::EmptyDataset("no frequency offsets to draw from".into()));
    }
    if let Some(&bad) = l_choices.iter().find(|&&l| l < 1 || l > l_max) {
        return Err(Error::Dimension(format!(
            "frequency offset {bad} outside [1, {l_max}] for n = {n}, p = {p}"
        )));
    }
    Ok(gen_fields_from_l_draw(count, n, p, seed, |rng| {
        l_choices[rng.gen_range(0..l_choices.len())]
    }))
}

/// Kolmogorov-Smirnov statistic of `values` against the uniform law on
/// `[lo, hi]`.
pub fn ks_statistic_uniform(values: &[f64], lo: f64, hi: f64) -> f64 {
    assert!(!values.is_empty() && hi > lo);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        let above = (i as f64 + 1.0) / n - cdf;
        let below = cdf - i as f64 / n;
        worst = worst.max(above.abs()).max(below.abs());
    }
    worst
}

/// Reads a rectangular comma-separated matrix. Blank lines and lines
/// starting with `#` are skipped; tokens must parse as finite floats.
pub fn load_csv_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (col_no, token) in trimmed.split(',').enumerate() {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line_no + 1,
                column: col_no + 1,
                message: format!("invalid number {token:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line_no + 1,
                    column: col_no + 1,
                    message: format!("non-finite value {token:?}"),
                });
            }
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::RaggedRows {
                    path: path.to_path_buf(),
                    row: line_no + 1,
                    found: row.len(),
                    expected: w,
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    let (r, c) = (rows.len(), width.unwrap());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Writes a matrix as CSV with 17 significant digits, enough for an exact
/// read-back.
pub fn write_csv_matrix(path: impl AsRef<Path>, matrix: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", matrix[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an ASCII (`P2`) or binary (`P5`) grayscale image with
/// `maxval <= 65535`; intensities are scaled to `[0, 1]`. Binary rasters
/// with `maxval > 255` use two big-endian bytes per pixel.
pub fn load_pgm_image(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |message: &str| Error::CorruptHeader {
        path: path.to_path_buf(),
        message: message.to_string(),
    };

    // Header tokens are whitespace separated; '#' comments run to newline.
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Option<(usize, usize)> {
        let mut i = pos;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            break;
        }
        if i >= bytes.len() {
            return None;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        pos = i;
        Some((start, i))
    };

    let (s, e) = next_token(&bytes).ok_or_else(|| corrupt("missing magic number"))?;
    let magic = std::str::from_utf8(&bytes[s..e]).unwrap_or("");
    if magic != "P2" && magic != "P5" {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("magic {magic:?}; only P2 and P5 grayscale supported"),
        });
    }
    let mut header_int = |name: &str| -> Result<usize> {
        let (s, e) = next_token(&bytes).ok_or_else(|| corrupt(&format!("missing {name}")))?;
        std::str::from_utf8(&bytes[s..e])
            .ok()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| corrupt(&format!("invalid {name}")))
    };
    let width = header_int("width")?;
    let height = header_int("height")?;
    let maxval = header_int("maxval")?;
    if width == 0 || height == 0 {
        return Err(corrupt("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(corrupt("maxval outside [1, 65535]"));
    }

    let count = width * height;
    let mut values = Vec::with_capacity(count);
    if magic == "P2" {
        for _ in 0..count {
            let (s, e) = next_token(&bytes).ok_or_else(|| corrupt("truncated pixel data"))?;
            let v = std::str::from_utf8(&bytes[s..e])
                .ok()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| corrupt("invalid pixel token"))?;
            if v > maxval {
                return Err(corrupt("pixel exceeds maxval"));
            }
            values.push(v);
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        let start = pos + 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        if start > bytes.len() || bytes.len() - start < count * bpp {
            return Err(corrupt("truncated pixel data"));
        }
        for k in 0..count {
            let v = if bpp == 1 {
                bytes[start + k] as usize
            } else {
                let hi = bytes[start + 2 * k] as usize;
                let lo = bytes[start + 2 * k + 1] as usize;
                (hi << 8) | lo
            };
            if v > maxval {
                return Err(corrupt("pixel exceeds maxval"));
            }
            values.push(v);
        }
    }
    let maxval = maxval as f64;
    Ok(DMatrix::from_fn(height, width, |i, j| {
        values[i * width + j] as f64 / maxval
    }))
}

/// Loads a directory-per-class dataset: every subdirectory of `root` names
/// a class and holds matrix files matched by `pattern` (`*`, or `*.ext`).
/// Classes and files load in lexicographic order so sample order is stable
/// across runs. All samples must share one shape.
pub fn load_labeled_directory(
    root: impl AsRef<Path>,
    pattern: &str,
) -> Result<LabeledMatrixDataset> {
    let root = root.as_ref();
    let suffix = pattern.strip_prefix('*').unwrap_or(pattern);
    let mut class_dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} has no class subdirectories",
            root.display()
        )));
    }

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut classes = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for dir in &class_dirs {
        let class = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(suffix)))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "class directory {} has no files matching {pattern:?}",
                dir.display()
            )));
        }
        for file in &files {
            let matrix = match file.extension().and_then(|e| e.to_str()) {
                Some("csv") => load_csv_matrix(file)?,
                Some("pgm") => load_pgm_image(file)?,
                _ => {
                    return Err(Error::UnsupportedFormat {
                        path: file.clone(),
                        message: "expected a .csv or .pgm matrix file".into(),
                    });
                }
            };
            match shape {
                None => shape = Some(matrix.shape()),
                Some(s) if s != matrix.shape() => {
                    return Err(Error::HeterogeneousShapes(format!(
                        "{} is {:?} but earlier samples are {s:?}",
                        file.display(),
                        matrix.shape()
                    )));
                }
                _ => {}
            }
            samples.push(matrix);
            labels.push(class.clone());
        }
        classes.push(class);
    }
    Ok(LabeledMatrixDataset {
        samples,
        labels,
        classes,
        shape: shape.expect("at least one sample"),
        root: root.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_value, KernelKind};
    use crate::manifold::project_svd;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_points_satisfy_the_cone_constraint() {
        let data = gen_sphere_cones(500, 42);
        for i in 0..data.len() {
            let (x, y, z) = (data.points()[(i, 0)], data.points()[(i, 1)], data.points()[(i, 2)]);
            let r = (x * x + y * y + z * z).sqrt();
            assert_abs_diff_eq!(r, data.magnitudes()[i], epsilon = 1e-12);
            assert!(data.magnitudes()[i] >= 0.0 && data.magnitudes()[i] <= 2.0);
            if r > 1e-9 {
                let phi = (z / r).asin();
                let theta = y.atan2(x);
                assert_abs_diff_eq!(phi.sin(), theta.cos() * theta.cos(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sphere_magnitudes_are_uniform() {
        let data = gen_sphere_cones(10_000, 7);
        let ks = ks_statistic_uniform(data.magnitudes(), 0.0, 2.0);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn sphere_generation_is_deterministic() {
        let a = gen_sphere_cones(50, 9);
        let b = gen_sphere_cones(50, 9);
        for i in 0..50 {
            for j in 0..3 {
                assert_eq!(a.points()[(i, j)].to_bits(), b.points()[(i, j)].to_bits());
            }
        }
        let c = gen_sphere_cones(50, 10);
        assert!((0..50).any(|i| a.points()[(i, 0)] != c.points()[(i, 0)]));
    }

    #[test]
    fn sphere_samples_project_to_lines() {
        let data = gen_sphere_cones(5, 3);
        for s in data.samples() {
            assert_eq!(s.shape(), (3, 1));
            let t = project_svd(&s, 1).unwrap();
            assert_eq!(t.left.basis().shape(), (3, 1));
        }
    }

    #[test]
    fn cosine_basis_is_orthonormal_below_the_boundary_frequency() {
        let (n, p) = (40, 5);
        for l in 1..=(n / 2 - p) {
            for t in [0, 3, 17, 39] {
                let u = cosine_basis(n, p, t, l);
                assert!(
                    crate::linalg::gram_defect(&u) < 1e-8,
                    "gram defect at l = {l}, t = {t}"
                );
            }
        }
        // At the top of the valid offset range the last column hits the
        // boundary frequency n/2 and its norm inflates to sqrt 2.
        let u = cosine_basis(n, p, 3, n / 2 + 1 - p);
        let last = u.column(p - 1).norm();
        assert_abs_diff_eq!(last, std::f64::consts::SQRT_2, epsilon = 1e-10);
    }

    #[test]
    fn displayed_realization_is_symmetric_rank_five() {
        let a = [0.444, 0.828, 0.775, 0.913, 0.981];
        let x = random_field_sample(40, &a, 3, 20);
        assert_eq!(x.shape(), (40, 40));
        assert!((&x - x.transpose()).amax() < 1e-12);
        let (_, sigma, _) = crate::linalg::thin_svd(&x).unwrap();
        assert!(sigma[5] < 1e-10 * sigma[0], "sigma_6 = {}", sigma[5]);
        assert!(sigma[4] > 1e-3 * sigma[0], "rank collapsed below 5");
    }

    #[test]
    fn generated_fields_are_symmetric_rank_p_with_ranged_parameters() {
        let data = gen_random_field(20, 40, 40, 5, 11).unwrap();
        assert_eq!(data.len(), 20);
        let l_max = 40 / 2 + 1 - 5;
        for k in 0..data.len() {
            let x = &data.samples()[k];
            assert!((x - x.transpose()).amax() < 1e-12);
            let (_, sigma, _) = crate::linalg::thin_svd(x).unwrap();
            assert!(sigma[5] < 1e-10 * sigma[0]);
            assert!(data.t_values()[k] < 40);
            let l = data.l_values()[k];
            assert!((1..=l_max).contains(&l));
            for j in 0..5 {
                let a = data.a_diagonals()[(k, j)];
                assert!(a > 0.0 && a <= 1.0);
            }
        }
    }

    #[test]
    fn field_parameter_validation() {
        assert!(matches!(
            gen_random_field(5, 40, 39, 5, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gen_random_field(5, 40, 40, 21, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gen_random_field(5, 40, 40, 0, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gen_random_field_with_l(5, 40, 40, 5, &[], 0),
            Err(Error::EmptyDataset(_))
        ));
        assert!(matches!(
            gen_random_field_with_l(5, 40, 40, 5, &[17], 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pinned_offsets_are_honored_and_deterministic() {
        let choices: Vec<usize> = (1..=15).collect();
        let a = gen_random_field_with_l(30, 40, 40, 5, &choices, 4).unwrap();
        for &l in a.l_values() {
            assert!(choices.contains(&l));
        }
        let b = gen_random_field_with_l(30, 40, 40, 5, &choices, 4).unwrap();
        for k in 0..30 {
            assert_eq!(a.samples()[k], b.samples()[k]);
            assert_eq!(a.t_values()[k], b.t_values()[k]);
            assert_eq!(a.l_values()[k], b.l_values()[k]);
        }
    }

    #[test]
    fn field_span_is_independent_of_the_diagonal() {
        // Same (T, L), different A: the left span and therefore the
        // projection kernel must not move.
        let (t, l) = (7, 4);
        let x1 = random_field_sample(40, &[0.2, 0.9, 0.5, 0.7, 0.3], t, l);
        let x2 = random_field_sample(40, &[0.8, 0.1, 0.6, 0.4, 0.99], t, l);
        let other = random_field_sample(40, &[0.5, 0.5, 0.5, 0.5, 0.5], 21, 9);
        let p1 = project_svd(&x1, 5).unwrap().left;
        let p2 = project_svd(&x2, 5).unwrap().left;
        let po = project_svd(&other, 5).unwrap().left;
        let k1 = kernel_value(KernelKind::Projection, &p1, &po).unwrap();
        let k2 = kernel_value(KernelKind::Projection, &p2, &po).unwrap();
        assert_abs_diff_eq!(k1, k2, epsilon = 1e-10);
        let self_k = kernel_value(KernelKind::Projection, &p1, &p2).unwrap();
        assert_abs_diff_eq!(self_k, 5.0, epsilon = 1e-10);
    }

    #[test]
    fn ks_statistic_detects_and_accepts() {
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 500.0).collect();
        assert!(ks_statistic_uniform(&grid, 0.0, 2.0) < 2e-3);
        let constant = vec![1.0; 100];
        assert!(ks_statistic_uniform(&constant, 0.0, 2.0) > 0.4);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(1);
        let m = DMatrix::from_fn(7, 5, |_, _| rng.gen_range(-1e3..1e3));
        write_csv_matrix(&path, &m).unwrap();
        let back = load_csv_matrix(&path).unwrap();
        assert_eq!(back.shape(), (7, 5));
        for i in 0..7 {
            for j in 0..5 {
                assert_eq!(m[(i, j)].to_bits(), back[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn csv_parses_simple_content_and_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "# eigenvalues: 1,2\n1, 2\n\n3,4\n").unwrap();
        let m = load_csv_matrix(&path).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn csv_rejects_ragged_and_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = dir.path().join("r.csv");
        fs::write(&ragged, "1,2\n3\n").unwrap();
        match load_csv_matrix(&ragged) {
            Err(Error::RaggedRows { row, found, expected, .. }) => {
                assert_eq!((row, found, expected), (2, 1, 2));
            }
            other => panic!("expected RaggedRows, got {other:?}"),
        }

        let bad = dir.path().join("b.csv");
        fs::write(&bad, "1,2\n3,x\n").unwrap();
        match load_csv_matrix(&bad) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("expected Parse, got {other:?}"),
        }

        let nonfinite = dir.path().join("n.csv");
        fs::write(&nonfinite, "1,inf\n").unwrap();
        assert!(matches!(load_csv_matrix(&nonfinite), Err(Error::Parse { .. })));

        let empty = dir.path().join("e.csv");
        fs::write(&empty, "# nothing\n").unwrap();
        assert!(matches!(load_csv_matrix(&empty), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn pgm_ascii_and_binary_agree() {
        let dir = tempfile::tempdir().unwrap();
        let p2 = dir.path().join("a.pgm");
        fs::write(&p2, "P2\n# checker\n2 2\n255\n0 255\n255 0\n").unwrap();
        let m2 = load_pgm_image(&p2).unwrap();
        assert_eq!(m2, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let p5 = dir.path().join("b.pgm");
        fs::write(&p5, [b"P5\n2 2\n255\n".as_ref(), &[0, 255, 255, 0]].concat()).unwrap();
        let m5 = load_pgm_image(&p5).unwrap();
        assert_eq!(m2, m5);
    }

    #[test]
    fn pgm_sixteen_bit_values_are_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.pgm");
        // Single pixel 0x0100 = 256 out of 65535.
        fs::write(&path, [b"P5\n1 1\n65535\n".as_ref(), &[1, 0]].concat()).unwrap();
        let m = load_pgm_image(&path).unwrap();
        assert_abs_diff_eq!(m[(0, 0)], 256.0 / 65535.0, epsilon = 1e-15);
    }

    #[test]
    fn pgm_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let p3 = dir.path().join("c.ppm");
        fs::write(&p3, "P3\n1 1\n255\n0 0 0\n").unwrap();
        assert!(matches!(
            load_pgm_image(&p3),
            Err(Error::UnsupportedFormat { .. })
        ));

        let truncated = dir.path().join("t.pgm");
        fs::write(&truncated, [b"P5\n2 2\n255\n".as_ref(), &[0, 255]].concat()).unwrap();
        assert!(matches!(
            load_pgm_image(&truncated),
            Err(Error::CorruptHeader { .. })
        ));

        let badmax = dir.path().join("m.pgm");
        fs::write(&badmax, "P2\n1 1\n0\n0\n").unwrap();
        assert!(matches!(
            load_pgm_image(&badmax),
            Err(Error::CorruptHeader { .. })
        ));

        let overflow = dir.path().join("o.pgm");
        fs::write(&overflow, "P2\n1 1\n10\n11\n").unwrap();
        assert!(matches!(
            load_pgm_image(&overflow),
            Err(Error::CorruptHeader { .. })
        ));
    }

    #[test]
    fn labeled_directory_loads_in_stable_order() {
        let dir = tempfile::tempdir().unwrap();
        for (class, value) in [("s2", "2,0\n0,2\n"), ("s1", "1,0\n0,1\n")] {
            let sub = dir.path().join(class);
            fs::create_dir(&sub).unwrap();
            fs::write(sub.join("b.csv"), value).unwrap();
            fs::write(sub.join("a.csv"), value).unwrap();
        }
        let data = load_labeled_directory(dir.path(), "*.csv").unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data.classes(), &["s1".to_string(), "s2".to_string()]);
        assert_eq!(
            data.labels(),
            &["s1".to_string(), "s1".to_string(), "s2".to_string(), "s2".to_string()]
        );
        assert_eq!(data.shape(), (2, 2));
        assert_eq!(data.samples()[3][(0, 0)], 2.0);

        let manifest = data.manifest();
        assert_eq!(manifest.counts["s1"], 2);
        let json = serde_json::to_value(&manifest).unwrap();
        assert_eq!(json["shape"], serde_json::json!([2, 2]));
        assert!(json["root"].is_string());
    }

    #[test]
    fn labeled_directory_error_cases() {
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_labeled_directory(empty.path(), "*.csv"),
            Err(Error::EmptyDataset(_))
        ));

        let hollow = tempfile::tempdir().unwrap();
        fs::create_dir(hollow.path().join("s1")).unwrap();
        assert!(matches!(
            load_labeled_directory(hollow.path(), "*.csv"),
            Err(Error::EmptyDataset(_))
        ));

        let mixed = tempfile::tempdir().unwrap();
        let s1 = mixed.path().join("s1");
        let s2 = mixed.path().join("s2");
        fs::create_dir(&s1).unwrap();
        fs::create_dir(&s2).unwrap();
        fs::write(s1.join("a.csv"), "1,2\n3,4\n").unwrap();
        fs::write(s2.join("a.csv"), "1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert!(matches!(
            load_labeled_directory(mixed.path(), "*.csv"),
            Err(Error::HeterogeneousShapes(_))
        ));
    }
}
