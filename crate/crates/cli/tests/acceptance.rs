//! Acceptance suite. Each test checks one numbered criterion and prints a
//! single verdict line. Run in order with output visible:
//!
//!   cargo test -p grassdm-cli --test acceptance -- --nocapture --test-threads=1
//!
//! Criterion 11 needs an external face dataset (class subdirectories of PGM
//! files, ten images per class). Point GRASSDM_ATT_DIR at it or place it at
//! data/att under the workspace root; the criterion reports SKIP otherwise.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use grassdm::classify::{
    adjusted_rand_index, classify, kkt_residual, kmeans, lasso, DEFAULT_MAX_ITER,
};
use grassdm::datagen::{gen_random_field_with_l, load_labeled_directory};
use grassdm::diffusion::{
    conventional_diffusion_maps, diffusion_distance_direct, diffusion_distance_spectral,
    grassmannian_diffusion_maps,
};
use grassdm::kernels::{
    binet_cauchy_offdiag_bound, monte_carlo_offdiag_mean, monte_carlo_offdiag_samples,
    projection_p1_variance,
};
use grassdm::manifold::{
    distance, exp_map, geodesic, log_map, principal_angles, sample_uniform,
};
use grassdm::{
    ClassifyParams, GdmParams, GrassmannPoint, KernelKind, MetricKind, SolverKind,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {word} - {detail}");
    assert!(pass, "criterion {criterion}: {detail}");
}

fn skip(criterion: u32, detail: &str) {
    println!("criterion {criterion}: SKIP - {detail}");
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn run_binary(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_grassdm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn output_checksums(dir: &Path) -> Vec<(String, String)> {
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    report["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["path"].as_str().unwrap().to_string(),
                o["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

/// Empirical projection-kernel means from the CLI match p^2/n for every
/// rank at n = 20: within 3 standard errors everywhere and within 5%
/// relative from p = 3 up. Budget: under a minute.
#[test]
fn criterion_01_projection_kernel_mean_sweep() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let out = run_binary(
        &[
            "kernel-stats",
            "--kernel",
            "projection",
            "--n",
            "20",
            "--samples",
            "3000",
            "--seed",
            "11",
            "--output-dir",
            "ks",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("ks/kernel_stats.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rows.len(), 19);

    let mut worst_z = 0.0f64;
    let mut worst_rel = 0.0f64;
    let mut pass = true;
    for row in &rows {
        let p = row["p"].as_u64().unwrap();
        let mean = row["mean"].as_f64().unwrap();
        let predicted = row["predicted"].as_f64().unwrap();
        let se = row["std_error"].as_f64().unwrap();
        assert!((predicted - (p * p) as f64 / 20.0).abs() < 1e-12);
        let z = (mean - predicted).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            pass = false;
        }
        if p >= 3 {
            let rel = (mean - predicted).abs() / predicted;
            worst_rel = worst_rel.max(rel);
            if rel > 0.05 {
                pass = false;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        pass = false;
    }
    verdict(
        1,
        pass,
        &format!(
            "projection mean vs p^2/n at n = 20, 3000 draws: worst |z| {worst_z:.2} (limit 3), \
             worst relative for p >= 3 {:.3}% (limit 5%), {elapsed:.1} s (limit 60)",
            100.0 * worst_rel
        ),
    );
}

/// Rank-one moments: mean 1/n within 3 standard errors and variance
/// 2(n-1)/(n^2(n+2)) within 10% relative, 10,000 draws each.
#[test]
fn criterion_02_rank_one_moments() {
    let mut detail = String::new();
    let mut pass = true;
    for (idx, n) in [3usize, 10, 20].into_iter().enumerate() {
        let samples =
            monte_carlo_offdiag_samples(KernelKind::Projection, n, 1, 10_000, 21 + idx as u64)
                .unwrap();
        let count = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / count;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        let se = (var / count).sqrt();
        let z = (mean - 1.0 / n as f64).abs() / se;
        let var_rel = (var - projection_p1_variance(n)).abs() / projection_p1_variance(n);
        if z > 3.0 || var_rel > 0.10 {
            pass = false;
        }
        if idx > 0 {
            detail.push_str(", ");
        }
        detail.push_str(&format!(
            "n = {n}: |z| {z:.2}, variance off by {:.2}%",
            100.0 * var_rel
        ));
    }
    verdict(2, pass, &format!("{detail} (limits 3 and 10%)"));
}

/// Determinant-kernel means at n = 20 sit below the (p/n)^p style bound
/// (up to 3 standard errors of slack) and bottom out at p = 10 +- 1.
#[test]
fn criterion_03_determinant_kernel_bound() {
    let mut means = Vec::new();
    let mut pass = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for p in 1..20 {
        let stats =
            monte_carlo_offdiag_mean(KernelKind::BinetCauchy, 20, p, 3000, 31).unwrap();
        let bound = binet_cauchy_offdiag_bound(20, p);
        assert!((stats.bound.unwrap() - bound).abs() < 1e-15);
        let se = stats.std_error.unwrap();
        let excess = stats.mean - 3.0 * se - bound;
        worst_excess = worst_excess.max(excess / bound);
        if excess > 0.0 {
            pass = false;
        }
        means.push(stats.mean);
    }
    let argmin = means
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap();
    if !(9..=11).contains(&argmin) {
        pass = false;
    }
    verdict(
        3,
        pass,
        &format!(
            "mean - 3 SE <= bound for all p in 1..19 (worst relative excess {worst_excess:.2e}), \
             minimum mean at p = {argmin} (want 10 +- 1)"
        ),
    );
}

/// Overlap dimension: random pairs on G(p,10) with 2p > 10 share exactly
/// 2p - 10 directions, so that many principal angles vanish.
#[test]
fn criterion_04_zero_angle_multiplicity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut pass = true;
    let mut detail = String::new();
    for (p, expected_zeros) in [(7usize, 4usize), (6, 2)] {
        let mut bad = 0;
        for _ in 0..100 {
            let a = sample_uniform(10, p, &mut rng).unwrap();
            let b = sample_uniform(10, p, &mut rng).unwrap();
            let thetas = principal_angles(&a, &b).unwrap();
            let zeros = thetas.angles().iter().filter(|t| **t < 1e-8).count();
            if zeros != expected_zeros {
                bad += 1;
            }
        }
        if bad > 0 {
            pass = false;
        }
        if !detail.is_empty() {
            detail.push_str(", ");
        }
        detail.push_str(&format!(
            "G({p},10): {}/100 pairs with exactly {expected_zeros} angles below 1e-8",
            100 - bad
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 5.0 {
        pass = false;
    }
    verdict(4, pass, &format!("{detail}, {elapsed:.2} s (limit 5)"));
}

/// Geometry round trips on G(2,6), 200 pairs conditioned away from the cut
/// locus: exp inverts log, the geodesic hits both endpoints, and arc length
/// grows linearly in the curve parameter. All within 1e-8.
#[test]
fn criterion_05_geometry_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut pairs: Vec<(GrassmannPoint, GrassmannPoint)> = Vec::new();
    let mut draws = 0;
    while pairs.len() < 200 {
        draws += 1;
        assert!(draws < 50_000, "pair sampling stalled");
        let a = sample_uniform(6, 2, &mut rng).unwrap();
        let b = sample_uniform(6, 2, &mut rng).unwrap();
        let max_angle = principal_angles(&a, &b)
            .unwrap()
            .angles()
            .last()
            .copied()
            .unwrap();
        if max_angle < std::f64::consts::FRAC_PI_2 - 0.1 {
            pairs.push((a, b));
        }
    }

    let gap = |x: &GrassmannPoint, y: &GrassmannPoint| -> f64 {
        principal_angles(x, y)
            .unwrap()
            .angles()
            .last()
            .copied()
            .unwrap()
    };
    let mut worst_roundtrip = 0.0f64;
    let mut worst_endpoint = 0.0f64;
    let mut worst_arc = 0.0f64;
    for (a, b) in &pairs {
        let tangent = log_map(a, b).unwrap();
        let back = exp_map(a, &tangent).unwrap();
        worst_roundtrip = worst_roundtrip.max(gap(&back, b));

        worst_endpoint = worst_endpoint.max(gap(&geodesic(a, b, 0.0).unwrap(), a));
        worst_endpoint = worst_endpoint.max(gap(&geodesic(a, b, 1.0).unwrap(), b));

        let full = distance(MetricKind::ArcLength, a, b).unwrap();
        for t in [0.25, 0.5, 0.75] {
            let partial = distance(MetricKind::ArcLength, a, &geodesic(a, b, t).unwrap()).unwrap();
            worst_arc = worst_arc.max((partial - t * full).abs());
        }
    }
    let pass = worst_roundtrip < 1e-8 && worst_endpoint < 1e-8 && worst_arc < 1e-8;
    verdict(
        5,
        pass,
        &format!(
            "200 pairs on G(2,6): exp(log) angle error {worst_roundtrip:.2e}, endpoint error \
             {worst_endpoint:.2e}, arc-length linearity error {worst_arc:.2e} (limits 1e-8)"
        ),
    );
}

/// The probability-space and spectral-space diffusion distances agree when
/// the full spectrum is kept; transition rows are stochastic and the lead
/// eigenvalue is 1.
#[test]
fn criterion_06_diffusion_distance_identity() {
    let mut worst_dist = 0.0f64;
    let mut worst_row = 0.0f64;
    let mut worst_lead = 0.0f64;
    for instance in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + instance);
        let data: Vec<DMatrix<f64>> = (0..30).map(|_| gaussian_matrix(6, 5, &mut rng)).collect();
        let mut params = GdmParams::new(2, 29);
        params.t = 1 + (instance % 3) as u32;
        let out = grassmannian_diffusion_maps(&data, &params).unwrap();

        let deg = out.transition.kappa_degrees();
        for (i, j) in [(0usize, 1usize), (5, 17), (29, 3), (11, 11)] {
            let direct = diffusion_distance_direct(&out.transition, deg, i, j).unwrap();
            let spectral = diffusion_distance_spectral(&out.embedding, i, j).unwrap();
            worst_dist = worst_dist.max((direct - spectral).abs());
        }
        let p1 = out.transition.one_step();
        for i in 0..p1.nrows() {
            worst_row = worst_row.max((p1.row(i).sum() - 1.0).abs());
        }
        worst_lead = worst_lead.max((out.embedding.eigenvalues()[0] - 1.0).abs());
    }
    let pass = worst_dist < 1e-8 && worst_row < 1e-10 && worst_lead < 1e-10;
    verdict(
        6,
        pass,
        &format!(
            "30 instances, N = 30, full spectrum: distance mismatch {worst_dist:.2e} (limit 1e-8), \
             row-sum error {worst_row:.2e}, lead-eigenvalue error {worst_lead:.2e} (limits 1e-10)"
        ),
    );
}

/// Rescaling every sample by a random positive constant leaves the subspace
/// embedding bitwise-stable to 1e-10 while the raw-distance baseline moves
/// by more than 1e-3.
#[test]
fn criterion_07_scale_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let data: Vec<DMatrix<f64>> = (0..20).map(|_| gaussian_matrix(8, 6, &mut rng)).collect();
    let scaled: Vec<DMatrix<f64>> = data
        .iter()
        .map(|x| x * rng.gen_range(0.1..10.0))
        .collect();

    let params = GdmParams::new(3, 4);
    let a = grassmannian_diffusion_maps(&data, &params).unwrap();
    let b = grassmannian_diffusion_maps(&scaled, &params).unwrap();
    let subspace_shift = (a.embedding.coordinates() - b.embedding.coordinates()).amax();

    let ca = conventional_diffusion_maps(&data, None, 4, 1).unwrap();
    let cb = conventional_diffusion_maps(&scaled, None, 4, 1).unwrap();
    let conventional_shift = (ca.embedding.coordinates() - cb.embedding.coordinates()).amax();

    let pass = subspace_shift < 1e-10 && conventional_shift > 1e-3;
    verdict(
        7,
        pass,
        &format!(
            "random rescale in [0.1, 10): subspace embedding moved {subspace_shift:.2e} \
             (limit 1e-10), conventional baseline moved {conventional_shift:.2e} (must exceed 1e-3)"
        ),
    );
}

/// Clustering 300 random fields spanning 15 frequency offsets: k-means on
/// the first three diffusion coordinates recovers the offsets with adjusted
/// Rand index at least 0.90. The raw-distance baseline is reported for
/// contrast with no threshold.
#[test]
fn criterion_08_random_field_clustering() {
    let l_choices: Vec<usize> = (1..=15).collect();
    let dataset = gen_random_field_with_l(300, 40, 40, 5, &l_choices, 5).unwrap();
    let truth: Vec<usize> = dataset.l_values().iter().map(|l| l - 1).collect();

    let out = grassmannian_diffusion_maps(dataset.samples(), &GdmParams::new(5, 3)).unwrap();
    let clusters = kmeans(out.embedding.coordinates(), 15, 5, 100).unwrap();
    let ari = adjusted_rand_index(&clusters.assignments, &truth);

    let conv = conventional_diffusion_maps(dataset.samples(), None, 3, 1).unwrap();
    let conv_clusters = kmeans(conv.embedding.coordinates(), 15, 5, 100).unwrap();
    let conv_ari = adjusted_rand_index(&conv_clusters.assignments, &truth);

    verdict(
        8,
        ari >= 0.90,
        &format!(
            "N = 300, n = 40, p = 5, 15 offsets, k = 15 on first 3 coordinates: \
             adjusted Rand index {ari:.4} (limit 0.90); raw-distance baseline {conv_ari:.4} \
             (reported only)"
        ),
    );
}

/// Ten-class subspace classification, nine training and one held-out sample
/// per class: at least 90% accuracy under the minimum-residual rule with
/// both solvers, and an exact duplicate of a training sample is matched with
/// residual below 1e-6.
#[test]
fn criterion_09_sparse_classifier() {
    // Stride-2 frequency offsets: adjacent offsets share most of their
    // frequency content, which makes classes inseparable at this sample
    // count; spacing them keeps the generator's ground truth meaningful.
    let l_values: Vec<usize> = (0..10).map(|c| 2 * c + 1).collect();
    let mut train: Vec<DMatrix<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut tests: Vec<(DMatrix<f64>, String)> = Vec::new();
    for (class_index, l) in l_values.iter().enumerate() {
        let per_class =
            gen_random_field_with_l(10, 60, 60, 5, &[*l], 3u64.wrapping_add(class_index as u64))
                .unwrap();
        let name = format!("L{l:02}");
        for (i, sample) in per_class.samples().iter().enumerate() {
            if i < 9 {
                train.push(sample.clone());
                labels.push(name.clone());
            } else {
                tests.push((sample.clone(), name.clone()));
            }
        }
    }

    let mut pass = true;
    let mut detail = String::new();
    for solver in [SolverKind::Unconstrained, SolverKind::Constrained] {
        let mut params = ClassifyParams::new(GdmParams::new(5, 20));
        params.solver = solver;
        let mut correct = 0;
        for (sample, truth) in &tests {
            let result = classify(&train, &labels, sample, &params).unwrap();
            if result.predicted == *truth {
                correct += 1;
            }
        }
        if correct < 9 {
            pass = false;
        }
        if !detail.is_empty() {
            detail.push_str(", ");
        }
        let solver_name = match solver {
            SolverKind::Unconstrained => "unconstrained",
            SolverKind::Constrained => "constrained",
        };
        detail.push_str(&format!("{solver_name} solver {correct}/10"));
    }

    // Duplicate of a training sample: the lasso shrinkage floor scales with
    // beta, so the check runs at beta = 1e-6. A penalty that small needs a
    // larger proximal budget than the default to reach the subgradient
    // tolerance on 90 correlated atoms.
    let mut dup_params = ClassifyParams::new(GdmParams::new(5, 20));
    dup_params.beta = 1e-6;
    dup_params.max_iter = 200_000;
    let dup = classify(&train, &labels, &train[0].clone(), &dup_params).unwrap();
    let dup_residual = dup.residuals[&labels[0]];
    if dup.predicted != labels[0] || dup_residual >= 1e-6 {
        pass = false;
    }
    verdict(
        9,
        pass,
        &format!(
            "{detail} (limit 9/10 each); duplicate sample residual {dup_residual:.2e} \
             (limit 1e-6)"
        ),
    );
}

/// Sparse solver on 50 random 10x30 instances satisfies the subgradient
/// optimality conditions to 1e-6; on orthonormal designs it matches the
/// soft-thresholding closed form to 1e-8.
#[test]
fn criterion_10_lasso_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_kkt = 0.0f64;
    for _ in 0..50 {
        let a = gaussian_matrix(10, 30, &mut rng);
        let xi = DVector::from_fn(10, |_, _| rng.sample(StandardNormal));
        let beta = 0.1;
        let sol = lasso(&a, &xi, beta, DEFAULT_MAX_ITER).unwrap();
        worst_kkt = worst_kkt.max(kkt_residual(&a, &sol.coefficients, &xi, beta));
    }

    let mut worst_closed_form = 0.0f64;
    for _ in 0..20 {
        let wide = gaussian_matrix(30, 10, &mut rng);
        let q = wide.qr().q();
        let xi = DVector::from_fn(30, |_, _| rng.sample(StandardNormal));
        let beta = 0.3;
        let sol = lasso(&q, &xi, beta, DEFAULT_MAX_ITER).unwrap();
        let correlations = q.transpose() * &xi;
        for i in 0..10 {
            let g = correlations[i];
            let expected = g.signum() * (g.abs() - beta / 2.0).max(0.0);
            worst_closed_form = worst_closed_form.max((sol.coefficients[i] - expected).abs());
        }
    }
    let pass = worst_kkt <= 1e-6 && worst_closed_form < 1e-8;
    verdict(
        10,
        pass,
        &format!(
            "50 random 10x30 instances: worst subgradient residual {worst_kkt:.2e} (limit 1e-6); \
             orthonormal designs: worst gap to soft threshold {worst_closed_form:.2e} (limit 1e-8)"
        ),
    );
}

/// Face recognition on an externally supplied dataset laid out as one
/// directory per person: the rank sweep at q = 20 reaches 90% for some
/// p in [10, 16]. Skipped when the data is absent.
#[test]
fn criterion_11_face_recognition() {
    let root = match face_data_dir() {
        Some(dir) => dir,
        None => {
            skip(
                11,
                "face dataset not found (set GRASSDM_ATT_DIR or place class directories \
                 under data/att); criteria 1-10 and 12 run without it",
            );
            return;
        }
    };
    let dataset = load_labeled_directory(&root, "*").unwrap();
    let mut train: Vec<DMatrix<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut tests: Vec<(DMatrix<f64>, String)> = Vec::new();
    let mut index_in_class = std::collections::HashMap::new();
    let per_class = dataset.len() / dataset.classes().len();
    for (sample, label) in dataset.samples().iter().zip(dataset.labels()) {
        let seen = index_in_class.entry(label.clone()).or_insert(0usize);
        if *seen + 1 < per_class {
            train.push(sample.clone());
            labels.push(label.clone());
        } else {
            tests.push((sample.clone(), label.clone()));
        }
        *seen += 1;
    }

    let mut best = (0usize, 0.0f64);
    for p in 10..=16 {
        let params = ClassifyParams::new(GdmParams::new(p, 20));
        let samples: Vec<DMatrix<f64>> = tests.iter().map(|(s, _)| s.clone()).collect();
        let results =
            grassdm::classify::classify_batch(&train, &labels, &samples, &params).unwrap();
        let correct = results
            .iter()
            .zip(&tests)
            .filter(|(r, (_, truth))| r.predicted == *truth)
            .count();
        let rate = correct as f64 / tests.len() as f64;
        if rate > best.1 {
            best = (p, rate);
        }
    }
    verdict(
        11,
        best.1 >= 0.90,
        &format!(
            "held-out recognition peaked at {:.1}% for p = {} (limit 90% for some p in [10, 16])",
            100.0 * best.1,
            best.0
        ),
    );
}

fn face_data_dir() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("GRASSDM_ATT_DIR") {
        let path = PathBuf::from(dir);
        if path.is_dir() {
            return Some(path);
        }
    }
    let local = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/att");
    local.is_dir().then_some(local)
}

/// Re-running a command with the same configuration and seed reproduces
/// every output artifact checksum, including across thread counts.
#[test]
fn criterion_12_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "embed",
            vec!["embed", "--demo", "sphere", "--n-samples", "60", "--seed", "7"],
        ),
        (
            "kernel-stats",
            vec!["kernel-stats", "--n", "6", "--samples", "50", "--seed", "1"],
        ),
        (
            "cluster",
            vec![
                "cluster",
                "--n-samples",
                "60",
                "--l-values",
                "1:3",
                "--k",
                "3",
                "--seed",
                "9",
            ],
        ),
        (
            "demo-randomfield",
            vec![
                "demo-randomfield",
                "--per-class",
                "3",
                "--classes",
                "2",
                "--n",
                "16",
                "--p",
                "2",
                "--seed",
                "4",
            ],
        ),
    ];

    let mut pass = true;
    let mut checked = 0;
    for (name, args) in &commands {
        let mut sums = Vec::new();
        for (run, threads) in [("a", "1"), ("b", "2")] {
            let dir = format!("{name}-{run}");
            let mut argv = args.clone();
            argv.extend_from_slice(&["--output-dir", &dir, "--threads", threads]);
            let out = run_binary(&argv, tmp.path());
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            sums.push(output_checksums(&tmp.path().join(dir)));
        }
        checked += sums[0].len();
        if sums[0] != sums[1] {
            pass = false;
        }
    }
    verdict(
        12,
        pass,
        &format!(
            "4 commands re-run with identical config and seed across thread counts: \
             {checked} artifact checksums identical"
        ),
    );
}
