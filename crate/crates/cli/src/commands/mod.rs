//! Subcommand implementations plus the plumbing they share: common flags,
//! parameter resolution, CSV rendering, and dataset directory loading.

pub mod classify;
pub mod cluster;
pub mod demo;
pub mod embed;
pub mod kernel_stats;

use std::path::{Path, PathBuf};

use clap::Args;
use grassdm::datagen;
use grassdm::{CompositionRule, DiffusionEmbedding, GdmParams, KernelKind, SphereConesDataset};
use nalgebra::DMatrix;

use crate::config::Params;
use crate::report::{csv_cell, Reporter};
use crate::{init_threads, CliError};

/// Flags shared by every subcommand. All optional: a missing flag falls
/// back to the config file (`--config`, flat key=value lines) and then to
/// the command's defaults.
#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// RNG seed for anything stochastic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory artifacts are written into
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Flat key=value config file, overridden by explicit flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cap the worker-thread count (results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Subspace kernel: projection | binet-cauchy
    #[arg(long)]
    pub kernel: Option<String>,
    /// Left/right kernel composition: left | right | sum | hadamard
    #[arg(long)]
    pub compose: Option<String>,
    /// Subspace dimension (rank of the pointwise projection)
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of diffusion coordinates
    #[arg(long)]
    pub q: Option<usize>,
    /// Diffusion time (Markov power)
    #[arg(long)]
    pub t: Option<u32>,
    /// l1 penalty weight (classification)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Residual budget for the constrained solver, or Gaussian bandwidth
    /// for conventional embeddings
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// Loads the config file, applies `--threads`, and roots a reporter at the
/// resolved output directory (default `grassdm-<command>`).
pub fn setup(common: &CommonArgs, command: &str) -> Result<(Params, Reporter), CliError> {
    let mut params = Params::new(common.config.as_ref())?;
    if let Some(threads) = params.resolve_opt("threads", common.threads)? {
        init_threads(Some(threads))?;
    }
    let flag = common.output_dir.as_ref().map(|p| p.display().to_string());
    let dir = params.resolve("output_dir", flag, format!("grassdm-{command}"))?;
    let reporter = Reporter::new(Path::new(&dir), command)?;
    Ok((params, reporter))
}

/// Per-command defaults for the embedding parameters.
pub struct GdmDefaults {
    pub p: usize,
    pub q: usize,
    pub t: u32,
}

pub fn resolve_gdm(
    params: &mut Params,
    common: &CommonArgs,
    defaults: GdmDefaults,
) -> Result<GdmParams, CliError> {
    let p = params.resolve("p", common.p, defaults.p)?;
    let q = params.resolve("q", common.q, defaults.q)?;
    let t = params.resolve("t", common.t, defaults.t)?;
    let kernel: KernelKind = params
        .resolve("kernel", common.kernel.clone(), "projection".to_string())?
        .parse()
        .map_err(CliError::Config)?;
    let composition: CompositionRule = params
        .resolve("compose", common.compose.clone(), "sum".to_string())?
        .parse()
        .map_err(CliError::Config)?;
    Ok(GdmParams {
        p,
        q,
        t,
        kernel,
        composition,
    })
}

/// Renders comment lines (prefixed `#`) followed by one CSV row per matrix
/// row, cells at 17 significant digits. The result round trips through the
/// library's CSV loader.
pub fn matrix_csv(comments: &[String], matrix: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for line in comments {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| csv_cell(matrix[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Diffusion coordinates with the retained spectrum (trivial eigenvalue
/// included) recorded in the header comments.
pub fn coordinates_csv(embedding: &DiffusionEmbedding) -> String {
    let eigen: Vec<String> = embedding
        .eigenvalues()
        .iter()
        .map(|v| csv_cell(*v))
        .collect();
    let comments = vec![
        format!("eigenvalues: {}", eigen.join(",")),
        format!(
            "columns: diffusion coordinates 1..{}, one row per input sample",
            embedding.q()
        ),
    ];
    matrix_csv(&comments, embedding.coordinates())
}

pub fn eigenvalue_list(embedding: &DiffusionEmbedding) -> Vec<f64> {
    embedding.eigenvalues().iter().copied().collect()
}

/// JSON value for a float that may legitimately be infinite (serde_json
/// would silently turn it into null).
pub fn json_float(value: f64) -> serde_json::Value {
    if value.is_finite() {
        serde_json::json!(value)
    } else {
        serde_json::json!(value.to_string())
    }
}

/// Cone points as x,y,z,magnitude rows.
pub fn sphere_points_csv(dataset: &SphereConesDataset) -> String {
    let pts = dataset.points();
    let mut out = String::from("# columns: x,y,z,magnitude\n");
    for i in 0..pts.nrows() {
        let cells = [
            csv_cell(pts[(i, 0)]),
            csv_cell(pts[(i, 1)]),
            csv_cell(pts[(i, 2)]),
            csv_cell(dataset.magnitudes()[i]),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A directory of matrix samples, labeled (one subdirectory per class) or
/// flat (.csv/.pgm files at the top level, loaded in name order).
pub struct InputSet {
    pub samples: Vec<DMatrix<f64>>,
    /// Present only for labeled directories.
    pub labels: Option<Vec<String>>,
    /// Display names, one per sample.
    pub names: Vec<String>,
}

pub fn load_input_dir(root: &Path, pattern: &str) -> Result<InputSet, CliError> {
    if !root.is_dir() {
        return Err(CliError::Data(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    if entries.iter().any(|p| p.is_dir()) {
        let set = datagen::load_labeled_directory(root, pattern)?;
        let mut per_class = std::collections::BTreeMap::new();
        let names = set
            .labels()
            .iter()
            .map(|label| {
                let idx = per_class.entry(label.clone()).or_insert(0usize);
                *idx += 1;
                format!("{label}/{:03}", *idx - 1)
            })
            .collect();
        return Ok(InputSet {
            samples: set.samples().to_vec(),
            labels: Some(set.labels().to_vec()),
            names,
        });
    }

    let suffix = pattern.strip_prefix('*').unwrap_or(pattern);
    let mut files: Vec<PathBuf> = entries
        .into_iter()
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().ends_with(suffix))
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("csv") | Some("pgm")
                )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no .csv or .pgm files matching {pattern:?}",
            root.display()
        )));
    }
    let mut samples = Vec::with_capacity(files.len());
    let mut names = Vec::with_capacity(files.len());
    for file in &files {
        let matrix = match file.extension().and_then(|e| e.to_str()) {
            Some("csv") => datagen::load_csv_matrix(file)?,
            _ => datagen::load_pgm_image(file)?,
        };
        samples.push(matrix);
        names.push(
            file.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    Ok(InputSet {
        samples,
        labels: None,
        names,
    })
}
