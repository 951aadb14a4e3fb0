//! `embed`: diffusion coordinates for a directory of matrix samples or a
//! built-in demo dataset, optionally next to the conventional
//! Gaussian-kernel baseline.

use std::path::PathBuf;

use clap::Args;
use grassdm::{datagen, diffusion};
use nalgebra::DMatrix;

use super::{
    coordinates_csv, eigenvalue_list, json_float, load_input_dir, resolve_gdm, setup,
    sphere_points_csv, CommonArgs, GdmDefaults,
};
use crate::CliError;

#[derive(Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory of matrix samples (.csv or .pgm), flat or one
    /// subdirectory per class
    #[arg(long, conflicts_with = "demo")]
    input: Option<PathBuf>,
    /// Built-in dataset: sphere | randomfield
    #[arg(long)]
    demo: Option<String>,
    /// Sample count for --demo
    #[arg(long)]
    n_samples: Option<usize>,
    /// Field size for --demo randomfield (n-by-n samples)
    #[arg(long)]
    n: Option<usize>,
    /// Also embed with the conventional pipeline on raw entries
    #[arg(long)]
    conventional: bool,
}

pub fn run(args: EmbedArgs) -> Result<(), CliError> {
    let (mut params, mut reporter) = setup(&args.common, "embed")?;
    let seed = params.resolve("seed", args.common.seed, 0u64)?;
    // The demo choice is resolved only when no input directory is given, so
    // a config-file `demo` key cannot shadow an explicit --input.
    let demo = match &args.input {
        Some(_) => None,
        None => params.resolve_opt("demo", args.demo.clone())?,
    };

    let defaults = match demo.as_deref() {
        Some("randomfield") => GdmDefaults { p: 5, q: 3, t: 1 },
        _ => GdmDefaults { p: 1, q: 3, t: 1 },
    };
    let gdm = resolve_gdm(&mut params, &args.common, defaults)?;

    let mut extra_outputs: Vec<(String, String)> = Vec::new();
    let data: Vec<DMatrix<f64>> = match (&args.input, demo.as_deref()) {
        (Some(dir), _) => {
            params.note("input", dir.display().to_string());
            load_input_dir(dir, "*")?.samples
        }
        (None, Some("sphere")) => {
            let count = params.resolve("n_samples", args.n_samples, 500usize)?;
            if count == 0 {
                return Err(CliError::Config("--n-samples must be at least 1".into()));
            }
            let dataset = datagen::gen_sphere_cones(count, seed);
            extra_outputs.push(("points.csv".into(), sphere_points_csv(&dataset)));
            dataset.samples()
        }
        (None, Some("randomfield")) => {
            let count = params.resolve("n_samples", args.n_samples, 100usize)?;
            let n = params.resolve("n", args.n, 40usize)?;
            let dataset = datagen::gen_random_field(count, n, n, gdm.p, seed)?;
            dataset.samples().to_vec()
        }
        (None, Some(other)) => {
            return Err(CliError::Config(format!(
                "unknown demo {other:?}; expected sphere or randomfield"
            )));
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --input or --demo is required".into(),
            ));
        }
    };
    reporter.mark("load");

    let out = diffusion::grassmannian_diffusion_maps(&data, &gdm)?;
    if out.embedding.gap_warning() {
        reporter.warn(format!(
            "spectral gap {:.3e} at the q cutoff; retained dimension is ambiguous",
            out.embedding.spectral_gap().unwrap_or(0.0)
        ));
    }
    reporter.mark("embed");

    for (name, contents) in &extra_outputs {
        reporter.write_output(name, contents.as_bytes())?;
    }
    reporter.write_output("coordinates.csv", coordinates_csv(&out.embedding).as_bytes())?;

    let condition = diffusion::transition_condition_number(&out.transition)?;
    let mut metadata = serde_json::json!({
        "samples": data.len(),
        "sample_shape": [data[0].nrows(), data[0].ncols()],
        "gdm": {
            "eigenvalues": eigenvalue_list(&out.embedding),
            "spectral_gap": out.embedding.spectral_gap(),
            "gap_warning": out.embedding.gap_warning(),
            "transition_condition_number": json_float(condition),
        },
    });

    if args.conventional {
        let epsilon = params.resolve_opt("epsilon", args.common.epsilon)?;
        let conv = diffusion::conventional_diffusion_maps(&data, epsilon, gdm.q, gdm.t)?;
        reporter.write_output(
            "conventional_coordinates.csv",
            coordinates_csv(&conv.embedding).as_bytes(),
        )?;
        metadata["conventional"] = serde_json::json!({
            "eigenvalues": eigenvalue_list(&conv.embedding),
            "epsilon": conv.epsilon,
        });
        reporter.mark("conventional");
    }

    reporter.write_output(
        "metadata.json",
        serde_json::to_string_pretty(&metadata)
            .map_err(|e| CliError::Data(format!("cannot serialize metadata: {e}")))?
            .as_bytes(),
    )?;

    let summary = serde_json::json!({
        "samples": data.len(),
        "eigenvalues": eigenvalue_list(&out.embedding),
    });
    let dir = reporter.output_dir().display().to_string();
    let report = reporter.finish(params.effective().clone(), summary)?;
    println!(
        "embedded {} samples into {} diffusion coordinates; {} artifacts in {dir}",
        data.len(),
        gdm.q,
        report.outputs.len(),
    );
    Ok(())
}
