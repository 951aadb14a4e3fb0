//! Demo dataset commands. `demo-sphere` embeds the two-cone point cloud
//! with both pipelines side by side; `demo-randomfield` writes a balanced
//! labeled random-field dataset as a train/test directory tree ready for
//! the `classify` command.

use clap::Args;
use grassdm::{datagen, diffusion};

use super::{
    coordinates_csv, eigenvalue_list, matrix_csv, resolve_gdm, setup, sphere_points_csv,
    CommonArgs, GdmDefaults,
};
use crate::config::parse_usize_list;
use crate::CliError;

#[derive(Args)]
pub struct DemoSphereArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of cone points
    #[arg(long)]
    n_samples: Option<usize>,
}

pub fn run_sphere(args: DemoSphereArgs) -> Result<(), CliError> {
    let (mut params, mut reporter) = setup(&args.common, "demo-sphere")?;
    let seed = params.resolve("seed", args.common.seed, 0u64)?;
    let count = params.resolve("n_samples", args.n_samples, 500usize)?;
    if count == 0 {
        return Err(CliError::Config("--n-samples must be at least 1".into()));
    }
    let gdm = resolve_gdm(&mut params, &args.common, GdmDefaults { p: 1, q: 3, t: 1 })?;
    reporter.mark("setup");

    let dataset = datagen::gen_sphere_cones(count, seed);
    let data = dataset.samples();
    reporter.mark("generate");

    let out = diffusion::grassmannian_diffusion_maps(&data, &gdm)?;
    let epsilon = params.resolve_opt("epsilon", args.common.epsilon)?;
    let conv = diffusion::conventional_diffusion_maps(&data, epsilon, gdm.q, gdm.t)?;
    reporter.mark("embed");

    reporter.write_output("points.csv", sphere_points_csv(&dataset).as_bytes())?;
    reporter.write_output(
        "gdm_coordinates.csv",
        coordinates_csv(&out.embedding).as_bytes(),
    )?;
    reporter.write_output(
        "conventional_coordinates.csv",
        coordinates_csv(&conv.embedding).as_bytes(),
    )?;
    let metadata = serde_json::json!({
        "samples": count,
        "gdm": { "eigenvalues": eigenvalue_list(&out.embedding) },
        "conventional": {
            "eigenvalues": eigenvalue_list(&conv.embedding),
            "epsilon": conv.epsilon,
        },
    });
    reporter.write_output(
        "metadata.json",
        serde_json::to_string_pretty(&metadata)
            .map_err(|e| CliError::Data(format!("cannot serialize metadata: {e}")))?
            .as_bytes(),
    )?;

    let summary = serde_json::json!({
        "samples": count,
        "gdm_eigenvalues": eigenvalue_list(&out.embedding),
        "conventional_epsilon": conv.epsilon,
    });
    let dir = reporter.output_dir().display().to_string();
    reporter.finish(params.effective().clone(), summary)?;
    println!("embedded {count} cone points with both pipelines; artifacts in {dir}");
    Ok(())
}

#[derive(Args)]
pub struct DemoFieldArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Samples generated per class
    #[arg(long)]
    per_class: Option<usize>,
    /// Field size (n-by-n matrices)
    #[arg(long)]
    n: Option<usize>,
    /// Number of classes; class c gets frequency offset 2c + 1, so the
    /// class frequency families stay well separated
    #[arg(long)]
    classes: Option<usize>,
    /// Explicit per-class frequency offsets (a:b or comma list),
    /// overriding --classes
    #[arg(long)]
    l_values: Option<String>,
    /// Fraction of each class written to the training split
    #[arg(long)]
    train_fraction: Option<f64>,
}

pub fn run_field(args: DemoFieldArgs) -> Result<(), CliError> {
    let (mut params, mut reporter) = setup(&args.common, "demo-randomfield")?;
    let seed = params.resolve("seed", args.common.seed, 0u64)?;
    let n = params.resolve("n", args.n, 60usize)?;
    let per_class = params.resolve("per_class", args.per_class, 10usize)?;
    let fraction = params.resolve("train_fraction", args.train_fraction, 0.9f64)?;
    let p = params.resolve("p", args.common.p, 5usize)?;
    if per_class < 2 {
        return Err(CliError::Config(
            "--per-class must be at least 2 to produce a train/test split".into(),
        ));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::Config(format!(
            "--train-fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }

    let l_values = match params.resolve_opt("l_values", args.l_values.clone())? {
        Some(spec) => parse_usize_list(&spec)?,
        None => {
            let classes = params.resolve("classes", args.classes, 10usize)?;
            if classes == 0 {
                return Err(CliError::Config("--classes must be at least 1".into()));
            }
            // Adjacent offsets share most of their frequency content; a
            // stride of 2 keeps neighboring classes separable at small
            // per-class counts.
            (0..classes).map(|c| 2 * c + 1).collect()
        }
    };
    {
        let mut sorted = l_values.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != l_values.len() {
            return Err(CliError::Config(format!(
                "class frequency offsets must be distinct, got {l_values:?}"
            )));
        }
    }
    reporter.mark("setup");

    let train_count = ((per_class as f64) * fraction).floor() as usize;
    let train_count = train_count.clamp(1, per_class - 1);
    let width = l_values.iter().max().unwrap().to_string().len().max(2);

    let mut params_csv =
        String::from("# columns: class_index,l,t,sample_in_class,split (0 train, 1 test)\n");
    let mut train_counts = serde_json::Map::new();
    let mut test_counts = serde_json::Map::new();
    let mut class_names = Vec::with_capacity(l_values.len());
    for (class_index, &l) in l_values.iter().enumerate() {
        let dataset = datagen::gen_random_field_with_l(
            per_class,
            n,
            n,
            p,
            &[l],
            seed.wrapping_add(class_index as u64),
        )?;
        let class_name = format!("L{l:0width$}");
        for (j, sample) in dataset.samples().iter().enumerate() {
            let split = if j < train_count { "train" } else { "test" };
            let name = format!("{split}/{class_name}/sample_{j:03}.csv");
            reporter.write_output(&name, matrix_csv(&[], sample).as_bytes())?;
            params_csv.push_str(&format!(
                "{class_index},{l},{},{j},{}\n",
                dataset.t_values()[j],
                if j < train_count { 0 } else { 1 }
            ));
        }
        train_counts.insert(class_name.clone(), serde_json::json!(train_count));
        test_counts.insert(class_name.clone(), serde_json::json!(per_class - train_count));
        class_names.push(class_name);
    }
    reporter.mark("generate");

    reporter.write_output("params.csv", params_csv.as_bytes())?;
    let manifest = serde_json::json!({
        "classes": class_names,
        "l_values": l_values,
        "shape": [n, n],
        "p": p,
        "seed": seed,
        "train_counts": train_counts,
        "test_counts": test_counts,
    });
    reporter.write_output(
        "manifest.json",
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Data(format!("cannot serialize manifest: {e}")))?
            .as_bytes(),
    )?;

    let total_train = train_count * l_values.len();
    let total_test = (per_class - train_count) * l_values.len();
    let summary = serde_json::json!({
        "classes": l_values.len(),
        "train_samples": total_train,
        "test_samples": total_test,
    });
    let dir = reporter.output_dir().display().to_string();
    reporter.finish(params.effective().clone(), summary)?;
    println!(
        "wrote {total_train} train + {total_test} test fields across {} classes to {dir}",
        l_values.len(),
    );
    Ok(())
}
