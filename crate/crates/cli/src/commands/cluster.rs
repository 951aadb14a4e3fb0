//! `cluster`: generate random fields over a set of frequency offsets, embed
//! them, k-means the leading diffusion coordinates, and score the clusters
//! against the true offsets with the adjusted Rand index.

use clap::Args;
use grassdm::{classify, datagen, diffusion};

use super::{coordinates_csv, eigenvalue_list, resolve_gdm, setup, CommonArgs, GdmDefaults};
use crate::config::parse_usize_list;
use crate::report::csv_cell;
use crate::CliError;

#[derive(Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random-field samples
    #[arg(long)]
    n_samples: Option<usize>,
    /// Field size (n-by-n matrices)
    #[arg(long)]
    n: Option<usize>,
    /// Cluster count; defaults to the number of frequency offsets
    #[arg(long)]
    k: Option<usize>,
    /// Frequency offsets to draw from, as a:b (inclusive) or a comma list
    #[arg(long)]
    l_values: Option<String>,
    /// Leading diffusion coordinates fed to k-means
    #[arg(long)]
    coords: Option<usize>,
    /// Lloyd iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also cluster the conventional-kernel embedding for comparison
    #[arg(long)]
    conventional: bool,
}

pub fn run(args: ClusterArgs) -> Result<(), CliError> {
    let (mut params, mut reporter) = setup(&args.common, "cluster")?;
    let seed = params.resolve("seed", args.common.seed, 0u64)?;
    let n_samples = params.resolve("n_samples", args.n_samples, 300usize)?;
    let n = params.resolve("n", args.n, 40usize)?;
    let l_spec = params.resolve("l_values", args.l_values.clone(), "1:15".to_string())?;
    let l_values = parse_usize_list(&l_spec)?;
    let gdm = resolve_gdm(&mut params, &args.common, GdmDefaults { p: 5, q: 3, t: 1 })?;
    let k = params.resolve("k", args.k, l_values.len())?;
    let coords = params.resolve("coords", args.coords, 3usize.min(gdm.q))?;
    let max_iter = params.resolve("max_iter", args.max_iter, 100usize)?;
    if coords == 0 || coords > gdm.q {
        return Err(CliError::Config(format!(
            "--coords must lie in 1..=q = {}, got {coords}",
            gdm.q
        )));
    }
    reporter.mark("setup");

    let dataset = datagen::gen_random_field_with_l(n_samples, n, n, gdm.p, &l_values, seed)?;
    reporter.mark("generate");

    let out = diffusion::grassmannian_diffusion_maps(dataset.samples(), &gdm)?;
    if out.embedding.gap_warning() {
        reporter.warn(format!(
            "spectral gap {:.3e} at the q cutoff; retained dimension is ambiguous",
            out.embedding.spectral_gap().unwrap_or(0.0)
        ));
    }
    reporter.mark("embed");

    let sub = out.embedding.coordinates().columns(0, coords).into_owned();
    let clusters = classify::kmeans(&sub, k, seed, max_iter)?;

    // True labels index into the sorted distinct offsets.
    let mut distinct = l_values.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let truth: Vec<usize> = dataset
        .l_values()
        .iter()
        .map(|l| distinct.binary_search(l).expect("drawn from l_values"))
        .collect();
    let ari = classify::adjusted_rand_index(&clusters.assignments, &truth);
    reporter.mark("cluster");

    let mut clusters_csv = String::from("# columns: sample,cluster,l_true\n");
    let mut mapping_csv = String::from("# columns: sample,t,l,cluster\n");
    for i in 0..n_samples {
        clusters_csv.push_str(&format!(
            "{i},{},{}\n",
            clusters.assignments[i],
            dataset.l_values()[i]
        ));
        mapping_csv.push_str(&format!(
            "{i},{},{},{}\n",
            dataset.t_values()[i],
            dataset.l_values()[i],
            clusters.assignments[i]
        ));
    }
    reporter.write_output("clusters.csv", clusters_csv.as_bytes())?;
    reporter.write_output("tl_mapping.csv", mapping_csv.as_bytes())?;
    reporter.write_output(
        "gdm_coordinates.csv",
        coordinates_csv(&out.embedding).as_bytes(),
    )?;

    let mut summary = serde_json::json!({
        "samples": n_samples,
        "k": k,
        "adjusted_rand_index": ari,
        "inertia": clusters.inertia,
        "kmeans_iterations": clusters.iterations,
        "eigenvalues": eigenvalue_list(&out.embedding),
    });

    if args.conventional {
        let epsilon = params.resolve_opt("epsilon", args.common.epsilon)?;
        let conv =
            diffusion::conventional_diffusion_maps(dataset.samples(), epsilon, gdm.q, gdm.t)?;
        let csub = conv.embedding.coordinates().columns(0, coords).into_owned();
        let cclusters = classify::kmeans(&csub, k, seed, max_iter)?;
        let cari = classify::adjusted_rand_index(&cclusters.assignments, &truth);
        let mut conv_csv = String::from("# columns: sample,cluster,l_true\n");
        for i in 0..n_samples {
            conv_csv.push_str(&format!(
                "{i},{},{}\n",
                cclusters.assignments[i],
                dataset.l_values()[i]
            ));
        }
        reporter.write_output("conventional_clusters.csv", conv_csv.as_bytes())?;
        reporter.write_output(
            "conventional_coordinates.csv",
            coordinates_csv(&conv.embedding).as_bytes(),
        )?;
        summary["conventional_adjusted_rand_index"] = serde_json::json!(cari);
        summary["conventional_epsilon"] = serde_json::json!(conv.epsilon);
        reporter.mark("conventional");
        println!(
            "conventional baseline: adjusted Rand index {} (epsilon {})",
            csv_cell(cari),
            csv_cell(conv.epsilon)
        );
    }

    let dir = reporter.output_dir().display().to_string();
    reporter.finish(params.effective().clone(), summary)?;
    println!("clustered {n_samples} fields into k = {k}: adjusted Rand index {ari:.4}; artifacts in {dir}");
    Ok(())
}
