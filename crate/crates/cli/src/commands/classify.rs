//! `classify`: sparse-representation classification of test samples against
//! a labeled training directory, with an optional recognition-rate sweep
//! over the projection rank.

use std::path::PathBuf;

use clap::Args;
use grassdm::classify::{classify, classify_batch, DEFAULT_BETA, DEFAULT_EPSILON};
use grassdm::{datagen, ClassificationResult, ClassifyParams, DecisionCriterion, SolverKind};

use super::{load_input_dir, resolve_gdm, setup, CommonArgs, GdmDefaults, InputSet};
use crate::config::parse_usize_list;
use crate::CliError;

#[derive(Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training directory: one subdirectory per class
    #[arg(long)]
    train: PathBuf,
    /// Test directory: labeled like --train, or a flat directory of files
    #[arg(long)]
    test: PathBuf,
    /// l1 solver: unconstrained | constrained
    #[arg(long)]
    solver: Option<String>,
    /// Decision rule: min-residual | max-coefficient
    #[arg(long)]
    criterion: Option<String>,
    /// Embed all test samples jointly instead of one embedding per sample
    #[arg(long)]
    batch: bool,
    /// Sweep the projection rank (a:b or comma list); runs in batch mode
    /// and needs a labeled test directory
    #[arg(long)]
    sweep_p: Option<String>,
    /// Filename filter inside class directories (e.g. *.pgm)
    #[arg(long)]
    pattern: Option<String>,
}

pub fn run(args: ClassifyArgs) -> Result<(), CliError> {
    let (mut params, mut reporter) = setup(&args.common, "classify")?;
    let pattern = params.resolve("pattern", args.pattern.clone(), "*".to_string())?;
    params.note("train", args.train.display().to_string());
    params.note("test", args.test.display().to_string());

    let train = datagen::load_labeled_directory(&args.train, &pattern)?;
    let test = load_input_dir(&args.test, &pattern)?;
    if !test.samples.is_empty() && test.samples[0].shape() != train.shape() {
        return Err(CliError::Data(format!(
            "test samples have shape {:?}, training samples {:?}",
            test.samples[0].shape(),
            train.shape()
        )));
    }
    reporter.mark("load");

    let gdm = resolve_gdm(&mut params, &args.common, GdmDefaults { p: 1, q: 20, t: 1 })?;
    let solver: SolverKind = params
        .resolve("solver", args.solver.clone(), "unconstrained".to_string())?
        .parse()
        .map_err(CliError::Config)?;
    let criterion: DecisionCriterion = params
        .resolve("criterion", args.criterion.clone(), "min-residual".to_string())?
        .parse()
        .map_err(CliError::Config)?;
    let beta = params.resolve("beta", args.common.beta, DEFAULT_BETA)?;
    let epsilon = params.resolve("epsilon", args.common.epsilon, DEFAULT_EPSILON)?;
    let mut cp = ClassifyParams::new(gdm);
    cp.solver = solver;
    cp.criterion = criterion;
    cp.beta = beta;
    cp.epsilon = epsilon;

    if let Some(raw) = &args.sweep_p {
        return run_sweep(raw, &train, &test, cp, params, reporter);
    }

    let batch = args.batch;
    params.note("batch", batch);
    let results: Vec<ClassificationResult> = if batch {
        classify_batch(train.samples(), train.labels(), &test.samples, &cp)?
    } else {
        test.samples
            .iter()
            .map(|sample| classify(train.samples(), train.labels(), sample, &cp))
            .collect::<grassdm::Result<_>>()?
    };
    reporter.mark("classify");

    let mut lines = String::new();
    let mut correct = 0usize;
    for (i, result) in results.iter().enumerate() {
        let truth = test.labels.as_ref().map(|l| l[i].as_str());
        let is_correct = truth.map(|t| t == result.predicted);
        if is_correct == Some(true) {
            correct += 1;
        }
        let record = serde_json::json!({
            "sample": i,
            "name": test.names[i],
            "true_label": truth,
            "predicted": result.predicted,
            "correct": is_correct,
            "residuals": result.residuals,
            "coefficients_nnz": result.coefficients_nnz,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    reporter.write_output("results.jsonl", lines.as_bytes())?;

    let total = results.len();
    let summary = match &test.labels {
        Some(_) => {
            let accuracy = correct as f64 / total as f64;
            serde_json::json!({
                "test_samples": total,
                "correct": correct,
                "accuracy": accuracy,
                "classes": train.classes(),
            })
        }
        None => serde_json::json!({
            "test_samples": total,
            "classes": train.classes(),
        }),
    };
    let dir = reporter.output_dir().display().to_string();
    reporter.finish(params.effective().clone(), summary)?;
    match &test.labels {
        Some(_) => println!(
            "accuracy {:.1}% ({correct}/{total}); per-sample results in {dir}/results.jsonl",
            100.0 * correct as f64 / total as f64,
        ),
        None => println!(
            "classified {total} samples (no ground truth in test directory); results in {dir}/results.jsonl"
        ),
    }
    Ok(())
}

/// Recognition rate as a function of the projection rank, batch mode.
fn run_sweep(
    raw: &str,
    train: &datagen::LabeledMatrixDataset,
    test: &InputSet,
    mut cp: ClassifyParams,
    mut params: crate::config::Params,
    mut reporter: crate::report::Reporter,
) -> Result<(), CliError> {
    let p_values = parse_usize_list(raw)?;
    params.note("sweep_p", raw);
    let Some(test_labels) = &test.labels else {
        return Err(CliError::Config(
            "--sweep-p needs a labeled test directory to score against".into(),
        ));
    };

    let mut csv = String::from("# columns: p,correct,total,rate\n");
    let mut rates = Vec::with_capacity(p_values.len());
    let mut best: Option<(usize, f64)> = None;
    for &p in &p_values {
        cp.gdm.p = p;
        let results = classify_batch(train.samples(), train.labels(), &test.samples, &cp)?;
        let correct = results
            .iter()
            .zip(test_labels)
            .filter(|(r, t)| &r.predicted == *t)
            .count();
        let rate = correct as f64 / results.len() as f64;
        csv.push_str(&format!("{p},{correct},{},{rate}\n", results.len()));
        rates.push(serde_json::json!({"p": p, "correct": correct, "rate": rate}));
        if best.is_none_or(|(_, b)| rate > b) {
            best = Some((p, rate));
        }
        log::info!("p = {p}: {correct}/{} correct", results.len());
    }
    reporter.mark("sweep");
    reporter.write_output("rate_vs_p.csv", csv.as_bytes())?;

    let (best_p, best_rate) = best.expect("nonempty sweep");
    let summary = serde_json::json!({
        "test_samples": test.samples.len(),
        "rates": rates,
        "best_p": best_p,
        "best_rate": best_rate,
    });
    let dir = reporter.output_dir().display().to_string();
    reporter.finish(params.effective().clone(), summary)?;
    println!(
        "swept p over {p_values:?}: best rate {:.1}% at p = {best_p}; table in {dir}/rate_vs_p.csv",
        100.0 * best_rate,
    );
    Ok(())
}
