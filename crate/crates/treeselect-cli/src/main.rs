//! `treeselect` — feature selection with regularized tree ensembles.
//!
//! Subcommands: `select` (run a selector and write the chosen features),
//! `train` / `predict` (fit and apply ensemble classifiers), `eval`
//! (repeated stratified cross-validation comparing conditions), and
//! `oracle` (categorical-only reference selectors and the brute-force
//! Markov blanket).
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.

mod manifest;
mod model_input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use manifest::RunManifest;
use treeselect::ensemble::{build_ensemble, EnsembleConfig, Method};
use treeselect::eval::{comparison_json, comparison_table, cross_validate, CVPlan, EvalReport};
use treeselect::mdscheme;
use treeselect::{ColumnSelector, Dataset, EnsembleModel, Error};

#[derive(Parser)]
#[command(name = "treeselect", version, about = "Feature selection with regularized tree ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select features with a regularized tree ensemble.
    Select(SelectArgs),
    /// Train an ensemble classifier and write the model as JSON.
    Train(TrainArgs),
    /// Predict with a trained model; writes a CSV of labels and vote fractions.
    Predict(PredictArgs),
    /// Repeated stratified cross-validation comparing selection conditions.
    Eval(EvalArgs),
    /// Categorical-only reference selectors and Markov blanket search.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Target column, by name or zero-based index.
    #[arg(long)]
    target: String,
    /// Token marking missing cells.
    #[arg(long, default_value = "?")]
    missing_token: String,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Selection method.
    #[arg(long, value_enum, default_value_t = SelectorMethod::Rrf)]
    method: SelectorMethod,
    /// Penalty coefficient for features outside the selected set, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Number of regularized trees.
    #[arg(long, default_value_t = 100)]
    ntrees: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidates sampled per node; defaults to ceil(sqrt(M)).
    #[arg(long)]
    candidates: Option<usize>,
    /// Nodes lighter than this become leaves.
    #[arg(long, default_value_t = 2.0)]
    min_node_size: f64,
    /// Depth cap; unlimited when absent.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = TrainMethod::Rf)]
    method: TrainMethod,
    /// Restrict training to the features in this JSON file (a `select`
    /// report or a plain array of column names).
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Number of trees; defaults to 200 for rf, 100 otherwise.
    #[arg(long)]
    ntrees: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    min_node_size: f64,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Worker threads (rf builds only; never changes results).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model JSON from `train`.
    #[arg(long)]
    model: PathBuf,
    /// Input CSV; must contain every training feature column by name.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "?")]
    missing_token: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated conditions out of: all, rrf, rboost.
    #[arg(long, default_value = "all,rrf")]
    conditions: String,
    #[arg(long, default_value_t = 2)]
    folds: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Trees per selector run.
    #[arg(long, default_value_t = 100)]
    selector_trees: usize,
    /// Trees in the evaluation forest.
    #[arg(long, default_value_t = 200)]
    classifier_trees: usize,
    /// Worker threads across CV cells (never changes results).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    mode: OracleMode,
    /// Step/level cap for md and mdtree; defaults to the feature count.
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorMethod {
    Rrf,
    Rboost,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMethod {
    Rrf,
    Rboost,
    Rf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Md,
    Mdtree,
    Mb,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::Usage(_) => 2,
        CliError::Lib(Error::Config(_)) => 2,
        // A domain error surfacing here means an internal invariant broke.
        CliError::Lib(Error::Domain(_)) => 4,
        CliError::Lib(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn check_lambda(lambda: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CliError::Usage(format!(
            "--lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

fn read_input(args: &InputArgs) -> Result<(Vec<u8>, Dataset), CliError> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", args.input.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Data(format!("'{}' is not UTF-8", args.input.display())))?;
    let ds = Dataset::from_csv_str(
        &text,
        &ColumnSelector::parse(&args.target),
        &args.missing_token,
    )?;
    Ok((bytes, ds))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Lib(Error::Data(format!("serialization failed: {e}"))))?;
    std::fs::write(path, text + "\n").map_err(|e| {
        CliError::Lib(Error::Data(format!("cannot write '{}': {e}", path.display())))
    })?;
    Ok(())
}

fn tree_config(
    lambda: f64,
    seed: u64,
    candidates: Option<usize>,
    min_node_size: f64,
    max_depth: Option<usize>,
) -> treeselect::RegConfig {
    treeselect::RegConfig {
        lambda,
        n_candidates: candidates,
        min_node_size,
        max_depth,
        seed,
        ..treeselect::RegConfig::default()
    }
}

fn cmd_select(args: SelectArgs) -> Result<(), CliError> {
    check_lambda(args.lambda)?;
    let method = match args.method {
        SelectorMethod::Rrf => Method::Rrf,
        SelectorMethod::Rboost => Method::Rboost,
    };
    let (bytes, raw) = read_input(&args.input)?;
    let ds = raw.impute()?;
    let cfg = EnsembleConfig {
        method,
        n_trees: args.ntrees,
        tree: tree_config(
            args.lambda,
            args.seed,
            args.candidates,
            args.min_node_size,
            args.max_depth,
        ),
        trim_epsilon: 1e-8,
        threads: 1,
    };
    let model = build_ensemble(&ds, &cfg)?;

    let config = json!({
        "input": args.input.input.display().to_string(),
        "target": args.input.target,
        "missing_token": args.input.missing_token,
        "method": method.to_string(),
        "lambda": args.lambda,
        "ntrees": args.ntrees,
        "candidates": args.candidates,
        "min_node_size": args.min_node_size,
        "max_depth": args.max_depth,
        "seed": args.seed,
    });
    let manifest = RunManifest::new("select", config, &bytes, args.seed);
    let features: Vec<serde_json::Value> = model
        .selected
        .iter()
        .map(|s| {
            json!({
                "name": model.feature_names[s.index],
                "index": s.index,
                "first_tree": s.first_tree,
            })
        })
        .collect();
    let output = json!({
        "manifest": manifest,
        "selection": {
            "method": method.to_string(),
            "lambda": args.lambda,
            "ntrees": args.ntrees,
            "n_selected": features.len(),
            "features": features,
        },
    });
    write_json(&args.out, &output)?;
    println!(
        "selected {} of {} features -> {}",
        model.selected.len(),
        ds.n_features(),
        args.out.display()
    );
    Ok(())
}

/// Accepts a `select` report or a plain JSON array of column names.
fn read_feature_list(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("'{}' is not JSON: {e}", path.display())))?;
    let names: Option<Vec<String>> = if let Some(list) = value.as_array() {
        list.iter()
            .map(|v| v.as_str().map(|s| s.to_string()))
            .collect()
    } else {
        value
            .pointer("/selection/features")
            .and_then(|f| f.as_array())
            .map(|list| {
                list.iter()
                    .filter_map(|v| v.get("name").and_then(|n| n.as_str()))
                    .map(|s| s.to_string())
                    .collect()
            })
    };
    names.filter(|n| !n.is_empty()).ok_or_else(|| {
        CliError::Lib(Error::Data(format!(
            "'{}' holds no feature names (expected a select report or an array of strings)",
            path.display()
        )))
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    check_lambda(args.lambda)?;
    let (method, lambda, default_trees) = match args.method {
        TrainMethod::Rrf => (Method::Rrf, args.lambda, 100),
        TrainMethod::Rboost => (Method::Rboost, args.lambda, 100),
        TrainMethod::Rf => (Method::PlainRf, 1.0, 200),
    };
    let n_trees = args.ntrees.unwrap_or(default_trees);
    let (bytes, raw) = read_input(&args.input)?;
    let mut ds = raw.impute()?;
    let feature_names = match &args.features {
        Some(path) => {
            let names = read_feature_list(path)?;
            let indices = ds.feature_indices(&names)?;
            ds = ds.project(&indices)?;
            Some(names)
        }
        None => None,
    };
    let cfg = EnsembleConfig {
        method,
        n_trees,
        tree: tree_config(
            lambda,
            args.seed,
            args.candidates,
            args.min_node_size,
            args.max_depth,
        ),
        trim_epsilon: 1e-8,
        threads: args.threads,
    };
    let model = build_ensemble(&ds, &cfg)?;

    let config = json!({
        "input": args.input.input.display().to_string(),
        "target": args.input.target,
        "missing_token": args.input.missing_token,
        "method": method.to_string(),
        "features": feature_names,
        "lambda": lambda,
        "ntrees": n_trees,
        "candidates": args.candidates,
        "min_node_size": args.min_node_size,
        "max_depth": args.max_depth,
        "seed": args.seed,
    });
    let manifest = RunManifest::new("train", config, &bytes, args.seed);
    let mut output = model.to_json();
    output["manifest"] = serde_json::to_value(&manifest)
        .map_err(|e| CliError::Lib(Error::Data(format!("serialization failed: {e}"))))?;
    write_json(&args.out, &output)?;
    println!(
        "trained {} with {} trees on {} features -> {}",
        method,
        n_trees,
        ds.n_features(),
        args.out.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let model_text = std::fs::read_to_string(&args.model)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", args.model.display())))?;
    let model_json: serde_json::Value = serde_json::from_str(&model_text)
        .map_err(|e| Error::Data(format!("'{}' is not JSON: {e}", args.model.display())))?;
    let model = EnsembleModel::from_json(&model_json)?;

    let input_text = std::fs::read_to_string(&args.input)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", args.input.display())))?;
    let ds = model_input::load_for_model(&input_text, &model, &args.missing_token)?;
    // Prediction inputs are imputed with their own column statistics.
    let ds = ds.impute()?;
    let votes = model.predict_votes(&ds)?;

    let quote = |s: &str| -> String {
        if s.contains(',') || s.contains('"') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = String::new();
    let header: Vec<String> = std::iter::once("predicted".to_string())
        .chain(model.class_names.iter().map(|c| quote(&format!("vote_{c}"))))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row_votes in &votes {
        let mut best = 0;
        for (c, &v) in row_votes.iter().enumerate() {
            if v > row_votes[best] {
                best = c;
            }
        }
        let mut cells = vec![quote(&model.class_names[best])];
        cells.extend(row_votes.iter().map(|v| format!("{v}")));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(&args.out, out).map_err(|e| {
        CliError::Lib(Error::Data(format!("cannot write '{}': {e}", args.out.display())))
    })?;
    println!("predicted {} rows -> {}", votes.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    check_lambda(args.lambda)?;
    let conditions: Vec<String> = args
        .conditions
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if conditions.is_empty() {
        return Err(CliError::Usage("--conditions lists no conditions".into()));
    }
    for c in &conditions {
        if !matches!(c.as_str(), "all" | "rrf" | "rboost") {
            return Err(CliError::Usage(format!(
                "unknown condition '{c}' (expected all, rrf or rboost)"
            )));
        }
    }
    let (bytes, raw) = read_input(&args.input)?;
    let ds = raw.impute()?;
    let plan = CVPlan::new(args.folds, args.repeats, args.seed);
    let classifier = EnsembleConfig {
        n_trees: args.classifier_trees,
        ..EnsembleConfig::evaluator(0)
    };
    let mut reports: Vec<EvalReport> = Vec::new();
    for condition in &conditions {
        let selector = match condition.as_str() {
            "all" => None,
            "rrf" => Some(EnsembleConfig {
                n_trees: args.selector_trees,
                ..EnsembleConfig::selector(Method::Rrf, args.lambda, 0)
            }),
            "rboost" => Some(EnsembleConfig {
                n_trees: args.selector_trees,
                ..EnsembleConfig::selector(Method::Rboost, args.lambda, 0)
            }),
            _ => unreachable!(),
        };
        let report = cross_validate(&ds, selector.as_ref(), &classifier, &plan, args.threads)?;
        reports.push(report);
    }

    let table = comparison_table(&reports).map_err(CliError::Lib)?;
    print!("{table}");
    let config = json!({
        "input": args.input.input.display().to_string(),
        "target": args.input.target,
        "missing_token": args.input.missing_token,
        "conditions": conditions,
        "folds": args.folds,
        "repeats": args.repeats,
        "lambda": args.lambda,
        "selector_trees": args.selector_trees,
        "classifier_trees": args.classifier_trees,
        "seed": args.seed,
    });
    let manifest = RunManifest::new("eval", config, &bytes, args.seed);
    let output = json!({
        "manifest": manifest,
        "reports": reports,
        "comparison": comparison_json(&reports)?,
    });
    write_json(&args.out, &output)?;
    println!("report -> {}", args.out.display());
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let (bytes, raw) = read_input(&args.input)?;
    let ds = raw.impute()?;
    let max_steps = args.max_steps.unwrap_or(ds.n_features());
    let names = |indices: &[usize]| -> Vec<String> {
        indices
            .iter()
            .map(|&f| ds.feature_names()[f].clone())
            .collect()
    };
    let (mode, payload) = match args.mode {
        OracleMode::Md => {
            let picked = mdscheme::md_select(&ds, max_steps)?;
            ("md", json!({ "selected": names(&picked) }))
        }
        OracleMode::Mdtree => {
            let picked = mdscheme::md_tree_select(&ds, max_steps)?;
            ("mdtree", json!({ "selected": names(&picked) }))
        }
        OracleMode::Mb => {
            let blankets = mdscheme::markov_blanket_bruteforce(&ds)?;
            let named: Vec<Vec<String>> = blankets.iter().map(|b| names(b)).collect();
            ("mb", json!({ "blankets": named }))
        }
    };
    let config = json!({
        "input": args.input.input.display().to_string(),
        "target": args.input.target,
        "missing_token": args.input.missing_token,
        "mode": mode,
        "max_steps": args.max_steps,
    });
    let manifest = RunManifest::new("oracle", config, &bytes, 0);
    let mut output = json!({ "manifest": manifest, "oracle": payload });
    output["oracle"]["mode"] = json!(mode);
    write_json(&args.out, &output)?;
    println!("oracle {mode} -> {}", args.out.display());
    Ok(())
}
