//! Evaluation harness: repeated stratified k-fold cross-validation with
//! selection inside the loop, the feature-count accuracy curve, and
//! comparison tables.
//!
//! Per cell (repeat, fold): features are selected on the training portion
//! only, the classifier trains on the training portion restricted to the
//! selection, and accuracy is scored on the held-out fold. Selection never
//! sees test rows. Every cell draws its seeds from the plan seed, so cells
//! can run in any order or in parallel without changing a single byte of
//! the report.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::ensemble::{build_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CVPlan {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl CVPlan {
    pub fn new(folds: usize, repeats: usize, seed: u64) -> CVPlan {
        CVPlan {
            folds,
            repeats,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("cross-validation needs at least 2 folds".into()));
        }
        if self.repeats < 1 {
            return Err(Error::Config("cross-validation needs at least 1 repeat".into()));
        }
        Ok(())
    }
}

/// Raw score of one (repeat, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub n_selected: usize,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub condition: String,
    pub plan: CVPlan,
    pub mean_accuracy: f64,
    /// Standard error of the per-repeat mean accuracies.
    pub std_error: f64,
    /// Mean number of features used by the classifier across cells.
    pub mean_selected: f64,
    pub cells: Vec<CellScore>,
    /// Wall-clock seconds; volatile, excluded from reproducibility hashes.
    pub wall_time_secs: f64,
}

impl EvalReport {
    /// JSON with the volatile wall-time zeroed; byte-identical across runs
    /// with equal seeds.
    pub fn canonical_json(&self) -> serde_json::Value {
        let mut clone = self.clone();
        clone.wall_time_secs = 0.0;
        serde_json::to_value(clone).expect("report serializes")
    }
}

/// Stratified fold assignment: per class, shuffle the class's rows and deal
/// them round-robin, rotating the starting fold by class so fold sizes stay
/// balanced. Every fold's class counts are within one instance of the exact
/// proportional share.
pub fn stratified_assignment(ds: &Dataset, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0);
    let mut assignment = vec![0usize; ds.n_rows()];
    for class in 0..ds.n_classes() {
        let mut rows: Vec<usize> = (0..ds.n_rows())
            .filter(|&r| ds.target()[r] as usize == class)
            .collect();
        rows.shuffle(&mut rng);
        for (i, row) in rows.into_iter().enumerate() {
            assignment[row] = (class + i) % folds;
        }
    }
    assignment
}

fn check_training_coverage(ds: &Dataset, assignment: &[usize], folds: usize) -> Result<()> {
    let mut fold_sizes = vec![0usize; folds];
    for &a in assignment {
        fold_sizes[a] += 1;
    }
    if let Some(fold) = fold_sizes.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!(
            "fold {fold} is empty ({} rows across {folds} folds); use fewer folds",
            assignment.len()
        )));
    }
    for fold in 0..folds {
        let mut present = vec![false; ds.n_classes()];
        for (row, &a) in assignment.iter().enumerate() {
            if a != fold {
                present[ds.target()[row] as usize] = true;
            }
        }
        if let Some(class) = present.iter().position(|&p| !p) {
            return Err(Error::Data(format!(
                "class '{}' is absent from the training portion of fold {fold}; \
                 use fewer folds",
                ds.class_names()[class]
            )));
        }
    }
    Ok(())
}

fn majority_class(ds: &Dataset) -> usize {
    let mut counts = vec![0usize; ds.n_classes()];
    for &t in ds.target() {
        counts[t as usize] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn accuracy(preds: &[usize], target: &[u32]) -> f64 {
    let hits = preds
        .iter()
        .zip(target)
        .filter(|(&p, &t)| p == t as usize)
        .count();
    hits as f64 / target.len() as f64
}

struct CellSpec {
    repeat: usize,
    fold: usize,
    selector_seed: u64,
    classifier_seed: u64,
}

fn run_cell(
    ds: &Dataset,
    assignment: &[usize],
    spec: &CellSpec,
    selector: Option<&EnsembleConfig>,
    classifier: &EnsembleConfig,
) -> Result<CellScore> {
    let train_rows: Vec<usize> = (0..ds.n_rows())
        .filter(|&r| assignment[r] != spec.fold)
        .collect();
    let test_rows: Vec<usize> = (0..ds.n_rows())
        .filter(|&r| assignment[r] == spec.fold)
        .collect();
    let train = ds.subset_rows(&train_rows)?;
    let test = ds.subset_rows(&test_rows)?;

    let selected_idx: Vec<usize> = match selector {
        Some(cfg) => {
            let model = build_ensemble(&train, &cfg.clone().with_seed(spec.selector_seed))?;
            model.selected_indices()
        }
        None => (0..ds.n_features()).collect(),
    };
    let selected_names: Vec<String> = selected_idx
        .iter()
        .map(|&f| ds.feature_names()[f].clone())
        .collect();

    let acc = if selected_idx.is_empty() {
        // Nothing selected: predict the training majority class.
        let majority = majority_class(&train);
        let preds = vec![majority; test.n_rows()];
        accuracy(&preds, test.target())
    } else {
        let train_p = train.project(&selected_idx)?;
        let test_p = test.project(&selected_idx)?;
        let model = build_ensemble(
            &train_p,
            &classifier.clone().with_seed(spec.classifier_seed),
        )?;
        accuracy(&model.predict(&test_p)?, test_p.target())
    };
    Ok(CellScore {
        repeat: spec.repeat,
        fold: spec.fold,
        accuracy: acc,
        n_selected: selected_idx.len(),
        selected: selected_names,
    })
}

/// Repeated stratified cross-validation of one condition.
///
/// `selector = None` scores the classifier on all features. `threads > 1`
/// runs cells in parallel; results are identical to the sequential run.
pub fn cross_validate(
    ds: &Dataset,
    selector: Option<&EnsembleConfig>,
    classifier: &EnsembleConfig,
    plan: &CVPlan,
    threads: usize,
) -> Result<EvalReport> {
    plan.validate()?;
    ds.require_complete()?;
    if let Some(cfg) = selector {
        cfg.validate()?;
    }
    classifier.validate()?;
    let started = Instant::now();

    // Seed layout per repeat r: rep = derive(seed, r); fold assignment uses
    // stream 0 of rep, cell f uses selector seed derive(rep, 1 + 2f) and
    // classifier seed derive(rep, 2 + 2f).
    let mut cells_spec: Vec<(CellSpec, Vec<usize>)> = Vec::new();
    for repeat in 0..plan.repeats {
        let rep_seed = derive_seed(plan.seed, repeat as u64);
        let assignment = stratified_assignment(ds, plan.folds, rep_seed);
        check_training_coverage(ds, &assignment, plan.folds)?;
        for fold in 0..plan.folds {
            cells_spec.push((
                CellSpec {
                    repeat,
                    fold,
                    selector_seed: derive_seed(rep_seed, 1 + 2 * fold as u64),
                    classifier_seed: derive_seed(rep_seed, 2 + 2 * fold as u64),
                },
                assignment.clone(),
            ));
        }
    }

    let results: Vec<Result<CellScore>> = if threads > 1 && cells_spec.len() > 1 {
        let workers = threads.min(cells_spec.len());
        let chunk = cells_spec.len().div_ceil(workers);
        let specs = &cells_spec;
        let mut collected: Vec<Vec<Result<CellScore>>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(specs.len());
                    scope.spawn(move || {
                        specs[lo..hi]
                            .iter()
                            .map(|(spec, assignment)| {
                                run_cell(ds, assignment, spec, selector, classifier)
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                collected.push(h.join().expect("evaluation thread panicked"));
            }
        });
        collected.into_iter().flatten().collect()
    } else {
        cells_spec
            .iter()
            .map(|(spec, assignment)| run_cell(ds, assignment, spec, selector, classifier))
            .collect()
    };
    let cells: Vec<CellScore> = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mean_accuracy = cells.iter().map(|c| c.accuracy).sum::<f64>() / cells.len() as f64;
    // One replicate = the mean of its folds; the standard error is over
    // replicate means.
    let repeat_means: Vec<f64> = (0..plan.repeats)
        .map(|r| {
            let scores: Vec<f64> = cells
                .iter()
                .filter(|c| c.repeat == r)
                .map(|c| c.accuracy)
                .collect();
            scores.iter().sum::<f64>() / scores.len() as f64
        })
        .collect();
    let std_error = if plan.repeats > 1 {
        let mean = repeat_means.iter().sum::<f64>() / repeat_means.len() as f64;
        let var = repeat_means
            .iter()
            .map(|m| (m - mean).powi(2))
            .sum::<f64>()
            / (repeat_means.len() - 1) as f64;
        (var / repeat_means.len() as f64).sqrt()
    } else {
        0.0
    };
    let mean_selected =
        cells.iter().map(|c| c.n_selected as f64).sum::<f64>() / cells.len() as f64;

    let condition = match selector {
        Some(cfg) => cfg.method.to_string(),
        None => "all".to_string(),
    };
    Ok(EvalReport {
        condition,
        plan: *plan,
        mean_accuracy,
        std_error,
        mean_selected,
        cells,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Accuracy versus feature count: stratified half/half split, features
/// added one at a time in a seeded random order, the classifier retrained
/// and scored per prefix.
pub fn accuracy_curve(
    ds: &Dataset,
    classifier: &EnsembleConfig,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    ds.require_complete()?;
    classifier.validate()?;
    let assignment = stratified_assignment(ds, 2, derive_seed(seed, 0));
    let train_rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| assignment[r] == 0).collect();
    let test_rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| assignment[r] == 1).collect();
    let train = ds.subset_rows(&train_rows)?;
    let test = ds.subset_rows(&test_rows)?;

    let mut order: Vec<usize> = (0..ds.n_features()).collect();
    order.shuffle(&mut stream_rng(seed, 1));

    let mut curve = Vec::with_capacity(ds.n_features());
    for k in 1..=ds.n_features() {
        let subset = &order[..k];
        let train_p = train.project(subset)?;
        let test_p = test.project(subset)?;
        let model = build_ensemble(
            &train_p,
            &classifier.clone().with_seed(derive_seed(seed, 2 + k as u64)),
        )?;
        curve.push((k, accuracy(&model.predict(&test_p)?, test_p.target())));
    }
    Ok(curve)
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx).powi(2);
        dy += (y - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        0.0
    } else {
        num / (dx * dy).sqrt()
    }
}

/// Aligned plain-text comparison table; rows keep the given order.
pub fn comparison_table(reports: &[EvalReport]) -> Result<String> {
    check_same_plan(reports)?;
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>10}\n",
        "condition", "accuracy", "stderr", "features"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<12} {:>10.4} {:>10.4} {:>10.1}\n",
            r.condition, r.mean_accuracy, r.std_error, r.mean_selected
        ));
    }
    Ok(out)
}

/// Machine-readable companion of [`comparison_table`].
pub fn comparison_json(reports: &[EvalReport]) -> Result<serde_json::Value> {
    check_same_plan(reports)?;
    Ok(serde_json::json!({
        "rows": reports
            .iter()
            .map(|r| {
                serde_json::json!({
                    "condition": r.condition,
                    "mean_accuracy": r.mean_accuracy,
                    "std_error": r.std_error,
                    "mean_selected": r.mean_selected,
                })
            })
            .collect::<Vec<_>>(),
    }))
}

fn check_same_plan(reports: &[EvalReport]) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Data("no reports to compare".into()));
    }
    let plan = reports[0].plan;
    for r in reports {
        if r.plan != plan {
            return Err(Error::Data(format!(
                "report '{}' does not share the comparison plan",
                r.condition
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSelector;
    use crate::ensemble::Method;

    fn ds(csv: &str) -> Dataset {
        Dataset::from_csv_str(csv, &ColumnSelector::Name("y".into()), "?").unwrap()
    }

    fn toy(n: usize) -> Dataset {
        let rows: Vec<String> = (0..n)
            .map(|i| {
                let x = i as f64;
                let z = (i * 7 % n) as f64;
                format!("{x},{z},{}", (x >= n as f64 / 2.0) as u8)
            })
            .collect();
        ds(&format!("a,b,y\n{}\n", rows.join("\n")))
    }

    #[test]
    fn stratification_within_one_instance() {
        let data = toy(25); // classes of 13 and 12 rows
        for folds in [2, 3, 5] {
            let assignment = stratified_assignment(&data, folds, 7);
            for class in 0..data.n_classes() {
                let class_total = data
                    .target()
                    .iter()
                    .filter(|&&t| t as usize == class)
                    .count() as f64;
                for fold in 0..folds {
                    let in_fold = (0..data.n_rows())
                        .filter(|&r| {
                            assignment[r] == fold && data.target()[r] as usize == class
                        })
                        .count() as f64;
                    let share = class_total / folds as f64;
                    assert!(
                        (in_fold - share).abs() <= 1.0,
                        "class {class} fold {fold}: {in_fold} vs {share}"
                    );
                }
            }
        }
    }

    #[test]
    fn missing_class_in_training_fold_errors() {
        // One class with a single row cannot appear in every training fold.
        let data = ds("a,y\n1,0\n2,0\n3,0\n4,1\n");
        let mut rare_ok = false;
        for seed in 0..3 {
            let assignment = stratified_assignment(&data, 4, seed);
            let err = check_training_coverage(&data, &assignment, 4);
            if let Err(e) = err {
                assert!(e.to_string().contains("fewer folds"), "{e}");
                rare_ok = true;
            }
        }
        assert!(rare_ok);
    }

    #[test]
    fn more_folds_than_rows_errors() {
        let data = ds("a,y\n1,0\n2,0\n3,1\n4,1\n");
        let classifier = EnsembleConfig {
            n_trees: 3,
            ..EnsembleConfig::evaluator(0)
        };
        let plan = CVPlan::new(6, 1, 1);
        let err = cross_validate(&data, None, &classifier, &plan, 1).unwrap_err();
        assert!(err.to_string().contains("fewer folds"), "{err}");
    }

    #[test]
    fn cross_validate_is_deterministic() {
        let data = toy(30);
        let plan = CVPlan::new(2, 3, 42);
        let classifier = EnsembleConfig {
            n_trees: 15,
            ..EnsembleConfig::evaluator(0)
        };
        let a = cross_validate(&data, None, &classifier, &plan, 1).unwrap();
        let b = cross_validate(&data, None, &classifier, &plan, 1).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert_eq!(a.cells.len(), plan.folds * plan.repeats);
        assert!(a.cells.iter().all(|c| (0.0..=1.0).contains(&c.accuracy)));
    }

    #[test]
    fn threaded_run_matches_sequential() {
        let data = toy(30);
        let plan = CVPlan::new(2, 2, 9);
        let selector = EnsembleConfig {
            n_trees: 10,
            ..EnsembleConfig::selector(Method::Rrf, 0.5, 0)
        };
        let classifier = EnsembleConfig {
            n_trees: 10,
            ..EnsembleConfig::evaluator(0)
        };
        let seq = cross_validate(&data, Some(&selector), &classifier, &plan, 1).unwrap();
        let par = cross_validate(&data, Some(&selector), &classifier, &plan, 4).unwrap();
        assert_eq!(seq.canonical_json(), par.canonical_json());
    }

    #[test]
    fn lambda_zero_gives_majority_rate() {
        let rows: Vec<String> = (0..30)
            .map(|i| format!("{i},{}", (i % 3 == 0) as u8))
            .collect();
        let data = ds(&format!("a,y\n{}\n", rows.join("\n")));
        let plan = CVPlan::new(2, 2, 5);
        let selector = EnsembleConfig {
            n_trees: 5,
            ..EnsembleConfig::selector(Method::Rrf, 0.0, 0)
        };
        let classifier = EnsembleConfig {
            n_trees: 5,
            ..EnsembleConfig::evaluator(0)
        };
        let report = cross_validate(&data, Some(&selector), &classifier, &plan, 1).unwrap();
        assert_eq!(report.mean_selected, 0.0);
        for cell in &report.cells {
            // Majority class is 0 ("false"): 20 of 30 rows; folds keep the
            // proportion, so each test fold scores exactly the majority rate.
            let expect = 10.0 / 15.0;
            assert!((cell.accuracy - expect).abs() < 1e-9, "{}", cell.accuracy);
        }
    }

    #[test]
    fn selection_ignores_test_fold() {
        // With the fold assignment held fixed: permuting test-fold rows
        // changes nothing, and replacing test-fold labels changes only the
        // accuracy, never the selection.
        let data = toy(40);
        let assignment = stratified_assignment(&data, 2, 77);
        let spec = CellSpec {
            repeat: 0,
            fold: 1,
            selector_seed: 101,
            classifier_seed: 202,
        };
        let selector = EnsembleConfig {
            n_trees: 8,
            ..EnsembleConfig::selector(Method::Rrf, 0.5, 0)
        };
        let classifier = EnsembleConfig {
            n_trees: 8,
            ..EnsembleConfig::evaluator(0)
        };
        let base = run_cell(&data, &assignment, &spec, Some(&selector), &classifier).unwrap();

        // Permute the test-fold rows among themselves.
        let mut order: Vec<usize> = (0..data.n_rows()).collect();
        let fold1: Vec<usize> = order.iter().copied().filter(|&r| assignment[r] == 1).collect();
        let mut rotated = fold1.clone();
        rotated.rotate_left(3);
        for (&from, &to) in fold1.iter().zip(&rotated) {
            order[from] = to;
        }
        let permuted = data.subset_rows(&order).unwrap();
        let perm_assignment: Vec<usize> = order.iter().map(|&r| assignment[r]).collect();
        let perm =
            run_cell(&permuted, &perm_assignment, &spec, Some(&selector), &classifier).unwrap();
        assert_eq!(base.selected, perm.selected);
        assert_eq!(base.accuracy, perm.accuracy);

        // Flip every fold-1 label, keeping columns and class names intact.
        let flipped_target: Vec<u32> = (0..data.n_rows())
            .map(|r| {
                if assignment[r] == 1 {
                    1 - data.target()[r]
                } else {
                    data.target()[r]
                }
            })
            .collect();
        let flipped = Dataset::new(
            data.feature_names().to_vec(),
            data.kinds().to_vec(),
            (0..data.n_features()).map(|j| data.column(j).clone()).collect(),
            flipped_target,
            data.class_names().to_vec(),
            data.target_name().to_string(),
        )
        .unwrap();
        let modified =
            run_cell(&flipped, &assignment, &spec, Some(&selector), &classifier).unwrap();
        assert_eq!(base.selected, modified.selected);
        assert!((base.accuracy - (1.0 - modified.accuracy)).abs() < 1e-12);
    }

    #[test]
    fn curve_has_one_point_per_feature() {
        let data = toy(24);
        let classifier = EnsembleConfig {
            n_trees: 5,
            ..EnsembleConfig::evaluator(0)
        };
        let curve = accuracy_curve(&data, &classifier, 3).unwrap();
        assert_eq!(curve.len(), data.n_features());
        assert_eq!(curve[0].0, 1);
        assert_eq!(curve.last().unwrap().0, data.n_features());

        let single = ds("a,y\n1,0\n2,1\n3,0\n4,1\n");
        let curve = accuracy_curve(&single, &classifier, 3).unwrap();
        assert_eq!(curve.len(), 1);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), 0.0);
        // Monotone but nonlinear is still a perfect rank correlation.
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 8.0, 27.0, 64.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_rows_keep_order_and_check_plans() {
        let data = toy(20);
        let plan = CVPlan::new(2, 2, 1);
        let classifier = EnsembleConfig {
            n_trees: 5,
            ..EnsembleConfig::evaluator(0)
        };
        let r1 = cross_validate(&data, None, &classifier, &plan, 1).unwrap();
        let table = comparison_table(std::slice::from_ref(&r1)).unwrap();
        assert_eq!(table.lines().count(), 2);

        let table = comparison_table(&[r1.clone(), r1.clone()]).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[1], lines[2]);

        let other_plan = CVPlan::new(2, 3, 1);
        let mut r2 = r1.clone();
        r2.plan = other_plan;
        assert!(comparison_table(&[r1, r2]).is_err());
    }
}
