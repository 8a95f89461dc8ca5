//! Reference oracles on categorical data: conditional mutual information,
//! the greedy max-dependency selection scheme, its tree-structured variant
//! (one feature per level), and brute-force Markov blanket discovery.
//!
//! These run on exact synthetic tables where empirical frequencies are the
//! distribution, so probabilities come straight from counts with no
//! smoothing, and independence thresholds can sit near machine precision.
//! Grouping uses ordered maps throughout: summation order is fixed, so
//! results are bit-reproducible run to run.

use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::info::{entropy, ClassHistogram};

/// Residual entropy (and conditional MI) at or below this counts as zero
/// for the greedy selection stop rules.
pub const MI_EPSILON: f64 = 1e-10;

/// Conditional-independence threshold for the Markov blanket oracle.
pub const MB_EPSILON: f64 = 1e-9;

fn require_categorical(ds: &Dataset, features: &[usize]) -> Result<()> {
    for &f in features {
        if ds.kinds()[f].is_numeric() {
            return Err(Error::Unsupported(format!(
                "feature '{}' is numeric; this oracle handles categorical data only",
                ds.feature_names()[f]
            )));
        }
    }
    Ok(())
}

/// Entropy in bits of the empirical distribution of `key(row)` over `rows`.
fn entropy_of<F: Fn(usize) -> Vec<u32>>(rows: &[usize], key: F) -> f64 {
    let mut counts: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for &r in rows {
        *counts.entry(key(r)).or_insert(0.0) += 1.0;
    }
    entropy(&ClassHistogram::from_counts(counts.into_values().collect()))
        .expect("nonempty row group")
}

/// I(A; Y) within one row group, where A is the compound value of
/// `a_features` and Y the target: H(A) + H(Y) - H(A, Y).
fn mi_within(ds: &Dataset, rows: &[usize], a_features: &[usize]) -> f64 {
    if rows.is_empty() || a_features.is_empty() {
        return 0.0;
    }
    let a_key = |r: usize| -> Vec<u32> { a_features.iter().map(|&f| ds.cat(f, r)).collect() };
    let y_key = |r: usize| -> Vec<u32> { vec![ds.target()[r]] };
    let ay_key = |r: usize| -> Vec<u32> {
        let mut k = a_key(r);
        k.push(ds.target()[r]);
        k
    };
    let mi = entropy_of(rows, a_key) + entropy_of(rows, y_key) - entropy_of(rows, ay_key);
    mi.max(0.0)
}

/// Group row ids by the joint assignment of `given`; a single group holding
/// everything when `given` is empty.
fn group_by(ds: &Dataset, rows: &[usize], given: &[usize]) -> BTreeMap<Vec<u32>, Vec<usize>> {
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        let key: Vec<u32> = given.iter().map(|&f| ds.cat(f, r)).collect();
        groups.entry(key).or_default().push(r);
    }
    groups
}

/// I(joint of `a_features`; Y | joint assignment of `given`), the
/// group-weighted sum over assignments of `given`.
fn conditional_mi_joint(ds: &Dataset, a_features: &[usize], given: &[usize]) -> f64 {
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    let n = ds.n_rows() as f64;
    group_by(ds, &all, given)
        .values()
        .map(|rows| rows.len() as f64 / n * mi_within(ds, rows, a_features))
        .sum()
}

/// Group-weighted residual entropy of the target over row groups: zero
/// exactly when every group is pure.
fn residual_entropy(ds: &Dataset, groups: &[Vec<usize>]) -> f64 {
    let n = ds.n_rows() as f64;
    groups
        .iter()
        .filter(|rows| !rows.is_empty())
        .map(|rows| rows.len() as f64 / n * entropy_of(rows, |r| vec![ds.target()[r]]))
        .sum()
}

/// Mutual information between one feature and the target given a set of
/// other features, in bits. An empty `given` yields the plain mutual
/// information.
pub fn conditional_mi(ds: &Dataset, feature: usize, given: &[usize]) -> Result<f64> {
    require_categorical(ds, &[feature])?;
    require_categorical(ds, given)?;
    ds.require_complete()?;
    Ok(conditional_mi_joint(ds, &[feature], given))
}

/// Greedy max-dependency selection: at each step pick the feature with the
/// greatest conditional mutual information given everything selected so
/// far, lowest index on ties (zero-score ties included, which is how
/// jointly-but-not-marginally informative pairs get picked up). Stops at
/// `max_steps` or once the selected set fully explains the target, i.e.
/// the residual conditional entropy drops to zero — at that point every
/// remaining conditional mutual information is zero as well.
pub fn md_select(ds: &Dataset, max_steps: usize) -> Result<Vec<usize>> {
    let all: Vec<usize> = (0..ds.n_features()).collect();
    require_categorical(ds, &all)?;
    ds.require_complete()?;
    let everything: Vec<usize> = (0..ds.n_rows()).collect();
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < max_steps.min(ds.n_features()) {
        let groups: Vec<Vec<usize>> = group_by(ds, &everything, &selected)
            .into_values()
            .collect();
        if residual_entropy(ds, &groups) <= MI_EPSILON {
            break;
        }
        let mut best: Option<usize> = None;
        let mut best_score = f64::NEG_INFINITY;
        for m in 0..ds.n_features() {
            if selected.contains(&m) {
                continue;
            }
            let score = conditional_mi_joint(ds, &[m], &selected);
            if score > best_score {
                best_score = score;
                best = Some(m);
            }
        }
        match best {
            Some(m) => selected.push(m),
            None => break,
        }
    }
    Ok(selected)
}

/// Level-wise max-dependency tree selection: one feature per level, chosen
/// to maximize the node-weighted sum of conditional mutual information over
/// the current level's nodes; every node then splits on that feature.
/// Stops at `max_levels` or once every node is pure (the same residual
/// entropy rule as [`md_select`]).
pub fn md_tree_select(ds: &Dataset, max_levels: usize) -> Result<Vec<usize>> {
    let all: Vec<usize> = (0..ds.n_features()).collect();
    require_categorical(ds, &all)?;
    ds.require_complete()?;
    let n = ds.n_rows() as f64;
    let mut nodes: Vec<Vec<usize>> = vec![(0..ds.n_rows()).collect()];
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < max_levels.min(ds.n_features()) {
        if residual_entropy(ds, &nodes) <= MI_EPSILON {
            break;
        }
        let mut best: Option<usize> = None;
        let mut best_score = f64::NEG_INFINITY;
        for m in 0..ds.n_features() {
            if selected.contains(&m) {
                continue;
            }
            let score: f64 = nodes
                .iter()
                .map(|rows| rows.len() as f64 / n * mi_within(ds, rows, &[m]))
                .sum();
            if score > best_score {
                best_score = score;
                best = Some(m);
            }
        }
        let Some(m) = best else { break };
        selected.push(m);
        // Split every node on m; a node where m is constant passes all its
        // rows to a single child.
        let mut next = Vec::new();
        for rows in &nodes {
            for child in group_by(ds, rows, &[m]).into_values() {
                next.push(child);
            }
        }
        nodes = next;
    }
    Ok(selected)
}

fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, m: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for f in start..m {
            current.push(f);
            rec(f + 1, m, size, current, out);
            current.pop();
        }
    }
    rec(0, m, size, &mut current, &mut out);
    out
}

/// All minimum-size feature subsets S with the rest of the features jointly
/// conditionally independent of the target given S, tested empirically on
/// the table. Subsets are enumerated in order of increasing size, then
/// lexicographically.
///
/// Exponential in the feature count; refuses tables wider than 15 features.
pub fn markov_blanket_bruteforce(ds: &Dataset) -> Result<Vec<Vec<usize>>> {
    let m = ds.n_features();
    if m > 15 {
        return Err(Error::Unsupported(format!(
            "brute-force Markov blanket enumeration is exponential; {m} features exceed the \
             limit of 15"
        )));
    }
    let all: Vec<usize> = (0..m).collect();
    require_categorical(ds, &all)?;
    ds.require_complete()?;

    for size in 0..=m {
        let mut minimizers = Vec::new();
        for subset in combinations(m, size) {
            let rest: Vec<usize> = (0..m).filter(|f| !subset.contains(f)).collect();
            if conditional_mi_joint(ds, &rest, &subset) <= MB_EPSILON {
                minimizers.push(subset);
            }
        }
        if !minimizers.is_empty() {
            return Ok(minimizers);
        }
    }
    unreachable!("the full feature set always satisfies the independence test");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSelector;

    fn ds(csv: &str) -> Dataset {
        Dataset::from_csv_str(csv, &ColumnSelector::Name("y".into()), "?").unwrap()
    }

    /// Exact XOR table: y = x1 XOR x2.
    fn xor_table() -> Dataset {
        ds("x1,x2,y\na,a,0\na,b,1\nb,a,1\nb,b,0\n")
    }

    #[test]
    fn xor_mutual_information() {
        let t = xor_table();
        // Individually uninformative, jointly decisive.
        assert!(conditional_mi(&t, 0, &[]).unwrap().abs() < 1e-12);
        assert!((conditional_mi(&t, 0, &[1]).unwrap() - 1.0).abs() < 1e-12);
        assert!((conditional_mi(&t, 1, &[0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmi_zero_for_conditioned_feature_and_independent_feature() {
        let t = ds("x1,x2,y\na,a,0\na,b,0\nb,a,1\nb,b,1\n");
        // x1 determines y; given x1, both x1 and x2 carry nothing.
        assert!(conditional_mi(&t, 0, &[0]).unwrap().abs() < 1e-12);
        assert!(conditional_mi(&t, 1, &[0]).unwrap().abs() < 1e-12);
        assert!(conditional_mi(&t, 0, &[]).unwrap() > 0.9);
    }

    #[test]
    fn cmi_rejects_numeric_features() {
        let t = ds("x1,x2,y\n1,a,0\n2,b,1\n");
        let err = conditional_mi(&t, 0, &[]).unwrap_err();
        assert!(err.to_string().contains("categorical"), "{err}");
    }

    /// Exhaustive binary table over `bits` features: row r holds the bit
    /// pattern of r, the target is bit r of `labels`. Constant labelings
    /// keep two class names with one unused.
    fn exhaustive_table(bits: usize, labels: u32) -> Dataset {
        use crate::dataset::{Column, FeatureKind};
        let n = 1usize << bits;
        let kinds: Vec<FeatureKind> = (0..bits)
            .map(|_| FeatureKind::Categorical {
                levels: vec!["0".into(), "1".into()],
            })
            .collect();
        let columns: Vec<Column> = (0..bits)
            .map(|b| {
                Column::Categorical((0..n).map(|r| Some(((r >> b) & 1) as u32)).collect())
            })
            .collect();
        let target: Vec<u32> = (0..n).map(|r| (labels >> r) & 1).collect();
        Dataset::new(
            (0..bits).map(|b| format!("x{}", b + 1)).collect(),
            kinds,
            columns,
            target,
            vec!["0".into(), "1".into()],
            "y".into(),
        )
        .unwrap()
    }

    #[test]
    fn md_select_picks_determining_feature_first() {
        // y equals x3 exactly; x1, x2 are noise patterns.
        let t = ds(concat!(
            "x1,x2,x3,y\n",
            "a,p,u,0\nb,q,v,1\na,q,u,0\nb,p,v,1\n",
            "b,p,u,0\na,q,v,1\nb,q,u,0\na,p,v,1\n"
        ));
        let picked = md_select(&t, 10).unwrap();
        assert_eq!(picked, vec![2]);
    }

    #[test]
    fn md_select_skips_duplicates() {
        // x2 duplicates x1; once x1 is in, the copy scores zero while x3
        // still carries information.
        let t = ds("x1,x2,x3,y\na,a,p,0\na,a,q,1\nb,b,p,1\nb,b,q,0\n");
        let picked = md_select(&t, 10).unwrap();
        assert!(!(picked.contains(&0) && picked.contains(&1)), "{picked:?}");
        assert!(picked.contains(&2));
    }

    #[test]
    fn md_select_solves_xor_with_noise() {
        // XOR plus a constant noise feature on the exact 4-row support:
        // both XOR inputs get selected (the first through a zero-score
        // tie), then the residual entropy hits zero and selection stops.
        let t = ds("x1,x2,x3,y\na,a,c,0\na,b,c,1\nb,a,c,1\nb,b,c,0\n");
        let picked = md_select(&t, 10).unwrap();
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1]);
    }

    #[test]
    fn md_tree_matches_md_on_exhaustive_support() {
        // All 3-feature binary tables with the full 8-row support.
        for labels in 0u32..256 {
            let t = exhaustive_table(3, labels);
            let mut md: Vec<usize> = md_select(&t, 3).unwrap();
            let mut tree: Vec<usize> = md_tree_select(&t, 3).unwrap();
            md.sort_unstable();
            tree.sort_unstable();
            assert_eq!(md, tree, "labels {labels:08b}");
        }
    }

    #[test]
    fn md_tree_trivial_cases() {
        // Pure dataset: residual entropy is zero up front, nothing selected.
        let pure = exhaustive_table(2, 0);
        assert_eq!(md_tree_select(&pure, 5).unwrap(), Vec::<usize>::new());
        assert_eq!(md_select(&pure, 5).unwrap(), Vec::<usize>::new());

        // y = x1 exactly: one level.
        let exact = ds("x1,x2,y\na,p,0\na,q,0\nb,p,1\nb,q,1\n");
        assert_eq!(md_tree_select(&exact, 5).unwrap(), vec![0]);
    }

    #[test]
    fn markov_blanket_xor() {
        let blankets = markov_blanket_bruteforce(&xor_table()).unwrap();
        assert_eq!(blankets, vec![vec![0, 1]]);
    }

    #[test]
    fn markov_blanket_redundant_feature() {
        // x2 alone determines y; x1 is correlated but redundant given x2.
        let t = ds(concat!(
            "x1,x2,y\n",
            "a,a,0\na,a,0\nb,b,1\nb,b,1\nb,a,0\na,b,1\n"
        ));
        let blankets = markov_blanket_bruteforce(&t).unwrap();
        assert_eq!(blankets, vec![vec![1]]);
    }

    #[test]
    fn markov_blanket_independent_target() {
        let t = ds("x1,x2,y\na,p,0\na,p,1\nb,q,0\nb,q,1\n");
        let blankets = markov_blanket_bruteforce(&t).unwrap();
        assert_eq!(blankets, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn markov_blanket_results_are_inclusion_minimal() {
        let t = ds(concat!(
            "x1,x2,x3,y\n",
            "a,a,p,0\na,b,p,1\nb,a,p,1\nb,b,p,0\n",
            "a,a,q,0\na,b,q,1\nb,a,q,1\nb,b,q,0\n"
        ));
        let blankets = markov_blanket_bruteforce(&t).unwrap();
        for blanket in &blankets {
            for drop in 0..blanket.len() {
                let smaller: Vec<usize> = blanket
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, &f)| f)
                    .collect();
                let rest: Vec<usize> =
                    (0..t.n_features()).filter(|f| !smaller.contains(f)).collect();
                assert!(
                    conditional_mi_joint(&t, &rest, &smaller) > MB_EPSILON,
                    "dropping a feature from {blanket:?} should break independence"
                );
            }
        }
    }

    #[test]
    fn markov_blanket_refuses_wide_tables() {
        let header: Vec<String> = (0..16).map(|i| format!("x{i}")).collect();
        let row1: Vec<&str> = (0..16).map(|_| "a").collect();
        let row2: Vec<&str> = (0..16).map(|_| "b").collect();
        let csv = format!(
            "{},y\n{},0\n{},1\n",
            header.join(","),
            row1.join(","),
            row2.join(",")
        );
        let t = ds(&csv);
        let err = markov_blanket_bruteforce(&t).unwrap_err();
        assert!(err.to_string().contains("15"), "{err}");
    }

    #[test]
    fn combinations_enumerate_in_order() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
