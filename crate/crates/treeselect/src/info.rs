//! Weighted information-theoretic kernels in bits: entropy, conditional
//! entropy, information gain, symmetric uncertainty, and split-gain search.
//!
//! Everything works on weighted counts rather than raw counts so bagged and
//! boosted trees share one code path.

use serde::{Deserialize, Serialize};

use crate::dataset::RowView;
use crate::error::{Error, Result};

/// Numerical floor below which a gain is treated as zero.
pub const GAIN_EPSILON: f64 = 1e-10;

/// Weighted per-class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    counts: Vec<f64>,
    total: f64,
}

impl ClassHistogram {
    pub fn new(n_classes: usize) -> ClassHistogram {
        ClassHistogram {
            counts: vec![0.0; n_classes],
            total: 0.0,
        }
    }

    pub fn from_counts(counts: Vec<f64>) -> ClassHistogram {
        let total = counts.iter().sum();
        ClassHistogram { counts, total }
    }

    pub fn add(&mut self, class: usize, weight: f64) {
        self.counts[class] += weight;
        self.total += weight;
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    /// At most one class carries positive weight.
    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0.0).count() <= 1
    }

    /// Class with the greatest weight; lowest index on ties.
    pub fn argmax_class(&self) -> usize {
        let mut best = 0;
        for (c, &w) in self.counts.iter().enumerate() {
            if w > self.counts[best] {
                best = c;
            }
        }
        best
    }

    /// Subtract `other` from `self`, clamping tiny negatives from float noise.
    pub fn minus(&self, other: &ClassHistogram) -> ClassHistogram {
        let counts: Vec<f64> = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| (a - b).max(0.0))
            .collect();
        ClassHistogram::from_counts(counts)
    }
}

/// Shannon entropy of a weighted histogram, in bits.
pub fn entropy(hist: &ClassHistogram) -> Result<f64> {
    if hist.total <= 0.0 {
        return Err(Error::Domain("entropy of an empty histogram".into()));
    }
    let mut h = 0.0;
    for &w in &hist.counts {
        if w > 0.0 {
            let p = w / hist.total;
            h -= p * p.log2();
        }
    }
    Ok(h.max(0.0))
}

/// Weighted average of child entropies, weights proportional to child totals.
pub fn conditional_entropy(children: &[ClassHistogram]) -> Result<f64> {
    let grand: f64 = children.iter().map(|c| c.total).sum();
    if grand <= 0.0 {
        return Err(Error::Domain(
            "conditional entropy over empty children".into(),
        ));
    }
    let mut h = 0.0;
    for child in children {
        if child.total > 0.0 {
            h += child.total / grand * entropy(child)?;
        }
    }
    Ok(h)
}

/// Information gain of a split: parent entropy minus the weighted child
/// entropy, floored at zero.
pub fn info_gain(parent: &ClassHistogram, children: &[ClassHistogram]) -> Result<f64> {
    let child_total: f64 = children.iter().map(|c| c.total).sum();
    let tol = 1e-6 * parent.total.max(1.0);
    if (child_total - parent.total).abs() > tol {
        return Err(Error::Domain(format!(
            "child totals {child_total} do not sum to parent total {}",
            parent.total
        )));
    }
    Ok((entropy(parent)? - conditional_entropy(children)?).max(0.0))
}

/// 2-D weighted contingency table, row-major.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<f64>,
}

impl ContingencyTable {
    pub fn new(n_rows: usize, n_cols: usize) -> ContingencyTable {
        ContingencyTable {
            n_rows,
            n_cols,
            cells: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn add(&mut self, row: usize, col: usize, weight: f64) {
        self.cells[row * self.n_cols + col] += weight;
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    fn row_marginal(&self) -> ClassHistogram {
        let counts = (0..self.n_rows)
            .map(|r| (0..self.n_cols).map(|c| self.cells[r * self.n_cols + c]).sum())
            .collect();
        ClassHistogram::from_counts(counts)
    }

    fn col_marginal(&self) -> ClassHistogram {
        let counts = (0..self.n_cols)
            .map(|c| (0..self.n_rows).map(|r| self.cells[r * self.n_cols + c]).sum())
            .collect();
        ClassHistogram::from_counts(counts)
    }

    /// Row-variable histograms conditioned on each column value.
    fn per_column(&self) -> Vec<ClassHistogram> {
        (0..self.n_cols)
            .map(|c| {
                ClassHistogram::from_counts(
                    (0..self.n_rows)
                        .map(|r| self.cells[r * self.n_cols + c])
                        .collect(),
                )
            })
            .collect()
    }
}

/// Symmetric uncertainty `2*(H(A) - H(A|B)) / (H(A) + H(B))` in [0, 1],
/// where A is the row variable of the table and B the column variable.
pub fn symmetric_uncertainty(table: &ContingencyTable) -> Result<f64> {
    if table.total() <= 0.0 {
        return Err(Error::Domain("empty contingency table".into()));
    }
    let h_a = entropy(&table.row_marginal())?;
    let h_b = entropy(&table.col_marginal())?;
    if h_a + h_b <= 0.0 {
        return Err(Error::Domain(
            "symmetric uncertainty undefined: both marginals constant".into(),
        ));
    }
    let h_a_given_b = conditional_entropy(&table.per_column())?;
    let su = 2.0 * (h_a - h_a_given_b).max(0.0) / (h_a + h_b);
    Ok(su.clamp(0.0, 1.0))
}

/// A candidate split of one feature at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitCandidate {
    /// Multiway split on every level present at the node, in ascending
    /// level order; `levels.len()` is the arity and is at least 2.
    Categorical { feature: usize, levels: Vec<u32> },
    /// Binary split into `<= threshold` and `> threshold`.
    Numeric { feature: usize, threshold: f64 },
}

impl SplitCandidate {
    pub fn feature(&self) -> usize {
        match self {
            SplitCandidate::Categorical { feature, .. } => *feature,
            SplitCandidate::Numeric { feature, .. } => *feature,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SplitCandidate::Categorical { levels, .. } => levels.len(),
            SplitCandidate::Numeric { .. } => 2,
        }
    }
}

/// Best binary threshold for a numeric feature.
///
/// Scans midpoints between consecutive distinct sorted values and returns
/// the threshold maximizing the information gain of `{<= t, > t}`. Ties
/// break toward the smallest threshold; a constant column yields gain 0
/// with an arbitrary threshold. The view's rows must have no missing cell
/// in the feature (impute first).
pub fn best_numeric_threshold(
    view: &RowView<'_>,
    feature: usize,
    parent: &ClassHistogram,
) -> Result<(f64, f64)> {
    if view.is_empty() {
        return Err(Error::Domain("threshold search on an empty view".into()));
    }
    if !view.dataset().kinds()[feature].is_numeric() {
        return Err(Error::Unsupported(format!(
            "feature {feature} is not numeric"
        )));
    }
    let ds = view.dataset();
    let mut cells: Vec<(f64, u32, f64)> = view
        .iter()
        .map(|(row, w)| (ds.num(feature, row), ds.target()[row], w))
        .collect();
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut left = ClassHistogram::new(parent.n_classes());
    let mut best_gain = 0.0;
    let mut best_threshold = cells[0].0;
    for i in 0..cells.len() - 1 {
        left.add(cells[i].1 as usize, cells[i].2);
        if cells[i].0 < cells[i + 1].0 {
            let threshold = (cells[i].0 + cells[i + 1].0) / 2.0;
            let right = parent.minus(&left);
            let gain = info_gain(parent, &[left.clone(), right])?;
            if gain > best_gain {
                best_gain = gain;
                best_threshold = threshold;
            }
        }
    }
    Ok((best_threshold, best_gain))
}

/// Gain of the multiway candidate splitting on every level of a categorical
/// feature present at the node. `None` when fewer than two levels carry
/// weight (no admissible candidate).
pub fn categorical_split_gain(
    view: &RowView<'_>,
    feature: usize,
    parent: &ClassHistogram,
) -> Result<Option<(SplitCandidate, f64)>> {
    let parts = view.partition_categorical(feature);
    if parts.len() < 2 {
        return Ok(None);
    }
    let levels: Vec<u32> = parts.iter().map(|(level, _)| *level).collect();
    let hists: Vec<ClassHistogram> = parts.iter().map(|(_, v)| v.class_histogram()).collect();
    let gain = info_gain(parent, &hists)?;
    Ok(Some((SplitCandidate::Categorical { feature, levels }, gain)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnSelector, Dataset};
    use proptest::prelude::*;

    fn hist(counts: &[f64]) -> ClassHistogram {
        ClassHistogram::from_counts(counts.to_vec())
    }

    #[test]
    fn entropy_known_values() {
        assert_eq!(entropy(&hist(&[5.0, 5.0])).unwrap(), 1.0);
        assert_eq!(entropy(&hist(&[7.0, 0.0])).unwrap(), 0.0);
        // Direct evaluation at p = (0.25, 0.75).
        let expect = 0.811_278_124_459_132_8;
        assert!((entropy(&hist(&[1.0, 3.0])).unwrap() - expect).abs() < 1e-12);
        assert!(entropy(&hist(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn conditional_entropy_known_values() {
        let parent = hist(&[3.0, 5.0]);
        let h = conditional_entropy(std::slice::from_ref(&parent)).unwrap();
        assert!((h - entropy(&parent).unwrap()).abs() < 1e-15);

        let pure = conditional_entropy(&[hist(&[4.0, 0.0]), hist(&[0.0, 4.0])]).unwrap();
        assert_eq!(pure, 0.0);

        let mixed = conditional_entropy(&[hist(&[1.0, 3.0]), hist(&[3.0, 1.0])]).unwrap();
        assert!((mixed - 0.811_278_124_459_132_8).abs() < 1e-12);

        assert!(conditional_entropy(&[hist(&[0.0, 0.0])]).is_err());
    }

    #[test]
    fn info_gain_known_values() {
        // XOR split on one variable: both children stay half/half.
        let parent = hist(&[2.0, 2.0]);
        let g = info_gain(&parent, &[hist(&[1.0, 1.0]), hist(&[1.0, 1.0])]).unwrap();
        assert_eq!(g, 0.0);

        let g = info_gain(&parent, &[hist(&[2.0, 0.0]), hist(&[0.0, 2.0])]).unwrap();
        assert_eq!(g, 1.0);

        let parent = hist(&[4.0, 4.0]);
        let g = info_gain(&parent, &[hist(&[1.0, 3.0]), hist(&[3.0, 1.0])]).unwrap();
        assert!((g - 0.188_721_875_540_867_2).abs() < 1e-12);

        // Totals must agree.
        assert!(info_gain(&parent, &[hist(&[1.0, 1.0])]).is_err());
    }

    #[test]
    fn symmetric_uncertainty_known_values() {
        // A == B, uniform binary.
        let mut t = ContingencyTable::new(2, 2);
        t.add(0, 0, 2.0);
        t.add(1, 1, 2.0);
        assert_eq!(symmetric_uncertainty(&t).unwrap(), 1.0);

        // Independent.
        let mut t = ContingencyTable::new(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                t.add(r, c, 1.0);
            }
        }
        assert_eq!(symmetric_uncertainty(&t).unwrap(), 0.0);

        // XOR pair: X1 vs Y over the 4-cell joint is independent.
        let mut t = ContingencyTable::new(2, 2);
        t.add(0, 0, 1.0); // x1=0, y=0 (x2=0)
        t.add(0, 1, 1.0); // x1=0, y=1 (x2=1)
        t.add(1, 1, 1.0); // x1=1, y=1 (x2=0)
        t.add(1, 0, 1.0); // x1=1, y=0 (x2=1)
        assert_eq!(symmetric_uncertainty(&t).unwrap(), 0.0);

        // Both marginals constant.
        let mut t = ContingencyTable::new(1, 1);
        t.add(0, 0, 3.0);
        assert!(symmetric_uncertainty(&t).is_err());
    }

    #[test]
    fn su_is_symmetric() {
        let mut ab = ContingencyTable::new(2, 3);
        let mut ba = ContingencyTable::new(3, 2);
        let cells = [(0, 0, 3.0), (0, 1, 1.0), (0, 2, 2.0), (1, 0, 1.0), (1, 2, 5.0)];
        for &(r, c, w) in &cells {
            ab.add(r, c, w);
            ba.add(c, r, w);
        }
        let su1 = symmetric_uncertainty(&ab).unwrap();
        let su2 = symmetric_uncertainty(&ba).unwrap();
        assert!((su1 - su2).abs() < 1e-12);
    }

    fn numeric_ds(values: &[f64], classes: &[u32]) -> Dataset {
        let rows: Vec<String> = values
            .iter()
            .zip(classes)
            .map(|(v, c)| format!("{v},{c}"))
            .collect();
        let csv = format!("a,y\n{}\n", rows.join("\n"));
        Dataset::from_csv_str(&csv, &ColumnSelector::Name("y".into()), "?").unwrap()
    }

    #[test]
    fn threshold_perfect_separation() {
        let ds = numeric_ds(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let view = ds.full_view();
        let parent = view.class_histogram();
        let (t, g) = best_numeric_threshold(&view, 0, &parent).unwrap();
        assert_eq!(t, 2.5);
        assert_eq!(g, 1.0);
    }

    #[test]
    fn threshold_constant_column() {
        let ds = numeric_ds(&[2.0, 2.0, 2.0], &[0, 1, 0]);
        let view = ds.full_view();
        let parent = view.class_histogram();
        let (_, g) = best_numeric_threshold(&view, 0, &parent).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn threshold_tie_breaks_low() {
        // Gains at t=1.5 and t=2.5 are equal; the scan keeps the smaller.
        let ds = numeric_ds(&[1.0, 2.0, 3.0], &[0, 1, 0]);
        let view = ds.full_view();
        let parent = view.class_histogram();
        let (t, g) = best_numeric_threshold(&view, 0, &parent).unwrap();
        assert_eq!(t, 1.5);
        assert!((g - 0.251_629_167_387_822_8).abs() < 1e-12);
    }

    #[test]
    fn categorical_gain_multiway() {
        let csv = "color,y\nred,0\ngreen,1\nblue,2\nred,0\n";
        let ds = Dataset::from_csv_str(csv, &ColumnSelector::Name("y".into()), "?").unwrap();
        let view = ds.full_view();
        let parent = view.class_histogram();
        let (cand, gain) = categorical_split_gain(&view, 0, &parent).unwrap().unwrap();
        assert_eq!(cand.arity(), 3);
        assert!((gain - entropy(&parent).unwrap()).abs() < 1e-12);

        // Single present level is not an admissible candidate.
        let csv = "c,y\nx,0\nx,1\n";
        let ds = Dataset::from_csv_str(csv, &ColumnSelector::Name("y".into()), "?").unwrap();
        let view = ds.full_view();
        let parent = view.class_histogram();
        assert!(categorical_split_gain(&view, 0, &parent).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn entropy_invariances(
            counts in proptest::collection::vec(0.0f64..40.0, 2..6),
            scale in 0.01f64..100.0,
            swap in (0usize..6, 0usize..6),
        ) {
            prop_assume!(counts.iter().sum::<f64>() > 0.0);
            let h = entropy(&hist(&counts)).unwrap();

            // Scale invariance.
            let scaled: Vec<f64> = counts.iter().map(|c| c * scale).collect();
            let hs = entropy(&hist(&scaled)).unwrap();
            prop_assert!((h - hs).abs() < 1e-9);

            // Permutation invariance.
            let mut permuted = counts.clone();
            let (i, j) = (swap.0 % counts.len(), swap.1 % counts.len());
            permuted.swap(i, j);
            let hp = entropy(&hist(&permuted)).unwrap();
            prop_assert!((h - hp).abs() < 1e-12);

            // Range: [0, log2 C].
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (counts.len() as f64).log2() + 1e-12);
        }

        #[test]
        fn gain_bounded_by_parent_entropy(
            children in proptest::collection::vec(
                proptest::collection::vec(0.0f64..20.0, 3), 1..5),
        ) {
            let hists: Vec<ClassHistogram> =
                children.iter().map(|c| hist(c)).collect();
            let mut parent = ClassHistogram::new(3);
            for h in &hists {
                for (c, &w) in h.counts().iter().enumerate() {
                    parent.add(c, w);
                }
            }
            prop_assume!(parent.total() > 0.0);
            let g = info_gain(&parent, &hists).unwrap();
            prop_assert!(g >= 0.0);
            prop_assert!(g <= entropy(&parent).unwrap() + 1e-9);
            // A single-child "split" carries no information.
            let g1 = info_gain(&parent, std::slice::from_ref(&parent)).unwrap();
            prop_assert!(g1.abs() < 1e-12);
        }
    }
}
