//! Columnar tabular data: loading, validation, imputation, row views.
//!
//! A [`Dataset`] holds `M` feature columns of length `N` plus a categorical
//! target with `C` classes. Categorical cells store level indices, numeric
//! cells store finite reals; either kind may hold a missing marker until
//! [`Dataset::impute`] clears them. Datasets are immutable after
//! construction and safe to share across threads.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level name given to imputed categorical cells.
pub const MISSING_LEVEL: &str = "\u{ab}missing\u{bb}";

/// Default token marking a missing cell in CSV files.
pub const DEFAULT_MISSING_TOKEN: &str = "?";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical { levels: Vec<String> },
    Numeric,
}

impl FeatureKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }

    /// Number of levels for categorical features, 0 for numeric.
    pub fn arity(&self) -> usize {
        match self {
            FeatureKind::Categorical { levels } => levels.len(),
            FeatureKind::Numeric => 0,
        }
    }
}

/// One feature column; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Categorical(Vec<Option<u32>>),
    Numeric(Vec<Option<f64>>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    fn has_missing(&self) -> bool {
        match self {
            Column::Categorical(v) => v.iter().any(Option::is_none),
            Column::Numeric(v) => v.iter().any(Option::is_none),
        }
    }
}

/// Name-or-index reference to a CSV column.
#[derive(Debug, Clone)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl ColumnSelector {
    pub fn parse(s: &str) -> ColumnSelector {
        ColumnSelector::Name(s.to_string())
    }

    /// Resolve against a header: an exact name match wins; otherwise an
    /// all-digit string is treated as a zero-based index.
    fn resolve(&self, header: &[String]) -> Option<usize> {
        match self {
            ColumnSelector::Index(i) => (*i < header.len()).then_some(*i),
            ColumnSelector::Name(name) => {
                if let Some(pos) = header.iter().position(|h| h == name) {
                    Some(pos)
                } else if name.chars().all(|c| c.is_ascii_digit()) && !name.is_empty() {
                    let i: usize = name.parse().ok()?;
                    (i < header.len()).then_some(i)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    kinds: Vec<FeatureKind>,
    columns: Vec<Column>,
    target: Vec<u32>,
    class_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        kinds: Vec<FeatureKind>,
        columns: Vec<Column>,
        target: Vec<u32>,
        class_names: Vec<String>,
        target_name: String,
    ) -> Result<Dataset> {
        let ds = Dataset {
            feature_names,
            kinds,
            columns,
            target,
            class_names,
            target_name,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let m = self.columns.len();
        let n = self.target.len();
        if m < 1 {
            return Err(Error::Data("dataset must have at least one feature".into()));
        }
        if n < 1 {
            return Err(Error::Data("dataset must have at least one row".into()));
        }
        if self.class_names.len() < 2 {
            return Err(Error::Data("target must have at least two classes".into()));
        }
        if self.feature_names.len() != m || self.kinds.len() != m {
            return Err(Error::Data("feature names/kinds/columns disagree".into()));
        }
        {
            let mut names = self.feature_names.clone();
            names.push(self.target_name.clone());
            names.sort();
            if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Data(format!(
                    "duplicate column name '{}'",
                    dup[0]
                )));
            }
        }
        for (j, col) in self.columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Data(format!(
                    "column '{}' has {} rows, expected {}",
                    self.feature_names[j],
                    col.len(),
                    n
                )));
            }
            match (col, &self.kinds[j]) {
                (Column::Categorical(cells), FeatureKind::Categorical { levels }) => {
                    if levels.is_empty() {
                        return Err(Error::Data(format!(
                            "categorical column '{}' has no levels",
                            self.feature_names[j]
                        )));
                    }
                    let mut sorted = levels.clone();
                    sorted.sort();
                    sorted.dedup();
                    if sorted.len() != levels.len() {
                        return Err(Error::Data(format!(
                            "categorical column '{}' has duplicate level names",
                            self.feature_names[j]
                        )));
                    }
                    if cells.iter().flatten().any(|&v| v as usize >= levels.len()) {
                        return Err(Error::Data(format!(
                            "categorical column '{}' has a cell index out of range",
                            self.feature_names[j]
                        )));
                    }
                }
                (Column::Numeric(cells), FeatureKind::Numeric) => {
                    if cells.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(Error::Data(format!(
                            "numeric column '{}' contains a non-finite value",
                            self.feature_names[j]
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column '{}' storage disagrees with its declared kind",
                        self.feature_names[j]
                    )));
                }
            }
        }
        if self
            .target
            .iter()
            .any(|&c| c as usize >= self.class_names.len())
        {
            return Err(Error::Data("target class index out of range".into()));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[u32] {
        &self.target
    }

    pub fn column(&self, feature: usize) -> &Column {
        &self.columns[feature]
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(Column::has_missing)
    }

    /// Fails when any feature column still holds a missing marker.
    pub fn require_complete(&self) -> Result<()> {
        for (j, col) in self.columns.iter().enumerate() {
            if col.has_missing() {
                return Err(Error::Data(format!(
                    "column '{}' has missing values; impute before training",
                    self.feature_names[j]
                )));
            }
        }
        Ok(())
    }

    /// Categorical cell accessor; panics on numeric columns or missing cells.
    pub(crate) fn cat(&self, feature: usize, row: usize) -> u32 {
        match &self.columns[feature] {
            Column::Categorical(v) => v[row].expect("missing categorical cell"),
            Column::Numeric(_) => panic!("cat() on numeric column"),
        }
    }

    /// Numeric cell accessor; panics on categorical columns or missing cells.
    pub(crate) fn num(&self, feature: usize, row: usize) -> f64 {
        match &self.columns[feature] {
            Column::Numeric(v) => v[row].expect("missing numeric cell"),
            Column::Categorical(_) => panic!("num() on categorical column"),
        }
    }

    /// Load a CSV file with a header row.
    ///
    /// Column kinds are inferred per feature: `Numeric` when every
    /// non-missing cell parses as a finite real, otherwise `Categorical`
    /// with levels in first-appearance order. A cell is missing when it
    /// equals `missing_token` or parses as a non-finite float (NaN/inf
    /// tokens never become values). Target levels map in first-appearance
    /// order; the target may not have missing cells.
    pub fn load_csv<P: AsRef<Path>>(
        path: P,
        target: &ColumnSelector,
        missing_token: &str,
    ) -> Result<Dataset> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Data(format!("cannot read '{}': {}", path.as_ref().display(), e))
        })?;
        Self::from_csv_str(&text, target, missing_token)
    }

    /// Parse CSV text; see [`Dataset::load_csv`].
    pub fn from_csv_str(
        text: &str,
        target: &ColumnSelector,
        missing_token: &str,
    ) -> Result<Dataset> {
        if text.trim().is_empty() {
            return Err(Error::Data("empty file: no header row".into()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
        let n_cols = header.len();
        let target_idx = target.resolve(&header).ok_or_else(|| {
            Error::Data(format!(
                "missing target column {:?} (header: {})",
                match target {
                    ColumnSelector::Name(n) => n.clone(),
                    ColumnSelector::Index(i) => i.to_string(),
                },
                header.join(",")
            ))
        })?;
        if n_cols < 2 {
            return Err(Error::Data(
                "file must have at least one feature column besides the target".into(),
            ));
        }

        let mut raw: Vec<Vec<String>> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != n_cols {
                return Err(Error::Data(format!(
                    "ragged row {}: {} cells, expected {}",
                    i + 2,
                    record.len(),
                    n_cols
                )));
            }
            raw.push(record.iter().map(|s| s.to_string()).collect());
        }
        if raw.is_empty() {
            return Err(Error::Data("empty file: header but no data rows".into()));
        }

        // Missing marker: the token itself, or anything parsing non-finite.
        let is_missing = |cell: &str| -> bool {
            if cell == missing_token {
                return true;
            }
            matches!(cell.parse::<f64>(), Ok(v) if !v.is_finite())
        };
        let parse_numeric =
            |cell: &str| -> Option<f64> { cell.parse::<f64>().ok().filter(|v| v.is_finite()) };

        // Target: classes in first-appearance order, no missing allowed.
        let mut class_names: Vec<String> = Vec::new();
        let mut target_col: Vec<u32> = Vec::with_capacity(raw.len());
        for (i, row) in raw.iter().enumerate() {
            let cell = row[target_idx].as_str();
            if is_missing(cell) {
                return Err(Error::Data(format!(
                    "target cell missing at data row {}",
                    i + 1
                )));
            }
            let idx = match class_names.iter().position(|c| c == cell) {
                Some(p) => p,
                None => {
                    class_names.push(cell.to_string());
                    class_names.len() - 1
                }
            };
            target_col.push(idx as u32);
        }

        let mut feature_names = Vec::new();
        let mut kinds = Vec::new();
        let mut columns = Vec::new();
        for j in 0..n_cols {
            if j == target_idx {
                continue;
            }
            let numeric = raw
                .iter()
                .map(|row| row[j].as_str())
                .filter(|c| !is_missing(c))
                .all(|c| parse_numeric(c).is_some());
            if numeric {
                let cells: Vec<Option<f64>> = raw
                    .iter()
                    .map(|row| {
                        let c = row[j].as_str();
                        if is_missing(c) {
                            None
                        } else {
                            parse_numeric(c)
                        }
                    })
                    .collect();
                kinds.push(FeatureKind::Numeric);
                columns.push(Column::Numeric(cells));
            } else {
                let mut levels: Vec<String> = Vec::new();
                let mut cells: Vec<Option<u32>> = Vec::with_capacity(raw.len());
                for row in &raw {
                    let c = row[j].as_str();
                    if is_missing(c) {
                        cells.push(None);
                        continue;
                    }
                    let idx = match levels.iter().position(|l| l == c) {
                        Some(p) => p,
                        None => {
                            levels.push(c.to_string());
                            levels.len() - 1
                        }
                    };
                    cells.push(Some(idx as u32));
                }
                kinds.push(FeatureKind::Categorical { levels });
                columns.push(Column::Categorical(cells));
            }
            feature_names.push(header[j].clone());
        }

        Dataset::new(
            feature_names,
            kinds,
            columns,
            target_col,
            class_names,
            header[target_idx].clone(),
        )
    }

    /// Write the dataset back to CSV in canonical formatting (features in
    /// order, target last, missing cells as `missing_token`).
    pub fn write_csv<P: AsRef<Path>>(&self, path: P, missing_token: &str) -> Result<()> {
        std::fs::write(path, self.to_csv_string(missing_token))?;
        Ok(())
    }

    pub fn to_csv_string(&self, missing_token: &str) -> String {
        let mut out = String::new();
        let quote = |s: &str| -> String {
            if s.contains(',') || s.contains('"') || s.contains('\n') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let header: Vec<String> = self
            .feature_names
            .iter()
            .map(|n| quote(n))
            .chain(std::iter::once(quote(&self.target_name)))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for i in 0..self.n_rows() {
            let mut cells: Vec<String> = Vec::with_capacity(self.n_features() + 1);
            for j in 0..self.n_features() {
                let cell = match &self.columns[j] {
                    Column::Numeric(v) => match v[i] {
                        Some(x) => format!("{x}"),
                        None => missing_token.to_string(),
                    },
                    Column::Categorical(v) => match v[i] {
                        Some(l) => match &self.kinds[j] {
                            FeatureKind::Categorical { levels } => quote(&levels[l as usize]),
                            FeatureKind::Numeric => unreachable!(),
                        },
                        None => missing_token.to_string(),
                    },
                };
                cells.push(cell);
            }
            cells.push(quote(&self.class_names[self.target[i] as usize]));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Replace missing cells: numeric columns get the column median over
    /// non-missing cells, categorical columns an explicit extra level.
    /// Idempotent; an identical dataset comes back when nothing is missing.
    pub fn impute(&self) -> Result<Dataset> {
        if !self.has_missing() {
            return Ok(self.clone());
        }
        let mut kinds = self.kinds.clone();
        let mut columns = self.columns.clone();
        for j in 0..self.n_features() {
            match &mut columns[j] {
                Column::Numeric(cells) => {
                    if cells.iter().all(Option::is_some) {
                        continue;
                    }
                    let mut present: Vec<f64> = cells.iter().flatten().copied().collect();
                    if present.is_empty() {
                        return Err(Error::Data(format!(
                            "numeric column '{}' is entirely missing; cannot impute",
                            self.feature_names[j]
                        )));
                    }
                    present.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let mid = present.len() / 2;
                    let median = if present.len() % 2 == 1 {
                        present[mid]
                    } else {
                        (present[mid - 1] + present[mid]) / 2.0
                    };
                    for c in cells.iter_mut() {
                        if c.is_none() {
                            *c = Some(median);
                        }
                    }
                }
                Column::Categorical(cells) => {
                    if cells.iter().all(Option::is_some) {
                        continue;
                    }
                    let FeatureKind::Categorical { levels } = &mut kinds[j] else {
                        unreachable!()
                    };
                    let missing_idx = match levels.iter().position(|l| l == MISSING_LEVEL) {
                        Some(p) => p as u32,
                        None => {
                            levels.push(MISSING_LEVEL.to_string());
                            (levels.len() - 1) as u32
                        }
                    };
                    for c in cells.iter_mut() {
                        if c.is_none() {
                            *c = Some(missing_idx);
                        }
                    }
                }
            }
        }
        Dataset::new(
            self.feature_names.clone(),
            kinds,
            columns,
            self.target.clone(),
            self.class_names.clone(),
            self.target_name.clone(),
        )
    }

    /// Draw `n_draw` row ids uniformly with replacement, all weights 1.
    pub fn bootstrap<R: Rng>(&self, rng: &mut R, n_draw: usize) -> RowView<'_> {
        assert!(n_draw >= 1, "bootstrap requires n_draw >= 1");
        let n = self.n_rows();
        let rows: Vec<usize> = (0..n_draw).map(|_| rng.gen_range(0..n)).collect();
        let weights = vec![1.0; n_draw];
        RowView {
            dataset: self,
            rows,
            weights,
        }
    }

    /// View over all rows with unit weights.
    pub fn full_view(&self) -> RowView<'_> {
        RowView {
            dataset: self,
            rows: (0..self.n_rows()).collect(),
            weights: vec![1.0; self.n_rows()],
        }
    }

    /// View over all rows with caller-provided weights.
    pub fn weighted_view(&self, weights: Vec<f64>) -> RowView<'_> {
        assert_eq!(weights.len(), self.n_rows());
        RowView {
            dataset: self,
            rows: (0..self.n_rows()).collect(),
            weights,
        }
    }

    /// A new dataset holding only the given feature columns, in the given
    /// order. The target is kept.
    pub fn project(&self, features: &[usize]) -> Result<Dataset> {
        if features.is_empty() {
            return Err(Error::Data("cannot project to zero features".into()));
        }
        for &f in features {
            if f >= self.n_features() {
                return Err(Error::Data(format!("feature index {f} out of range")));
            }
        }
        Dataset::new(
            features
                .iter()
                .map(|&f| self.feature_names[f].clone())
                .collect(),
            features.iter().map(|&f| self.kinds[f].clone()).collect(),
            features.iter().map(|&f| self.columns[f].clone()).collect(),
            self.target.clone(),
            self.class_names.clone(),
            self.target_name.clone(),
        )
    }

    /// A new dataset holding only the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Dataset> {
        for &r in rows {
            if r >= self.n_rows() {
                return Err(Error::Data(format!("row index {r} out of range")));
            }
        }
        let columns = self
            .columns
            .iter()
            .map(|col| match col {
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical(v) => {
                    Column::Categorical(rows.iter().map(|&r| v[r]).collect())
                }
            })
            .collect();
        Dataset::new(
            self.feature_names.clone(),
            self.kinds.clone(),
            columns,
            rows.iter().map(|&r| self.target[r]).collect(),
            self.class_names.clone(),
            self.target_name.clone(),
        )
    }

    /// Locate features by name; errors name the first absent column.
    pub fn feature_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::Schema(format!("input has no column named '{n}'")))
            })
            .collect()
    }
}

/// A weighted multiset of rows of one dataset. Bootstrap samples duplicate
/// row ids; boosting supplies non-unit weights.
#[derive(Debug, Clone)]
pub struct RowView<'a> {
    dataset: &'a Dataset,
    rows: Vec<usize>,
    weights: Vec<f64>,
}

impl<'a> RowView<'a> {
    pub fn new(dataset: &'a Dataset, rows: Vec<usize>, weights: Vec<f64>) -> RowView<'a> {
        assert_eq!(rows.len(), weights.len());
        debug_assert!(rows.iter().all(|&r| r < dataset.n_rows()));
        debug_assert!(weights.iter().all(|&w| w >= 0.0));
        RowView {
            dataset,
            rows,
            weights,
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Iterate `(row_id, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().copied().zip(self.weights.iter().copied())
    }

    /// Weighted class histogram of the view.
    pub fn class_histogram(&self) -> crate::info::ClassHistogram {
        let mut hist = crate::info::ClassHistogram::new(self.dataset.n_classes());
        for (row, w) in self.iter() {
            hist.add(self.dataset.target[row] as usize, w);
        }
        hist
    }

    /// Partition by the level of a categorical feature. Children come back
    /// in ascending level order; only levels carrying positive weight appear.
    pub fn partition_categorical(&self, feature: usize) -> Vec<(u32, RowView<'a>)> {
        let arity = self.dataset.kinds[feature].arity();
        let mut buckets: Vec<(Vec<usize>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); arity];
        for (row, w) in self.iter() {
            let level = self.dataset.cat(feature, row) as usize;
            buckets[level].0.push(row);
            buckets[level].1.push(w);
        }
        buckets
            .into_iter()
            .enumerate()
            .filter(|(_, (_, ws))| ws.iter().sum::<f64>() > 0.0)
            .map(|(level, (rows, weights))| {
                (
                    level as u32,
                    RowView {
                        dataset: self.dataset,
                        rows,
                        weights,
                    },
                )
            })
            .collect()
    }

    /// Partition by a numeric threshold into (`<= t`, `> t`).
    pub fn partition_numeric(&self, feature: usize, threshold: f64) -> (RowView<'a>, RowView<'a>) {
        let mut left = (Vec::new(), Vec::new());
        let mut right = (Vec::new(), Vec::new());
        for (row, w) in self.iter() {
            let side = if self.dataset.num(feature, row) <= threshold {
                &mut left
            } else {
                &mut right
            };
            side.0.push(row);
            side.1.push(w);
        }
        (
            RowView {
                dataset: self.dataset,
                rows: left.0,
                weights: left.1,
            },
            RowView {
                dataset: self.dataset,
                rows: right.0,
                weights: right.1,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn target_sel() -> ColumnSelector {
        ColumnSelector::Name("y".into())
    }

    #[test]
    fn infers_kinds_from_cells() {
        let csv = "a,b,y\n1.5,red,0\n2,blue,1\n3,red,0\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 2);
        assert!(ds.kinds()[0].is_numeric());
        assert_eq!(
            ds.kinds()[1],
            FeatureKind::Categorical {
                levels: vec!["red".into(), "blue".into()]
            }
        );
        assert_eq!(ds.class_names(), &["0", "1"]);
    }

    #[test]
    fn missing_token_keeps_column_numeric() {
        let csv = "a,y\n1.5,0\n?,1\n2,0\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        assert!(ds.kinds()[0].is_numeric());
        assert!(ds.has_missing());
        match ds.column(0) {
            Column::Numeric(v) => assert_eq!(v, &vec![Some(1.5), None, Some(2.0)]),
            _ => panic!("expected numeric column"),
        }
    }

    #[test]
    fn non_finite_tokens_become_missing() {
        let csv = "a,y\n1,0\nNaN,1\ninf,0\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        assert!(ds.kinds()[0].is_numeric());
        match ds.column(0) {
            Column::Numeric(v) => assert_eq!(v, &vec![Some(1.0), None, None]),
            _ => panic!("expected numeric column"),
        }
    }

    #[test]
    fn errors_are_distinct() {
        let ragged = "a,b,y\n1,2,0\n1,2\n";
        let err = Dataset::from_csv_str(ragged, &target_sel(), "?").unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");

        let no_target = "a,b\n1,2\n";
        let err = Dataset::from_csv_str(no_target, &target_sel(), "?").unwrap_err();
        assert!(err.to_string().contains("missing target column"), "{err}");

        let missing_target_cell = "a,y\n1,0\n2,?\n";
        let err = Dataset::from_csv_str(missing_target_cell, &target_sel(), "?").unwrap_err();
        assert!(err.to_string().contains("target cell missing"), "{err}");

        let err = Dataset::from_csv_str("", &target_sel(), "?").unwrap_err();
        assert!(err.to_string().contains("empty file"), "{err}");
    }

    #[test]
    fn target_by_index() {
        let csv = "a,b,y\n1,2,0\n3,4,1\n";
        let ds = Dataset::from_csv_str(csv, &ColumnSelector::Index(2), "?").unwrap();
        assert_eq!(ds.target_name(), "y");
        assert_eq!(ds.n_features(), 2);
    }

    #[test]
    fn impute_numeric_median() {
        let csv = "a,y\n1,0\n?,1\n3,0\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let imp = ds.impute().unwrap();
        match imp.column(0) {
            Column::Numeric(v) => assert_eq!(v, &vec![Some(1.0), Some(2.0), Some(3.0)]),
            _ => panic!(),
        }
        assert!(!imp.has_missing());
    }

    #[test]
    fn impute_categorical_level() {
        let csv = "a,y\nred,0\n?,1\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let imp = ds.impute().unwrap();
        assert_eq!(
            imp.kinds()[0],
            FeatureKind::Categorical {
                levels: vec!["red".into(), MISSING_LEVEL.into()]
            }
        );
    }

    #[test]
    fn impute_identity_and_idempotent() {
        let csv = "a,b,y\n1,x,0\n2,y,1\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        assert_eq!(ds.impute().unwrap(), ds);

        let with_missing = "a,b,y\n1,x,0\n?,?,1\n3,y,0\n";
        let ds = Dataset::from_csv_str(with_missing, &target_sel(), "?").unwrap();
        let once = ds.impute().unwrap();
        assert_eq!(once.impute().unwrap(), once);
    }

    #[test]
    fn impute_all_missing_numeric_fails() {
        let csv = "a,b,y\n?,1,0\n?,2,1\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let err = ds.impute().unwrap_err();
        assert!(err.to_string().contains("'a'"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let csv = "a,b,y\n1.5,red,pos\n?,blue,neg\n2,?,pos\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let back = Dataset::from_csv_str(&ds.to_csv_string("?"), &target_sel(), "?").unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn csv_round_trip_with_quoting() {
        let csv = "a,b,y\n0.25,\"red, dark\",pos\n-3e2,\"say \"\"hi\"\"\",neg\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        assert_eq!(
            ds.kinds()[1],
            FeatureKind::Categorical {
                levels: vec!["red, dark".into(), "say \"hi\"".into()]
            }
        );
        let back = Dataset::from_csv_str(&ds.to_csv_string("?"), &target_sel(), "?").unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn duplicate_header_names_rejected() {
        let csv = "a,a,y\n1,2,0\n3,4,1\n";
        let err = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap_err();
        assert!(err.to_string().contains("duplicate column name 'a'"), "{err}");
    }

    #[test]
    fn bootstrap_reproducible_and_in_range() {
        let csv = "a,y\n1,0\n2,1\n3,0\n4,1\n5,0\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let v1 = ds.bootstrap(&mut r1, 5);
        let v2 = ds.bootstrap(&mut r2, 5);
        assert_eq!(v1.rows(), v2.rows());
        assert!(v1.rows().iter().all(|&r| r < 5));
        assert_eq!(v1.total_weight(), 5.0);

        let single = ds.bootstrap(&mut r1, 1);
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn bootstrap_distinct_fraction() {
        // E[distinct/N] -> 1 - 1/e for n_draw = N.
        let n = 64;
        let rows: Vec<String> = (0..n).map(|i| format!("{i},{}", i % 2)).collect();
        let csv = format!("a,y\n{}\n", rows.join("\n"));
        let ds = Dataset::from_csv_str(&csv, &target_sel(), "?").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 20_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let view = ds.bootstrap(&mut rng, n);
            let mut seen = vec![false; n];
            for &r in view.rows() {
                seen[r] = true;
            }
            acc += seen.iter().filter(|&&s| s).count() as f64 / n as f64;
        }
        let mean = acc / trials as f64;
        let expect = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((mean - expect).abs() < 0.02, "mean {mean} vs {expect}");
        assert!((mean - (1.0 - 1.0 / std::f64::consts::E)).abs() < 0.02);
    }

    #[test]
    fn project_and_subset() {
        let csv = "a,b,c,y\n1,2,3,0\n4,5,6,1\n";
        let ds = Dataset::from_csv_str(csv, &target_sel(), "?").unwrap();
        let p = ds.project(&[2, 0]).unwrap();
        assert_eq!(p.feature_names(), &["c", "a"]);
        assert!(ds.project(&[]).is_err());

        let s = ds.subset_rows(&[1]).unwrap();
        assert_eq!(s.n_rows(), 1);
        assert_eq!(s.target(), &[1]);
    }
}
