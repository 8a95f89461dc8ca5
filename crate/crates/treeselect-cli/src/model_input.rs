//! Build a prediction dataset in a trained model's schema space.
//!
//! Prediction inputs are plain CSVs that must contain every training
//! feature column by name (extra columns and any target column are
//! ignored). Cells parse against the training kinds; categorical strings
//! unseen at training append as new levels, which the trees route through
//! their heaviest child.

use treeselect::dataset::{Column, Dataset, FeatureKind};
use treeselect::{EnsembleModel, Error, Result};

pub fn load_for_model(
    text: &str,
    model: &EnsembleModel,
    missing_token: &str,
) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::Data("empty file: no header row".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let positions: Vec<usize> = model
        .feature_names
        .iter()
        .map(|name| {
            header.iter().position(|h| h == name).ok_or_else(|| {
                Error::Schema(format!(
                    "input lacks training column '{name}' (input has {} columns: {})",
                    header.len(),
                    header.join(",")
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("csv error: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Data(format!(
                "ragged row {}: {} cells, expected {}",
                i + 2,
                record.len(),
                header.len()
            )));
        }
        raw.push(record.iter().map(|s| s.to_string()).collect());
    }
    if raw.is_empty() {
        return Err(Error::Data("empty file: header but no data rows".into()));
    }

    let is_missing = |cell: &str| -> bool {
        cell == missing_token || matches!(cell.parse::<f64>(), Ok(v) if !v.is_finite())
    };

    let mut kinds = Vec::with_capacity(model.feature_names.len());
    let mut columns = Vec::with_capacity(model.feature_names.len());
    for (j, &pos) in positions.iter().enumerate() {
        match &model.kinds[j] {
            FeatureKind::Numeric => {
                let cells: Vec<Option<f64>> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let cell = row[pos].as_str();
                        if is_missing(cell) {
                            return Ok(None);
                        }
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .map(Some)
                            .ok_or_else(|| {
                                Error::Schema(format!(
                                    "column '{}' was numeric at training but row {} holds '{}'",
                                    model.feature_names[j],
                                    i + 1,
                                    cell
                                ))
                            })
                    })
                    .collect::<Result<_>>()?;
                kinds.push(FeatureKind::Numeric);
                columns.push(Column::Numeric(cells));
            }
            FeatureKind::Categorical { levels } => {
                let mut levels = levels.clone();
                let cells: Vec<Option<u32>> = raw
                    .iter()
                    .map(|row| {
                        let cell = row[pos].as_str();
                        if is_missing(cell) {
                            return None;
                        }
                        let idx = match levels.iter().position(|l| l == cell) {
                            Some(p) => p,
                            None => {
                                levels.push(cell.to_string());
                                levels.len() - 1
                            }
                        };
                        Some(idx as u32)
                    })
                    .collect();
                kinds.push(FeatureKind::Categorical { levels });
                columns.push(Column::Categorical(cells));
            }
        }
    }

    // The target plays no role in prediction; a placeholder column keeps
    // the dataset invariants satisfied.
    Dataset::new(
        model.feature_names.clone(),
        kinds,
        columns,
        vec![0; raw.len()],
        model.class_names.clone(),
        model.target_name.clone(),
    )
}
