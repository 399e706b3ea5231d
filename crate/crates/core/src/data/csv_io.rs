use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;

use super::LabeledDataset;
use crate::{Error, Result};

/// Loads a headered, comma-separated file. Labels in `label_column` are
/// re-encoded to `0..C` in order of first appearance; every other column
/// must be numeric.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::LabelColumnNotFound(label_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: headers[c].to_string(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        let raw = record.get(label_idx).unwrap_or("").trim().to_string();
        let next = codes.len();
        let code = *codes.entry(raw.clone()).or_insert_with(|| {
            names.push(raw);
            next
        });
        labels.push(code);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Array2::from_shape_vec((labels.len(), feature_cols.len()), values)
        .expect("row width fixed by header");
    // A single observed class still yields a binary problem.
    let num_classes = names.len().max(2);
    Ok(LabeledDataset::new(features, labels, num_classes)?.with_label_names(names))
}
