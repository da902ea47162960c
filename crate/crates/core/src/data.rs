//! Tabular numeric datasets: CSV loading, z-score standardization, row
//! subsetting.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mlp::Scaling;

/// Samples-by-features matrix with named columns.
///
/// A dataset starts raw; `standardized` z-scores every column and records
/// the per-column transform so a trained model can be applied to new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    feature_names: Vec<String>,
    scaling: Option<Vec<Scaling>>,
}

impl Dataset {
    /// Wrap a raw matrix. Requires at least one row and two columns.
    pub fn from_matrix(values: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::invalid("dataset needs at least one sample"));
        }
        if values.ncols() < 2 {
            return Err(Error::invalid("dataset needs at least two features"));
        }
        if feature_names.len() != values.ncols() {
            return Err(Error::shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                values.ncols()
            )));
        }
        Ok(Dataset {
            values,
            feature_names,
            scaling: None,
        })
    }

    /// Used by the multimodal encoder, which standardizes numeric columns
    /// itself and leaves one-hot blocks untouched.
    pub(crate) fn with_scaling(
        values: Array2<f64>,
        feature_names: Vec<String>,
        scaling: Vec<Scaling>,
    ) -> Result<Self> {
        let mut ds = Dataset::from_matrix(values, feature_names)?;
        if scaling.len() != ds.num_features() {
            return Err(Error::shape("scaling length vs columns"));
        }
        ds.scaling = Some(scaling);
        Ok(ds)
    }

    /// Load a numeric CSV (header row mandatory). Any missing or
    /// non-numeric cell is a load-time error naming the line.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let feature_names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let d = feature_names.len();
        let mut rows: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for record in reader.records() {
            let record = record.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            let line = record
                .position()
                .map(|p| p.line().to_string())
                .unwrap_or_else(|| "?".into());
            if record.len() != d {
                return Err(Error::data(format!(
                    "{}: line {line}: {} fields, expected {d}",
                    path.display(),
                    record.len()
                )));
            }
            for (col, field) in record.iter().enumerate() {
                if field.trim().is_empty() {
                    return Err(Error::data(format!(
                        "{}: line {line}: missing value in column '{}'",
                        path.display(),
                        feature_names[col]
                    )));
                }
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::data(format!(
                        "{}: line {line}: cannot parse '{field}' in column '{}'",
                        path.display(),
                        feature_names[col]
                    ))
                })?;
                rows.push(v);
            }
            n += 1;
        }
        if n < 2 {
            return Err(Error::data(format!(
                "{}: need at least 2 samples, got {n}",
                path.display()
            )));
        }
        let values = Array2::from_shape_vec((n, d), rows)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        Dataset::from_matrix(values, feature_names)
    }

    /// Write the current values as CSV with a header row.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::data(e.to_string()))?;
        writer
            .write_record(&self.feature_names)
            .map_err(|e| Error::data(e.to_string()))?;
        for row in self.values.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writer
                .write_record(&fields)
                .map_err(|e| Error::data(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Per-column z-score. Constant columns get their std clamped to 1 and
    /// a warning; standardizing needs at least 2 samples.
    pub fn standardized(&self) -> Result<Dataset> {
        let (n, d) = self.values.dim();
        if n < 2 {
            return Err(Error::invalid(
                "standardization needs at least 2 samples",
            ));
        }
        let mut values = self.values.clone();
        let mut scaling = Vec::with_capacity(d);
        for c in 0..d {
            let col = self.values.column(c);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let mut std = var.sqrt();
            if std == 0.0 {
                log::warn!(
                    "column '{}' is constant; clamping std to 1",
                    self.feature_names[c]
                );
                std = 1.0;
            }
            for v in values.column_mut(c).iter_mut() {
                *v = (*v - mean) / std;
            }
            scaling.push(Scaling { mean, std });
        }
        Ok(Dataset {
            values,
            feature_names: self.feature_names.clone(),
            scaling: Some(scaling),
        })
    }

    pub fn is_standardized(&self) -> bool {
        self.scaling.is_some()
    }

    pub fn scaling(&self) -> Option<&[Scaling]> {
        self.scaling.as_deref()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    /// New dataset from the given row indices (order preserved).
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::invalid("empty subset"));
        }
        let d = self.num_features();
        let mut values = Array2::zeros((indices.len(), d));
        for (r, &idx) in indices.iter().enumerate() {
            if idx >= self.num_samples() {
                return Err(Error::invalid(format!("row index {idx} out of range")));
            }
            values.row_mut(r).assign(&self.values.row(idx));
        }
        Ok(Dataset {
            values,
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        })
    }
}
