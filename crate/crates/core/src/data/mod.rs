//! Dataset representation, CSV I/O and synthetic generators.
//!
//! Matrices are stored features-by-samples (`d × n`): column `j` is sample `j`.

mod generators;
mod io;

pub use generators::{
    compose_multiview, compose_multiview_with_permutations, gen_atom, gen_gaussian_blobs,
    gen_lsun, gen_rings, generate, GeneratorKind, GeneratorSpec,
};
pub use io::{
    load_csv, read_labels_csv, read_views_csv, write_data_csv, write_labels_csv,
    write_views_csv, Orientation,
};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{MiscError, Result};

/// A `d × n` real matrix with optional feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    values: Array2<f64>,
    feature_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        Self::with_names(values, None)
    }

    pub fn with_names(values: Array2<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        let (d, n) = values.dim();
        if d < 1 {
            return Err(MiscError::invalid("data matrix needs at least one feature"));
        }
        if n < 2 {
            return Err(MiscError::invalid(format!(
                "data matrix needs at least two samples, got {n}"
            )));
        }
        if let Some((idx, _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MiscError::invalid(format!(
                "non-finite entry at feature {}, sample {}",
                idx.0, idx.1
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != d {
                return Err(MiscError::DimensionMismatch {
                    expected: d,
                    found: names.len(),
                });
            }
        }
        Ok(DataMatrix {
            values,
            feature_names,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of features.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples.
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }
}

/// A data matrix together with one or more ground-truth labelings ("views").
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub views: Vec<(String, Vec<usize>)>,
}

impl LabeledDataset {
    pub fn new(data: DataMatrix, views: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let n = data.n_samples();
        for (name, labels) in &views {
            if labels.len() != n {
                return Err(MiscError::invalid(format!(
                    "view `{name}` has {} labels for {n} samples",
                    labels.len()
                )));
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            for &l in labels {
                seen[l] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(MiscError::invalid(format!(
                    "view `{name}` labels are not contiguous in 0..{k}"
                )));
            }
        }
        Ok(LabeledDataset { data, views })
    }

    pub fn view(&self, name: &str) -> Option<&[usize]> {
        self.views
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, l)| l.as_slice())
    }

    pub fn label_vectors(&self) -> Vec<Vec<usize>> {
        self.views.iter().map(|(_, l)| l.clone()).collect()
    }
}

/// Result of [`standardize`]: the rescaled data and the indices of dropped constant features.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub data: DataMatrix,
    pub dropped: Vec<usize>,
}

const MIN_STD: f64 = 1e-12;

/// Centers every feature and scales it to unit population variance.
///
/// Constant features are dropped (and reported in [`Standardized::dropped`]).
pub fn standardize(x: &DataMatrix) -> Result<Standardized> {
    let values = x.values();
    let n = values.ncols() as f64;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut stats = Vec::new();
    for (i, row) in values.axis_iter(Axis(0)).enumerate() {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= MIN_STD * (1.0 + mean.abs()) {
            log::warn!("dropping constant feature {i}");
            dropped.push(i);
        } else {
            kept.push(i);
            stats.push((mean, std));
        }
    }
    if kept.is_empty() {
        return Err(MiscError::Degenerate("all features are constant".into()));
    }
    let out = Array2::from_shape_fn((kept.len(), values.ncols()), |(r, c)| {
        let (mean, std) = stats[r];
        (values[[kept[r], c]] - mean) / std
    });
    let names = x
        .feature_names()
        .map(|names| kept.iter().map(|&i| names[i].clone()).collect());
    Ok(Standardized {
        data: DataMatrix::with_names(out, names)?,
        dropped,
    })
}
