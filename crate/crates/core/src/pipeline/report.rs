use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::PipelineConfig;
use crate::data::write_labels_csv;
use crate::error::{MiscError, Result};
use crate::metrics::ViewReport;
use crate::model_selection::Clustering;
use crate::subspace::{MergeTrace, SubspacePartition};

/// Outcome for one independent subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceResult {
    /// Source component indices forming the subspace.
    pub components: Vec<usize>,
    pub k: usize,
    /// Model-selection score per candidate `k` (empty when `k` was given).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k_scores: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    #[serde(skip)]
    pub clustering: Clustering,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub v: usize,
    pub partition: SubspacePartition,
    pub subspaces: Vec<SubspaceResult>,
    pub merge_trace: MergeTrace,
    /// Input features removed by standardization because they were constant.
    pub dropped_features: Vec<usize>,
    pub ica_converged: bool,
    pub ica_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ViewReport>,
    pub config: PipelineConfig,
    /// Wall time per stage. The only field that varies between identical runs.
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn clusterings(&self) -> Vec<&Clustering> {
        self.subspaces.iter().map(|s| &s.clustering).collect()
    }

    pub fn labels(&self) -> Vec<Vec<usize>> {
        self.subspaces.iter().map(|s| s.clustering.labels.clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `clustering_1.csv` … `clustering_v.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| MiscError::io(dir, e))?;
        for (i, s) in self.subspaces.iter().enumerate() {
            write_labels_csv(dir.join(format!("clustering_{}.csv", i + 1)), &s.clustering.labels)?;
        }
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()? + "\n").map_err(|e| MiscError::io(&path, e))
    }
}
