//! Agglomerative grouping of ICA components into mutually independent subspaces.
//!
//! Starting from singletons, the pair of groups with the smallest independence cost
//! `C_I(a, b) = C_H(a ∪ b) − C_H(a) − C_H(b)` is merged while some `C_I ≤ 0`. Every
//! visited partition is scored with its total description length and the cheapest
//! one is selected.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::density::{code_length, parameter_cost};
use crate::error::{MiscError, Result};

/// Disjoint, exhaustive grouping of source rows `0..d`.
///
/// Stored canonically: each group sorted ascending, groups ordered by their smallest index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubspacePartition {
    groups: Vec<Vec<usize>>,
}

impl SubspacePartition {
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        let d: usize = groups.iter().map(Vec::len).sum();
        let mut seen = vec![false; d];
        for g in &groups {
            if g.is_empty() {
                return Err(MiscError::invalid("subspace groups must be nonempty"));
            }
            for &i in g {
                if i >= d || seen[i] {
                    return Err(MiscError::invalid(format!(
                        "groups are not a disjoint cover of 0..{d}"
                    )));
                }
                seen[i] = true;
            }
        }
        let mut groups: Vec<Vec<usize>> = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        groups.sort_by_key(|g| g[0]);
        Ok(SubspacePartition { groups })
    }

    pub fn singletons(d: usize) -> Self {
        SubspacePartition {
            groups: (0..d).map(|i| vec![i]).collect(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Number of subspaces `v`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Total number of source rows `d`.
    pub fn n_components(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    fn merged(&self, i: usize, j: usize) -> Self {
        let mut groups = self.groups.clone();
        let taken = groups.remove(j);
        groups[i].extend(taken);
        groups[i].sort_unstable();
        SubspacePartition { groups }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub partition: SubspacePartition,
    /// Total description length `L(M) + L(D|M)` in bits.
    pub mdl: f64,
    /// Group indices (in the previous step's partition) merged to reach this step.
    pub merged_pair: Option<(usize, usize)>,
    pub pair_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub steps: Vec<MergeStep>,
}

impl MergeTrace {
    pub fn last(&self) -> &MergeStep {
        self.steps.last().expect("trace is never empty")
    }

    /// The visited partition with exactly `v` groups, if any.
    pub fn with_groups(&self, v: usize) -> Option<&SubspacePartition> {
        self.steps
            .iter()
            .map(|s| &s.partition)
            .find(|p| p.len() == v)
    }
}

/// Memoizes the leave-one-out code length of each group of source rows.
pub struct CodeLengthCache<'a> {
    sources: ArrayView2<'a, f64>,
    cache: BTreeMap<Vec<usize>, f64>,
}

impl<'a> CodeLengthCache<'a> {
    pub fn new(sources: ArrayView2<'a, f64>) -> Self {
        CodeLengthCache {
            sources,
            cache: BTreeMap::new(),
        }
    }

    fn rows(&self, group: &[usize]) -> Array2<f64> {
        self.sources.select(Axis(0), group)
    }

    /// `Σⱼ log₂ 1/f(S_group,j)` for a sorted group.
    pub fn code_length(&mut self, group: &[usize]) -> Result<f64> {
        if let Some(&v) = self.cache.get(group) {
            return Ok(v);
        }
        let v = code_length(&self.rows(group).view())?;
        self.cache.insert(group.to_vec(), v);
        Ok(v)
    }

    /// `C_H(group)`
    pub fn entropy_cost(&mut self, group: &[usize]) -> Result<f64> {
        Ok(parameter_cost(group.len(), self.sources.ncols()) + self.code_length(group)?)
    }

    /// `C_I(a, b)`, symmetric in its arguments bit for bit.
    pub fn independence_cost(&mut self, a: &[usize], b: &[usize]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(MiscError::invalid("independence cost needs nonempty groups"));
        }
        if a.iter().any(|i| b.contains(i)) {
            return Err(MiscError::invalid("independence cost needs disjoint groups"));
        }
        if let Some(&bad) = a.iter().chain(b).find(|&&i| i >= self.sources.nrows()) {
            return Err(MiscError::invalid(format!("source row {bad} out of range")));
        }
        let mut union: Vec<usize> = a.iter().chain(b).copied().collect();
        union.sort_unstable();
        let mut a = a.to_vec();
        a.sort_unstable();
        let mut b = b.to_vec();
        b.sort_unstable();
        let joint = self.entropy_cost(&union)?;
        let separate = self.entropy_cost(&a)? + self.entropy_cost(&b)?;
        Ok(joint - separate)
    }

    fn total_mdl(&mut self, partition: &SubspacePartition) -> Result<f64> {
        let (d, n) = self.sources.dim();
        let lengths = partition
            .groups()
            .iter()
            .map(|g| self.code_length(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(mdl_model_cost(d, n, partition.len())? + data_cost(d, n, &lengths))
    }
}

/// `C_I(S^(i), S^(j))` for two disjoint groups of rows of `sources`.
pub fn independence_cost(sources: &ArrayView2<f64>, a: &[usize], b: &[usize]) -> Result<f64> {
    CodeLengthCache::new(sources.view()).independence_cost(a, b)
}

/// `L(M) = d²/2 · log₂ n + (v + 1) · log₂ d`
pub fn mdl_model_cost(d: usize, n: usize, v: usize) -> Result<f64> {
    if d < 1 || n < 2 || v < 1 || v > d {
        return Err(MiscError::invalid(format!(
            "model cost needs d >= 1, n >= 2 and 1 <= v <= d (got d={d}, n={n}, v={v})"
        )));
    }
    let (d, n) = (d as f64, n as f64);
    Ok(d * d / 2.0 * n.log2() + (v as f64 + 1.0) * d.log2())
}

fn data_cost(d: usize, n: usize, code_lengths: &[f64]) -> f64 {
    code_lengths
        .iter()
        .fold(parameter_cost(d, n), |acc, l| acc + l)
}

/// `L(D|M) = d/2 · log₂ n + Σᵢ Σⱼ log₂ 1/f(S^(i)_j)`
pub fn mdl_data_cost(sources: &ArrayView2<f64>, partition: &SubspacePartition) -> Result<f64> {
    let (d, n) = sources.dim();
    if partition.n_components() != d {
        return Err(MiscError::DimensionMismatch {
            expected: d,
            found: partition.n_components(),
        });
    }
    let lengths = partition
        .groups()
        .iter()
        .map(|g| code_length(&sources.select(Axis(0), g).view()))
        .collect::<Result<Vec<_>>>()?;
    Ok(data_cost(d, n, &lengths))
}

/// Greedy merging until one group remains or every pairwise `C_I` is positive.
pub fn merge_subspaces(sources: &ArrayView2<f64>) -> Result<MergeTrace> {
    merge_until(sources, None)
}

/// Like [`merge_subspaces`], but keeps merging the cheapest pair (whatever its sign) until
/// only `target` groups remain.
pub fn merge_subspaces_to(sources: &ArrayView2<f64>, target: usize) -> Result<MergeTrace> {
    if target < 1 || target > sources.nrows() {
        return Err(MiscError::invalid(format!(
            "cannot reach {target} subspaces from {} components",
            sources.nrows()
        )));
    }
    merge_until(sources, Some(target))
}

fn merge_until(sources: &ArrayView2<f64>, forced_target: Option<usize>) -> Result<MergeTrace> {
    let d = sources.nrows();
    if d < 1 {
        return Err(MiscError::invalid("no source components to merge"));
    }
    let mut cache = CodeLengthCache::new(sources.view());
    let mut partition = SubspacePartition::singletons(d);
    let mut steps = vec![MergeStep {
        mdl: cache.total_mdl(&partition)?,
        partition: partition.clone(),
        merged_pair: None,
        pair_cost: None,
    }];

    while partition.len() > forced_target.unwrap_or(1) {
        let groups = partition.groups();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let cost = cache.independence_cost(&groups[i], &groups[j])?;
                if best.is_none_or(|(_, _, c)| cost < c) {
                    best = Some((i, j, cost));
                }
            }
        }
        let (i, j, cost) = best.expect("at least two groups");
        if forced_target.is_none() && cost > 0.0 {
            break;
        }
        partition = partition.merged(i, j);
        steps.push(MergeStep {
            mdl: cache.total_mdl(&partition)?,
            partition: partition.clone(),
            merged_pair: Some((i, j)),
            pair_cost: Some(cost),
        });
    }
    Ok(MergeTrace { steps })
}

/// Partition with the smallest description length; ties go to fewer groups.
pub fn select_partition(trace: &MergeTrace) -> Result<&SubspacePartition> {
    trace
        .steps
        .iter()
        .min_by(|a, b| {
            a.mdl
                .total_cmp(&b.mdl)
                .then(a.partition.len().cmp(&b.partition.len()))
        })
        .map(|s| &s.partition)
        .ok_or_else(|| MiscError::invalid("empty merge trace"))
}
