//! Clustering agreement scores and the clustering-versus-view confusion report.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{MiscError, Result};

/// Maps arbitrary labels to `0..k` in order of first appearance.
fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let dense = labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (dense, ids.len())
}

fn check_lengths(a: &[usize], b: &[usize], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(MiscError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < min {
        return Err(MiscError::invalid(format!(
            "label vectors need at least {min} entries, got {}",
            a.len()
        )));
    }
    Ok(())
}

struct Contingency {
    table: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

impl Contingency {
    fn new(a: &[usize], b: &[usize]) -> Self {
        let (a, ka) = densify(a);
        let (b, kb) = densify(b);
        let mut table = vec![vec![0usize; kb]; ka];
        for (&i, &j) in a.iter().zip(&b) {
            table[i][j] += 1;
        }
        let rows = table.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Contingency {
            table,
            rows,
            cols,
            n: a.len(),
        }
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn pairs(c: usize) -> f64 {
    (c * c.saturating_sub(1) / 2) as f64
}

/// Normalized mutual information `I(a; b) / sqrt(H(a) H(b))`.
///
/// Two single-cluster labelings score 1; a single-cluster labeling against any other scores 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    check_lengths(a, b, 1)?;
    let c = Contingency::new(a, b);
    match (c.rows.len() == 1, c.cols.len() == 1) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
            }
        }
    }
    let denom = (entropy(&c.rows, c.n) * entropy(&c.cols, c.n)).sqrt();
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Pair-counting F1: harmonic mean of pair precision (w.r.t. `a`) and pair recall (w.r.t. `b`).
///
/// Scores 0 when either labeling puts no two samples together.
pub fn f1_pairs(a: &[usize], b: &[usize]) -> Result<f64> {
    check_lengths(a, b, 2)?;
    let c = Contingency::new(a, b);
    let together: f64 = c.table.iter().flatten().map(|&v| pairs(v)).sum();
    let in_a: f64 = c.rows.iter().map(|&v| pairs(v)).sum();
    let in_b: f64 = c.cols.iter().map(|&v| pairs(v)).sum();
    if in_a == 0.0 || in_b == 0.0 || together == 0.0 {
        return Ok(0.0);
    }
    let precision = together / in_a;
    let recall = together / in_b;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Adjusted Rand index. Identical labelings score 1; when both are trivial (one cluster or all singletons) and identical, also 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    check_lengths(a, b, 2)?;
    let c = Contingency::new(a, b);
    let index: f64 = c.table.iter().flatten().map(|&v| pairs(v)).sum();
    let sa: f64 = c.rows.iter().map(|&v| pairs(v)).sum();
    let sb: f64 = c.cols.iter().map(|&v| pairs(v)).sum();
    let expected = sa * sb / pairs(c.n);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// A symmetric agreement score between two labelings.
pub trait ClusteringMetric {
    fn name(&self) -> &'static str;
    fn score(&self, a: &[usize], b: &[usize]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Nmi;

#[derive(Debug, Clone, Copy, Default)]
pub struct PairF1;

#[derive(Debug, Clone, Copy, Default)]
pub struct Ari;

impl ClusteringMetric for Nmi {
    fn name(&self) -> &'static str {
        "nmi"
    }
    fn score(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        nmi(a, b)
    }
}

impl ClusteringMetric for PairF1 {
    fn name(&self) -> &'static str {
        "f1"
    }
    fn score(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        f1_pairs(a, b)
    }
}

impl ClusteringMetric for Ari {
    fn name(&self) -> &'static str {
        "ari"
    }
    fn score(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        adjusted_rand_index(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub f1: f64,
    pub nmi: f64,
}

/// F1/NMI of every found clustering (rows) against every ground-truth view (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewReport {
    pub clusterings: Vec<String>,
    pub views: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl ViewReport {
    pub fn cell(&self, clustering: usize, view: usize) -> Cell {
        self.cells[clustering][view]
    }

    /// NMI on the diagonal, for reports where clustering `i` is expected to match view `i`.
    pub fn diagonal_nmi(&self) -> Vec<f64> {
        (0..self.clusterings.len().min(self.views.len()))
            .map(|i| self.cells[i][i].nmi)
            .collect()
    }

    /// One-to-one pairing of clusterings to views maximizing total NMI (exhaustive, for small reports).
    ///
    /// Entry `j` is the clustering index paired with view `j`, or `None` when there are fewer
    /// clusterings than views.
    pub fn matching(&self) -> Vec<Option<usize>> {
        let mut best: (f64, Vec<Option<usize>>) = (f64::NEG_INFINITY, vec![None; self.views.len()]);
        let mut current = vec![None; self.views.len()];
        let mut used = vec![false; self.clusterings.len()];
        fn search(
            report: &ViewReport,
            col: usize,
            total: f64,
            current: &mut Vec<Option<usize>>,
            used: &mut Vec<bool>,
            best: &mut (f64, Vec<Option<usize>>),
        ) {
            if col == current.len() {
                if total > best.0 {
                    *best = (total, current.clone());
                }
                return;
            }
            let mut any = false;
            for r in 0..used.len() {
                if !used[r] {
                    any = true;
                    used[r] = true;
                    current[col] = Some(r);
                    search(report, col + 1, total + report.cells[r][col].nmi, current, used, best);
                    used[r] = false;
                }
            }
            if !any || used.len() < current.len() {
                current[col] = None;
                search(report, col + 1, total, current, used, best);
            }
        }
        search(self, 0, 0.0, &mut current, &mut used, &mut best);
        best.1
    }

    /// NMI of each view against its paired clustering under [`ViewReport::matching`] (0 if unpaired).
    pub fn matched_nmi(&self) -> Vec<f64> {
        self.matching()
            .iter()
            .enumerate()
            .map(|(j, r)| r.map_or(0.0, |r| self.cells[r][j].nmi))
            .collect()
    }

    /// For each view, the best NMI reached by any clustering.
    pub fn best_nmi_per_view(&self) -> Vec<f64> {
        (0..self.views.len())
            .map(|j| self.cells.iter().map(|row| row[j].nmi).fold(0.0, f64::max))
            .collect()
    }
}

impl fmt::Display for ViewReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const CELL: usize = 17;
        let label_width = self.clusterings.iter().map(String::len).max().unwrap_or(0).max(4);
        let mut header = format!("{:label_width$}", "");
        let mut sub = format!("{:label_width$}", "");
        for view in &self.views {
            write!(header, " | {view:^CELL$}")?;
            write!(sub, " | {:>8} {:>8}", "F1", "NMI")?;
        }
        writeln!(f, "{}", header.trim_end())?;
        writeln!(f, "{sub}")?;
        for (name, row) in self.clusterings.iter().zip(&self.cells) {
            write!(f, "{name:label_width$}")?;
            for cell in row {
                write!(f, " | {:>8.4} {:>8.4}", cell.f1, cell.nmi)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Scores each clustering against each view. Rows are named `C1..Cv`.
pub fn evaluate_views<C, V>(clusterings: &[C], views: &[(String, V)]) -> Result<ViewReport>
where
    C: AsRef<[usize]>,
    V: AsRef<[usize]>,
{
    if clusterings.is_empty() || views.is_empty() {
        return Err(MiscError::invalid("need at least one clustering and one view"));
    }
    let cells = clusterings
        .iter()
        .map(|c| {
            views
                .iter()
                .map(|(_, v)| {
                    Ok(Cell {
                        f1: f1_pairs(c.as_ref(), v.as_ref())?,
                        nmi: nmi(c.as_ref(), v.as_ref())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewReport {
        clusterings: (1..=clusterings.len()).map(|i| format!("C{i}")).collect(),
        views: views.iter().map(|(name, _)| name.clone()).collect(),
        cells,
    })
}
