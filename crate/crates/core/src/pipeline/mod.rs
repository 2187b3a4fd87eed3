//! End-to-end multiple clustering: independent subspaces first, then one clustering per subspace.

mod config;
mod report;

pub use config::{parse_config, parse_config_with_defaults, InputSource, RunSettings};
pub(crate) use config::apply_key;
pub use report::{RunReport, SubspaceResult};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use log::info;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{standardize, DataMatrix};
use crate::error::{MiscError, Result, StageContext};
use crate::factorization::{gram, kgsnmf, knn_graph, HUpdateRule, KernelSpec, SolverConfig};
use crate::ica::{whiten, FastIca};
use crate::metrics::{evaluate_views, ViewReport};
use crate::model_selection::{default_k_range, KCriterion, KSelector};
use crate::subspace::{merge_subspaces, merge_subspaces_to, select_partition, MergeTrace, SubspacePartition};

/// Every knob of [`run_misc`]. Defaults: `λ = 10`, 5 neighbors, Gaussian kernel with automatic width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub eps_neighbors: usize,
    pub kernel: KernelSpec,
    /// Number of clusters per subspace; a single entry applies to every subspace.
    pub k_override: Option<Vec<usize>>,
    pub v_override: Option<usize>,
    /// Search range for the number of clusters; defaults to `[2, min(10, n/10)]`.
    pub k_range: Option<(usize, usize)>,
    pub k_criterion: KCriterion,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub kmeans_restarts: usize,
    pub h_rule: HUpdateRule,
    pub seed: u64,
    /// Factorize the subspaces on separate threads.
    pub parallel: bool,
    /// Where the command-line front end writes its outputs; ignored by [`run_misc`].
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lambda: 10.0,
            eps_neighbors: 5,
            kernel: KernelSpec::gaussian(),
            k_override: None,
            v_override: None,
            k_range: None,
            k_criterion: KCriterion::default(),
            max_iter: 500,
            rel_tol: 1e-6,
            ica_max_iter: 500,
            ica_tol: 1e-6,
            kmeans_restarts: 10,
            h_rule: HUpdateRule::Kkt,
            seed: 0,
            parallel: false,
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.solver_config(0).validate()?;
        if self.eps_neighbors < 1 {
            return Err(MiscError::invalid("eps_neighbors must be at least 1"));
        }
        if let Some((lo, hi)) = self.k_range {
            if lo < 1 || lo > hi {
                return Err(MiscError::invalid(format!("invalid k range [{lo}, {hi}]")));
            }
        }
        if let Some(ks) = &self.k_override {
            if ks.is_empty() || ks.contains(&0) {
                return Err(MiscError::invalid("k_override entries must be positive"));
            }
        }
        if self.v_override == Some(0) {
            return Err(MiscError::invalid("v_override must be positive"));
        }
        if self.kmeans_restarts < 1 {
            return Err(MiscError::invalid("kmeans_restarts must be at least 1"));
        }
        Ok(())
    }

    fn solver_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
            seed,
            epsilon_guard: 1e-12,
            h_rule: self.h_rule,
        }
    }

    fn k_for(&self, subspace: usize) -> Option<usize> {
        let ks = self.k_override.as_ref()?;
        Some(*ks.get(subspace).unwrap_or_else(|| ks.last().expect("validated nonempty")))
    }
}

/// Independent stream for subspace `i`, stable under changes to the other subspaces.
fn subspace_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

/// Runs the full pipeline on `x` (`d × n`).
///
/// Standardize, whiten, FastICA, merge source components into independent subspaces, then on
/// each subspace pick `k`, factorize with the kernel graph-regularized solver and cluster `H`.
pub fn run_misc(x: &DataMatrix, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut timer = Timer(BTreeMap::new());
    let n = x.n_samples();

    let standardized = timer.time("standardize", || standardize(x)).stage("standardize")?;
    let whitened = timer.time("whiten", || whiten(&standardized.data)).stage("whiten")?;
    let ica = FastIca::new(cfg.ica_max_iter, cfg.ica_tol, cfg.seed);
    let decomposition = timer.time("ica", || ica.fit(&whitened)).stage("ica")?;
    if !decomposition.converged {
        log::warn!("FastICA stopped after {} iterations without converging", decomposition.iterations);
    }
    let sources = &decomposition.sources;

    let (trace, partition) = timer
        .time("merge", || choose_partition(&sources.view(), cfg.v_override))
        .stage("merge")?;
    info!("selected {} subspace(s): {:?}", partition.len(), partition.groups());

    let views: Vec<Array2<f64>> = partition
        .groups()
        .iter()
        .map(|g| sources.select(Axis(0), g))
        .collect();

    let ks = timer
        .time("select_k", || {
            views
                .iter()
                .enumerate()
                .map(|(i, view)| match cfg.k_for(i) {
                    Some(k) if k > n => Err(MiscError::invalid(format!("k_override {k} exceeds n={n}"))),
                    Some(k) => Ok((k, Vec::new())),
                    None => {
                        let (lo, hi) = cfg.k_range.unwrap_or_else(|| default_k_range(n));
                        let selector = KSelector {
                            criterion: cfg.k_criterion,
                            restarts: cfg.kmeans_restarts,
                        };
                        let scores = selector.scores(&view.view(), lo, hi.min(n), subspace_seed(cfg.seed, i))?;
                        let k = selector.pick(&scores);
                        Ok((k, scores))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .stage("select_k")?;

    let solve = |i: usize| -> Result<SubspaceResult> {
        let view = &views[i];
        let (k, ref k_scores) = ks[i];
        let seed = subspace_seed(cfg.seed, i);
        let kernel = gram(&view.view(), &cfg.kernel)?;
        let graph = if cfg.lambda > 0.0 {
            Some(knn_graph(&view.view(), cfg.eps_neighbors.min(n - 1))?)
        } else {
            None
        };
        let state = kgsnmf(&kernel.view(), graph.as_ref(), k, &cfg.solver_config(seed))?;
        let clustering = state.assign(seed, cfg.kmeans_restarts)?;
        Ok(SubspaceResult {
            components: partition.groups()[i].clone(),
            k,
            k_scores: k_scores.clone(),
            iterations: state.iterations,
            converged: state.converged,
            objective: state.final_objective(),
            objective_trace: state.objective_trace,
            clustering,
        })
    };
    let subspaces = timer
        .time("factorize", || -> Result<Vec<SubspaceResult>> {
            if cfg.parallel && views.len() > 1 {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..views.len()).map(|i| scope.spawn(move || solve(i))).collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("solver thread panicked"))
                        .collect()
                })
            } else {
                (0..views.len()).map(solve).collect()
            }
        })
        .stage("factorize")?;

    Ok(RunReport {
        v: partition.len(),
        partition,
        merge_trace: trace,
        subspaces,
        dropped_features: standardized.dropped,
        ica_converged: decomposition.converged,
        ica_iterations: decomposition.iterations,
        metrics: None,
        timings_ms: timer.0,
        config: cfg.clone(),
    })
}

fn choose_partition(
    sources: &ndarray::ArrayView2<f64>,
    v_override: Option<usize>,
) -> Result<(MergeTrace, SubspacePartition)> {
    let trace = merge_subspaces(sources)?;
    let Some(v) = v_override else {
        let partition = select_partition(&trace)?.clone();
        return Ok((trace, partition));
    };
    if let Some(p) = trace.with_groups(v) {
        let p = p.clone();
        return Ok((trace, p));
    }
    // merging stopped before reaching v groups; keep merging the cheapest pairs
    let forced = merge_subspaces_to(sources, v)?;
    let p = forced.with_groups(v).expect("forced merging reaches the target").clone();
    Ok((forced, p))
}

/// [`run_misc`] followed by scoring every clustering against known views.
pub fn run_and_evaluate(x: &DataMatrix, views: &[(String, Vec<usize>)], cfg: &PipelineConfig) -> Result<RunReport> {
    let mut report = run_misc(x, cfg)?;
    let start = Instant::now();
    let labels: Vec<&[usize]> = report.subspaces.iter().map(|s| s.clustering.labels.as_slice()).collect();
    let metrics: ViewReport = evaluate_views(&labels, views).stage("evaluate")?;
    report.metrics = Some(metrics);
    report.timings_ms.insert("evaluate".into(), start.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}
