use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{knn_graph, NeighborhoodGraph};
use super::kernel::{gram, KernelSpec};
use super::solver::{kgsnmf, random_positive, relative_decrease, semi_nmf_h_step, FactorizationState, SolverConfig};
use crate::error::{MiscError, Result};
use crate::linalg::solve_spd;

const LEAST_SQUARES_RIDGE: f64 = 1e-10;

/// The factorization family: input-space or kernel, with or without the graph term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Snmf,
    Gsnmf,
    Ksnmf,
    Kgsnmf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Snmf, Variant::Gsnmf, Variant::Ksnmf, Variant::Kgsnmf];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Snmf => "snmf",
            Variant::Gsnmf => "gsnmf",
            Variant::Ksnmf => "ksnmf",
            Variant::Kgsnmf => "kgsnmf",
        }
    }

    pub fn uses_kernel(self) -> bool {
        matches!(self, Variant::Ksnmf | Variant::Kgsnmf)
    }

    pub fn uses_graph(self) -> bool {
        matches!(self, Variant::Gsnmf | Variant::Kgsnmf)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = MiscError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MiscError::invalid(format!("unknown variant `{s}` (expected snmf, gsnmf, ksnmf or kgsnmf)")))
    }
}

/// Runs one variant on `x` (`m × n`, samples as columns).
///
/// Variants without the graph term ignore `cfg.lambda`; the others use it as given.
pub fn run_variant(
    x: &ArrayView2<f64>,
    k: usize,
    variant: Variant,
    kernel: &KernelSpec,
    neighbors: usize,
    cfg: &SolverConfig,
) -> Result<FactorizationState> {
    let mut cfg = *cfg;
    if !variant.uses_graph() {
        cfg.lambda = 0.0;
    }
    let graph = if cfg.lambda > 0.0 {
        Some(knn_graph(x, neighbors)?)
    } else {
        None
    };
    if variant.uses_kernel() {
        let gram = gram(x, kernel)?;
        kgsnmf(&gram.view(), graph.as_ref(), k, &cfg)
    } else {
        semi_nmf(x, graph.as_ref(), k, &cfg)
    }
}

/// Input-space (graph-regularized) semi-NMF: `min ‖X − ZH‖² + λ tr(HLHᵀ)` with `H ≥ 0`.
///
/// `Z` is refit by least squares after every `H` step and returned in the `w` field.
pub fn semi_nmf(
    x: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<FactorizationState> {
    cfg.validate()?;
    let n = x.ncols();
    if k == 0 || k > n {
        return Err(MiscError::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if cfg.lambda > 0.0 && graph.is_none_or(|g| g.n_nodes() != n) {
        return Err(MiscError::invalid("lambda > 0 requires a neighborhood graph over the samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut h = random_positive(k, n, &mut rng);
    let mut warnings = Vec::new();

    let mut z = least_squares_basis(x, &h.view(), &mut warnings)?;
    let mut trace = vec![input_objective(x, &z.view(), &h.view(), graph, cfg.lambda)];
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let a = z.t().dot(x);
        let b = z.t().dot(&z);
        h = semi_nmf_h_step(&h.view(), &a.view(), &b.view(), graph, cfg.lambda, cfg.epsilon_guard);
        z = least_squares_basis(x, &h.view(), &mut warnings)?;
        let obj = input_objective(x, &z.view(), &h.view(), graph, cfg.lambda);
        if !obj.is_finite() {
            return Err(MiscError::Degenerate("factorization objective became non-finite".into()));
        }
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if relative_decrease(prev, obj) < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    let basis_norms = z.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
    Ok(FactorizationState {
        w: z,
        h,
        iterations: trace.len() - 1,
        objective_trace: trace,
        converged,
        basis_norms,
        warnings,
    })
}

/// `Z = XHᵀ(HHᵀ + ρI)⁻¹`, growing `ρ` if `HHᵀ` is numerically singular.
fn least_squares_basis(x: &ArrayView2<f64>, h: &ArrayView2<f64>, warnings: &mut Vec<String>) -> Result<Array2<f64>> {
    let hht = h.dot(&h.t());
    let rhs = h.dot(&x.t());
    let k = hht.nrows();
    let mut ridge = LEAST_SQUARES_RIDGE;
    loop {
        let regularized = &hht + &(Array2::<f64>::eye(k) * ridge);
        if let Some(zt) = solve_spd(&regularized.view(), &rhs.view()) {
            if ridge > LEAST_SQUARES_RIDGE {
                let msg = format!("HHᵀ is singular; least squares used ridge {ridge:e}");
                warn!("{msg}");
                if !warnings.contains(&msg) {
                    warnings.push(msg);
                }
            }
            return Ok(zt.reversed_axes());
        }
        ridge *= 10.0;
        if ridge > 1e6 {
            return Err(MiscError::Degenerate("cannot solve for the semi-NMF basis".into()));
        }
    }
}

fn input_objective(
    x: &ArrayView2<f64>,
    z: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
) -> f64 {
    let residual = x - &z.dot(h);
    let fit = residual.mapv(|v| v * v).sum();
    match graph {
        Some(g) if lambda > 0.0 => fit + lambda * g.smoothness(h),
        _ => fit,
    }
}
