use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::NeighborhoodGraph;
use crate::error::{MiscError, Result};
use crate::model_selection::{kmeans, Clustering};

/// Which form of the `H` update to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HUpdateRule {
    /// Positive/negative split of the gradient, same derivation as the `W` update.
    #[default]
    Kkt,
    /// Identical kernel terms above and below the fraction bar, so only the graph terms
    /// move `H` and it freezes when `λ = 0`. Kept for comparison.
    GraphOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub epsilon_guard: f64,
    #[serde(default)]
    pub h_rule: HUpdateRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 10.0,
            max_iter: 500,
            rel_tol: 1e-6,
            seed: 0,
            epsilon_guard: 1e-12,
            h_rule: HUpdateRule::Kkt,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(MiscError::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(MiscError::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.epsilon_guard > 0.0) {
            return Err(MiscError::invalid(format!(
                "epsilon_guard must be > 0, got {}",
                self.epsilon_guard
            )));
        }
        Ok(())
    }
}

/// Result of a factorization run.
///
/// `objective_trace[0]` is the objective at the random initialization; one entry follows per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationState {
    /// `n × k` nonnegative weights for kernel variants, `m × k` mixed-sign centroids for input-space ones.
    pub w: Array2<f64>,
    /// `k × n` nonnegative soft assignments.
    pub h: Array2<f64>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Norm of each basis vector (`‖φ(X)w_c‖` or `‖z_c‖`), used to remove the `W`/`H` scale ambiguity.
    pub basis_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FactorizationState {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    /// `H` with row `c` scaled by the norm of basis vector `c`, so the product `ZH` is unchanged
    /// while every basis vector has unit length.
    pub fn normalized_h(&self) -> Array2<f64> {
        let norms = ndarray::Array1::from(self.basis_norms.clone());
        &self.h * &norms.insert_axis(Axis(1))
    }

    /// Hard clustering by k-means on the columns of [`FactorizationState::normalized_h`].
    pub fn assign(&self, seed: u64, restarts: usize) -> Result<Clustering> {
        kmeans(&self.normalized_h().view(), self.h.nrows(), seed, restarts)
    }

    /// Hard assignment by the largest entry of each column of `H` (ties to the lower row).
    pub fn argmax_labels(&self) -> Vec<usize> {
        self.h
            .columns()
            .into_iter()
            .map(|col| {
                let mut best = 0;
                for (r, &v) in col.iter().enumerate() {
                    if v > col[best] {
                        best = r;
                    }
                }
                best
            })
            .collect()
    }
}

/// `(M⁺, M⁻)` with `M = M⁺ − M⁻`, both nonnegative and with disjoint supports.
pub fn split_pos_neg(m: &ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    (m.mapv(|v| v.max(0.0)), m.mapv(|v| (-v).max(0.0)))
}

pub(crate) fn random_positive(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    // 1 − [0, 1) lies in (0, 1]
    Array2::from_shape_simple_fn((rows, cols), || 1.0 - rng.random::<f64>())
}

fn multiplicative_step(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, guard: f64) {
    Zip::from(x).and(num).and(den).for_each(|x, &a, &b| {
        *x *= (a / (b + guard)).sqrt();
    });
}

/// `W ∘ sqrt((K⁺Hᵀ + K⁻WHHᵀ) / (K⁻Hᵀ + K⁺WHHᵀ + guard))`.
pub fn update_w(
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    k_plus: &ArrayView2<f64>,
    k_minus: &ArrayView2<f64>,
    guard: f64,
) -> Array2<f64> {
    update_w_split(w, h, k_plus, Some(k_minus), guard)
}

fn update_w_split(
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    k_plus: &ArrayView2<f64>,
    k_minus: Option<&ArrayView2<f64>>,
    guard: f64,
) -> Array2<f64> {
    let k = w.ncols();
    let w_hht = w.dot(&h.dot(&h.t()));
    // one pass over the kernel for both products
    let rhs = concatenate![Axis(1), h.t(), w_hht];
    let prod = k_plus.dot(&rhs);
    let mut num = prod.slice(s![.., ..k]).to_owned();
    let mut den = prod.slice(s![.., k..]).to_owned();
    if let Some(km) = k_minus {
        let prod = km.dot(&rhs);
        num += &prod.slice(s![.., k..]);
        den += &prod.slice(s![.., ..k]);
    }
    let mut out = w.to_owned();
    multiplicative_step(&mut out, &num, &den, guard);
    out
}

/// `H ∘ sqrt(((WᵀK)⁺ + (WᵀKW)⁻H + λHP) / ((WᵀK)⁻ + (WᵀKW)⁺H + λHD + guard))` with `K = K⁺ − K⁻`.
///
/// The graph terms are skipped when `graph` is `None` or `lambda` is zero.
#[allow(clippy::too_many_arguments)]
pub fn update_h(
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    k_plus: &ArrayView2<f64>,
    k_minus: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
    rule: HUpdateRule,
    guard: f64,
) -> Array2<f64> {
    update_h_split(w, h, k_plus, Some(k_minus), graph, lambda, rule, guard).0
}

/// Returns the new `H` together with `WᵀK`, which the objective reuses.
#[allow(clippy::too_many_arguments)]
fn update_h_split(
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    k_plus: &ArrayView2<f64>,
    k_minus: Option<&ArrayView2<f64>>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
    rule: HUpdateRule,
    guard: f64,
) -> (Array2<f64>, Array2<f64>) {
    let wt_kp = w.t().dot(k_plus);
    let wt_k = match k_minus {
        Some(km) => &wt_kp - &w.t().dot(km),
        None => wt_kp.clone(),
    };
    let h_new = match rule {
        HUpdateRule::Kkt => {
            let b = wt_k.dot(w);
            semi_nmf_h_step(h, &wt_k.view(), &b.view(), graph, lambda, guard)
        }
        HUpdateRule::GraphOnly => {
            let shared = &wt_kp + &wt_kp.dot(w).dot(h);
            let (mut num, mut den) = (shared.clone(), shared);
            if let Some(g) = graph.filter(|_| lambda > 0.0) {
                let (hl_pos, hl_neg) = split_pos_neg(&h.dot(&g.laplacian).view());
                num.scaled_add(lambda, &hl_neg);
                den.scaled_add(lambda, &hl_pos);
            }
            let mut out = h.to_owned();
            multiplicative_step(&mut out, &num, &den, guard);
            out
        }
    };
    (h_new, wt_k)
}

/// Semi-NMF `H` step given `A = WᵀK` (`k × n`) and `B = WᵀKW` (`k × k`).
///
/// Input-space variants pass `A = ZᵀX` and `B = ZᵀZ`.
pub(crate) fn semi_nmf_h_step(
    h: &ArrayView2<f64>,
    a: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
    guard: f64,
) -> Array2<f64> {
    let (a_pos, a_neg) = split_pos_neg(a);
    let (b_pos, b_neg) = split_pos_neg(b);
    let mut num = a_pos + b_neg.dot(h);
    let mut den = a_neg + b_pos.dot(h);
    if let Some(g) = graph.filter(|_| lambda > 0.0) {
        num.scaled_add(lambda, &g.propagate(h));
        den.scaled_add(lambda, &(h * &g.degree));
    }
    let mut out = h.to_owned();
    multiplicative_step(&mut out, &num, &den, guard);
    out
}

fn graph_penalty(h: &ArrayView2<f64>, graph: Option<&NeighborhoodGraph>, lambda: f64) -> f64 {
    match graph {
        Some(g) if lambda > 0.0 => lambda * g.smoothness(h),
        _ => 0.0,
    }
}

/// `‖φ(X) − φ(X)WH‖² + λ tr(HLHᵀ)` evaluated through the kernel, given `A = WᵀK`.
fn kernel_objective(
    trace_k: f64,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    wt_k: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
) -> f64 {
    let b = wt_k.dot(w);
    let cross = (wt_k * h).sum();
    let quad = (b.dot(h) * h).sum();
    trace_k - 2.0 * cross + quad + graph_penalty(h, graph, lambda)
}

/// Kernel objective of an explicit `(W, H)` pair.
pub fn objective(
    k: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    lambda: f64,
) -> f64 {
    let wt_k = w.t().dot(k);
    kernel_objective(k.diag().sum(), w, h, &wt_k.view(), graph, lambda)
}

pub(crate) fn relative_decrease(prev: f64, cur: f64) -> f64 {
    (prev - cur) / prev.abs().max(f64::MIN_POSITIVE)
}

fn check_symmetric(k: &ArrayView2<f64>) -> Result<()> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(MiscError::DimensionMismatch {
            expected: n,
            found: k.ncols(),
        });
    }
    let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (k[[i, j]] - k[[j, i]]).abs() > 1e-12 * scale {
                return Err(MiscError::invalid(format!("kernel matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Kernel graph-regularized semi-NMF: `min ‖φ(X) − φ(X)WH‖² + λ tr(HLHᵀ)` with `W, H ≥ 0`.
///
/// `graph` may be omitted only when `cfg.lambda` is zero.
pub fn kgsnmf(
    kernel: &ArrayView2<f64>,
    graph: Option<&NeighborhoodGraph>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<FactorizationState> {
    cfg.validate()?;
    check_symmetric(kernel)?;
    let n = kernel.nrows();
    if k == 0 || k > n {
        return Err(MiscError::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if cfg.lambda > 0.0 {
        match graph {
            None => return Err(MiscError::invalid("lambda > 0 requires a neighborhood graph")),
            Some(g) if g.n_nodes() != n => {
                return Err(MiscError::DimensionMismatch {
                    expected: n,
                    found: g.n_nodes(),
                })
            }
            Some(_) => {}
        }
    }

    let (k_plus, k_minus) = split_pos_neg(kernel);
    let k_minus = k_minus.iter().any(|&v| v != 0.0).then_some(k_minus);
    let km = k_minus.as_ref().map(|m| m.view());
    let trace_k = kernel.diag().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = random_positive(n, k, &mut rng);
    let mut h = random_positive(k, n, &mut rng);

    let wt_k = w.t().dot(kernel);
    let mut trace = vec![kernel_objective(trace_k, &w.view(), &h.view(), &wt_k.view(), graph, cfg.lambda)];
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        w = update_w_split(&w.view(), &h.view(), &k_plus.view(), km.as_ref(), cfg.epsilon_guard);
        let (h_new, wt_k) = update_h_split(
            &w.view(),
            &h.view(),
            &k_plus.view(),
            km.as_ref(),
            graph,
            cfg.lambda,
            cfg.h_rule,
            cfg.epsilon_guard,
        );
        h = h_new;
        let obj = kernel_objective(trace_k, &w.view(), &h.view(), &wt_k.view(), graph, cfg.lambda);
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
    let basis_norms = w.t().dot(kernel).dot(&w).diag().mapv(|v| v.max(0.0).sqrt()).to_vec();
    Ok(FactorizationState {
        w,
        h,
        iterations: trace.len() - 1,
        objective_trace: trace,
        converged,
        basis_norms,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::graph::NeighborhoodGraph;
    use crate::factorization::kernel::{gram, KernelSpec};
    use crate::metrics::nmi;
    use crate::model_selection::kmeans;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Axis};

    fn one_hot_clusters() -> (Array2<f64>, Vec<usize>) {
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((2, 10), |(r, c)| if labels[c] == r { 1.0 } else { 0.0 });
        (x, labels)
    }

    #[test]
    fn split_reference_and_identity() {
        let (p, m) = split_pos_neg(&array![[1.0, -2.0]].view());
        assert_eq!(p, array![[1.0, 0.0]]);
        assert_eq!(m, array![[0.0, 2.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Array2::from_shape_simple_fn((7, 9), || rng.random::<f64>() - 0.5);
        let (p, m) = split_pos_neg(&a.view());
        assert_eq!(&p - &m, a);
        assert!((&p * &m).iter().all(|&v| v == 0.0));
        let (_, m) = split_pos_neg(&p.view());
        assert!(m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn w_update_hand_value() {
        let w = update_w(
            &array![[0.5]].view(),
            &array![[1.0]].view(),
            &array![[2.0]].view(),
            &array![[0.0]].view(),
            1e-12,
        );
        assert_abs_diff_eq!(w[[0, 0]], 0.5 * 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn w_update_keeps_zero_entries() {
        let k = array![[2.0, 0.5], [0.5, 1.0]];
        let w = update_w(
            &array![[0.0, 0.3], [0.7, 0.2]].view(),
            &array![[0.4, 0.1], [0.9, 0.8]].view(),
            &k.view(),
            &Array2::zeros((2, 2)).view(),
            1e-12,
        );
        assert_eq!(w[[0, 0]], 0.0);
        assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn h_update_stationary_point() {
        // A = wκ = 1, B = w²κ = 0.5, so H = A / B = 2 balances the ratio
        let h = update_h(
            &array![[0.5]].view(),
            &array![[2.0]].view(),
            &array![[2.0]].view(),
            &array![[0.0]].view(),
            None,
            0.0,
            HUpdateRule::Kkt,
            1e-12,
        );
        assert_abs_diff_eq!(h[[0, 0]], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn h_update_without_graph_reduces_to_ratio() {
        let k = array![[1.0, 0.3, 0.2], [0.3, 1.0, 0.6], [0.2, 0.6, 1.0]];
        let w = array![[0.2, 0.5], [0.4, 0.1], [0.3, 0.3]];
        let h = array![[0.5, 0.2, 0.9], [0.1, 0.7, 0.4]];
        let got = update_h(&w.view(), &h.view(), &k.view(), &Array2::zeros((3, 3)).view(), None, 0.0, HUpdateRule::Kkt, 0.0);
        let a = w.t().dot(&k);
        let expected = &h * &(&a / &w.t().dot(&k).dot(&w).dot(&h)).mapv(f64::sqrt);
        for (g, e) in got.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(*g, *e, epsilon = 1e-14);
        }
    }

    #[test]
    fn strong_graph_pulls_identical_samples_together() {
        let x = array![[1.0, 1.0, 0.0, 0.2], [0.0, 0.0, 1.0, 0.9]];
        let k = x.t().dot(&x);
        let n = 4;
        let complete = Array2::ones((n, n)) - Array2::<f64>::eye(n);
        let graph = NeighborhoodGraph::from_adjacency(complete, n - 1).unwrap();
        let w = array![[0.3, 0.1], [0.2, 0.4], [0.5, 0.6], [0.1, 0.2]];
        let mut h = array![[0.9, 0.1, 0.4, 0.6], [0.2, 0.8, 0.5, 0.3]];
        let gap = |h: &Array2<f64>| (&h.column(0) - &h.column(1)).mapv(|v| v * v).sum().sqrt();
        let before = gap(&h);
        let zeros = Array2::zeros((n, n));
        for _ in 0..50 {
            h = update_h(&w.view(), &h.view(), &k.view(), &zeros.view(), Some(&graph), 100.0, HUpdateRule::Kkt, 1e-12);
        }
        assert!(gap(&h) < 0.1 * before, "{} vs {before}", gap(&h));
    }

    #[test]
    fn recovers_orthogonal_clusters() {
        let (x, labels) = one_hot_clusters();
        let k = gram(&x.view(), &KernelSpec::linear()).unwrap();
        let cfg = SolverConfig::default().with_lambda(0.0).with_seed(3);
        for scale in [1.0, 7.5] {
            let state = kgsnmf(&(&k * scale).view(), None, 2, &cfg).unwrap();
            let found = kmeans(&state.h.view(), 2, 0, 5).unwrap();
            assert_eq!(nmi(&found.labels, &labels).unwrap(), 1.0);
            assert_eq!(nmi(&state.argmax_labels(), &labels).unwrap(), 1.0);
        }
    }

    #[test]
    fn objective_non_increasing_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_simple_fn((3, 40), || rng.random::<f64>() * 2.0 - 1.0);
        let k = gram(&x.view(), &KernelSpec::gaussian()).unwrap();
        let graph = crate::factorization::knn_graph(&x.view(), 5).unwrap();
        for seed in 0..5 {
            let cfg = SolverConfig {
                max_iter: 100,
                rel_tol: 1e-12,
                ..SolverConfig::default().with_seed(seed)
            };
            let state = kgsnmf(&k.view(), Some(&graph), 3, &cfg).unwrap();
            for pair in state.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-8 * pair[0].abs(), "{pair:?}");
            }
            assert!(state.w.iter().chain(state.h.iter()).all(|&v| v >= 0.0));
            assert_eq!(state.iterations + 1, state.objective_trace.len());
            let direct = objective(&k.view(), &state.w.view(), &state.h.view(), Some(&graph), cfg.lambda);
            assert_abs_diff_eq!(direct, state.final_objective(), epsilon = 1e-9 * direct.abs());
        }
    }

    #[test]
    fn graph_only_rule_freezes_without_graph() {
        let (x, _) = one_hot_clusters();
        let k = gram(&x.view(), &KernelSpec::linear()).unwrap();
        let cfg = SolverConfig {
            lambda: 0.0,
            h_rule: HUpdateRule::GraphOnly,
            max_iter: 5,
            ..SolverConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let _w0 = random_positive(10, 2, &mut rng);
        let h0 = random_positive(2, 10, &mut rng);
        let state = kgsnmf(&k.view(), None, 2, &cfg).unwrap();
        for (a, b) in state.h.iter().zip(h0.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let cfg = SolverConfig::default().with_lambda(0.0);
        assert!(kgsnmf(&array![[1.0, 0.5], [0.4, 1.0]].view(), None, 1, &cfg).is_err());
        assert!(kgsnmf(&Array2::<f64>::eye(2).view(), None, 3, &cfg).is_err());
        assert!(kgsnmf(&Array2::<f64>::eye(2).view(), None, 1, &SolverConfig::default()).is_err());
        let bad = SolverConfig {
            rel_tol: 0.0,
            ..cfg
        };
        assert!(kgsnmf(&Array2::<f64>::eye(2).view(), None, 1, &bad).is_err());
        assert!(kgsnmf(&Array2::<f64>::eye(2).view(), None, 1, &cfg).unwrap().h.len_of(Axis(1)) == 2);
    }
}
