//! k-means and per-subspace selection of the number of clusters.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MiscError, Result};
use crate::linalg::{covariance, log_det_spd};

/// Hard assignment of `n` points to `k` clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: f64,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone)]
pub struct KMeans {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeans {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeans {
            k,
            restarts: 10,
            max_iter: 300,
            seed,
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    /// Best of `restarts` k-means++ seeded Lloyd runs on the columns of `x`.
    pub fn fit(&self, x: &ArrayView2<f64>) -> Result<Clustering> {
        Ok(self.fit_with_history(x)?.0)
    }

    /// As [`KMeans::fit`], also returning the per-iteration inertia of the winning run.
    pub fn fit_with_history(&self, x: &ArrayView2<f64>) -> Result<(Clustering, Vec<f64>)> {
        let n = x.ncols();
        if self.k == 0 || self.k > n {
            return Err(MiscError::invalid(format!(
                "k-means needs 1 <= k <= n, got k={} for n={n}",
                self.k
            )));
        }
        if self.restarts == 0 {
            return Err(MiscError::invalid("k-means needs at least one restart"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best: Option<(Clustering, Vec<f64>)> = None;
        for _ in 0..self.restarts {
            let centroids = plus_plus_init(x, self.k, &mut rng);
            let run = lloyd(x, centroids, self.max_iter);
            if best.as_ref().is_none_or(|(b, _)| run.0.inertia < b.inertia) {
                best = Some(run);
            }
        }
        Ok(best.expect("restarts >= 1"))
    }
}

/// k-means on the columns of `x` (`m × n`).
pub fn kmeans(x: &ArrayView2<f64>, k: usize, seed: u64, restarts: usize) -> Result<Clustering> {
    KMeans::new(k, seed).restarts(restarts).fit(x)
}

fn sq_dist(x: &ArrayView2<f64>, j: usize, c: &Array2<f64>, l: usize) -> f64 {
    x.column(j)
        .iter()
        .zip(c.column(l))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus_init<R: Rng>(x: &ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let (m, n) = x.dim();
    let mut centroids = Array2::zeros((m, k));
    let first = rng.random_range(0..n);
    centroids.column_mut(0).assign(&x.column(first));
    let mut d2: Vec<f64> = (0..n).map(|j| sq_dist(x, j, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (j, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = j;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.column_mut(c).assign(&x.column(pick));
        for (j, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, j, &centroids, c));
        }
    }
    centroids
}

/// Lloyd iterations from the given centroids; returns the clustering and the inertia after each iteration.
pub fn lloyd(x: &ArrayView2<f64>, mut centroids: Array2<f64>, max_iter: usize) -> (Clustering, Vec<f64>) {
    let (m, n) = x.dim();
    let k = centroids.ncols();
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for j in 0..n {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for l in 0..k {
                let d = sq_dist(x, j, &centroids, l);
                if d < best_d {
                    best = l;
                    best_d = d;
                }
            }
            dists[j] = best_d;
            if labels[j] != best {
                labels[j] = best;
                changed = true;
            }
        }
        repair_empty(&mut labels, &mut dists, k);

        let mut sums = Array2::<f64>::zeros((m, k));
        let mut counts = vec![0usize; k];
        for (j, &l) in labels.iter().enumerate() {
            sums.column_mut(l).zip_mut_with(&x.column(j), |s, v| *s += v);
            counts[l] += 1;
        }
        for l in 0..k {
            if counts[l] > 0 {
                let c = sums.column(l).mapv(|v| v / counts[l] as f64);
                centroids.column_mut(l).assign(&c);
            }
        }
        let inertia = (0..n).map(|j| sq_dist(x, j, &centroids, labels[j])).sum();
        history.push(inertia);
        if !changed {
            break;
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    (Clustering { labels, k, inertia }, history)
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&j| counts[labels[j]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        if let Some(j) = donor {
            counts[labels[j]] -= 1;
            labels[j] = empty;
            counts[empty] = 1;
            dists[j] = 0.0;
        }
    }
}

/// Score used to compare clusterings with different `k`; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KCriterion {
    /// `n·m·ln(inertia/(n·m)) + k·(m+1)·ln n`: one shared spherical variance.
    SphericalBic,
    /// Classification likelihood of a Gaussian mixture with a full covariance per
    /// cluster and mixing weights from the cluster sizes, BIC-penalized.
    #[default]
    GaussianBic,
}

impl KCriterion {
    pub fn score(&self, x: &ArrayView2<f64>, clustering: &Clustering) -> f64 {
        let (m, n) = x.dim();
        let (mf, nf, kf) = (m as f64, n as f64, clustering.k as f64);
        match self {
            KCriterion::SphericalBic => {
                let inertia = clustering.inertia.max(f64::MIN_POSITIVE);
                nf * mf * (inertia / (nf * mf)).ln() + kf * (mf + 1.0) * nf.ln()
            }
            KCriterion::GaussianBic => {
                let ridge = 1e-4 * covariance(x).diag().mean().unwrap_or(1.0).max(1e-12);
                let mut fit = 0.0;
                for (c, &size) in clustering.sizes().iter().enumerate() {
                    if size == 0 {
                        continue;
                    }
                    let members: Vec<usize> = (0..n).filter(|&j| clustering.labels[j] == c).collect();
                    let mut cov = covariance(&x.select(Axis(1), &members).view());
                    cov.diag_mut().mapv_inplace(|v| v + ridge);
                    let log_det = log_det_spd(&cov.view()).unwrap_or(f64::INFINITY);
                    let sz = size as f64;
                    fit += sz * log_det - 2.0 * sz * (sz / nf).ln();
                }
                let params = kf * (mf + mf * (mf + 1.0) / 2.0) + (kf - 1.0);
                fit + params * nf.ln()
            }
        }
    }
}

/// Sweeps `k` over a range and keeps the best-scoring value.
#[derive(Debug, Clone)]
pub struct KSelector {
    pub criterion: KCriterion,
    pub restarts: usize,
}

impl Default for KSelector {
    fn default() -> Self {
        KSelector {
            criterion: KCriterion::default(),
            restarts: 10,
        }
    }
}

impl KSelector {
    /// Score of every `k` in `k_min..=k_max`.
    pub fn scores(&self, x: &ArrayView2<f64>, k_min: usize, k_max: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
        let n = x.ncols();
        if k_min < 1 || k_min > k_max || k_max > n {
            return Err(MiscError::invalid(format!(
                "invalid k range [{k_min}, {k_max}] for n={n}"
            )));
        }
        (k_min..=k_max)
            .map(|k| {
                let c = kmeans(x, k, seed, self.restarts)?;
                Ok((k, self.criterion.score(x, &c)))
            })
            .collect()
    }

    pub fn select(&self, x: &ArrayView2<f64>, k_min: usize, k_max: usize, seed: u64) -> Result<usize> {
        Ok(self.pick(&self.scores(x, k_min, k_max, seed)?))
    }

    /// The `k` with the lowest score; ties stay with the smaller `k`.
    pub fn pick(&self, scores: &[(usize, f64)]) -> usize {
        scores
            .iter()
            .fold(None::<(usize, f64)>, |acc, &(k, s)| match acc {
                Some((_, bs)) if s >= bs => acc,
                _ => Some((k, s)),
            })
            .expect("nonempty range")
            .0
    }
}

/// Picks the number of clusters in `k_min..=k_max` for the columns of `x`.
pub fn select_k(x: &ArrayView2<f64>, k_min: usize, k_max: usize, seed: u64) -> Result<usize> {
    KSelector::default().select(x, k_min, k_max, seed)
}

/// Default search range `[2, min(10, n/10)]`, widened to stay valid for small `n`.
pub fn default_k_range(n: usize) -> (usize, usize) {
    let k_max = (n / 10).min(10).max(2).min(n);
    (2.min(k_max), k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, GeneratorKind, GeneratorSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn splits_at_the_gap() {
        let x = array![[0.0, 10.0, 0.1, 10.1]];
        let c = kmeans(&x.view(), 2, 0, 5).unwrap();
        assert_eq!(c.labels[0], c.labels[2]);
        assert_eq!(c.labels[1], c.labels[3]);
        assert_ne!(c.labels[0], c.labels[1]);
    }

    #[test]
    fn single_cluster_is_total_scatter() {
        let x = array![[0.0, 1.0, 2.0, 5.0], [1.0, 1.0, 0.0, 2.0]];
        let c = kmeans(&x.view(), 1, 3, 2).unwrap();
        assert!(c.labels.iter().all(|&l| l == 0));
        let scatter = (&x - &x.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1))).mapv(|v| v * v).sum();
        assert_abs_diff_eq!(c.inertia, scatter, epsilon = 1e-12);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let x = array![[0.0, 1.0, 2.0, 5.0, -3.0]];
        let c = kmeans(&x.view(), 5, 1, 3).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert!(c.sizes().iter().all(|&s| s == 1));
    }

    #[test]
    fn rejects_k_above_n() {
        assert!(kmeans(&array![[0.0, 1.0]].view(), 3, 0, 1).is_err());
        assert!(kmeans(&array![[0.0, 1.0]].view(), 1, 0, 0).is_err());
    }

    #[test]
    fn empty_clusters_are_repaired() {
        // all centroids start on the same spot
        let x = array![[0.0, 0.1, 5.0, 9.0]];
        let (c, _) = lloyd(&x.view(), Array2::zeros((1, 3)), 50);
        assert!(c.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn lloyd_inertia_never_increases() {
        let spec = GeneratorSpec::new(GeneratorKind::lsun(), 200, 4);
        let ds = generate(&spec).unwrap();
        for seed in 0..10 {
            let (_, hist) = KMeans::new(4, seed).restarts(1).fit_with_history(&ds.data.values().view()).unwrap();
            for w in hist.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs());
            }
        }
    }

    #[test]
    fn forced_range_returns_it() {
        let x = array![[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]];
        assert_eq!(select_k(&x.view(), 3, 3, 0).unwrap(), 3);
        assert!(select_k(&x.view(), 3, 2, 0).is_err());
        assert!(select_k(&x.view(), 0, 2, 0).is_err());
        assert!(select_k(&x.view(), 1, 7, 0).is_err());
    }

    #[test]
    fn spherical_bic_formula() {
        let x = array![[0.0, 1.0, 4.0, 5.0]];
        let c = Clustering { labels: vec![0, 0, 1, 1], k: 2, inertia: 1.0 };
        let expected = 4.0 * (1.0f64 / 4.0).ln() + 2.0 * 2.0 * 4f64.ln();
        assert_abs_diff_eq!(KCriterion::SphericalBic.score(&x.view(), &c), expected, epsilon = 1e-12);
    }

    #[test]
    fn default_range() {
        assert_eq!(default_k_range(600), (2, 10));
        assert_eq!(default_k_range(50), (2, 5));
        assert_eq!(default_k_range(5), (2, 2));
        assert_eq!(default_k_range(1), (1, 1));
    }
}
