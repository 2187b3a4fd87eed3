use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataMatrix, LabeledDataset};
use crate::error::{MiscError, Result};

/// Shape parameters for each synthetic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Isotropic Gaussian clusters; `scales[c]` is the standard deviation of cluster `c`.
    GaussianBlobs {
        centers: Vec<Vec<f64>>,
        scales: Vec<f64>,
    },
    /// A dense ball nested in a hollow spherical shell (3D).
    Atom {
        core_radius: f64,
        shell_inner: f64,
        shell_outer: f64,
    },
    /// Two rectangular bars forming an "L" plus a round cluster (2D).
    Lsun {
        bar_length: f64,
        bar_width: f64,
        gap: f64,
        ball_center: [f64; 2],
        ball_radius: f64,
    },
    /// Two noisy concentric rings (2D).
    Rings {
        inner_radius: f64,
        outer_radius: f64,
        noise: f64,
    },
}

impl GeneratorKind {
    /// Unit ball inside a shell of radius 10 to 11. With the auto kernel width, a shell much
    /// wider than the core is what lets a Gaussian kernel tell the two apart.
    pub fn atom() -> Self {
        GeneratorKind::Atom {
            core_radius: 1.0,
            shell_inner: 10.0,
            shell_outer: 11.0,
        }
    }

    /// 4 × 1 bars with a 0.6 gap and a radius 1.8 disk 0.7 away from both bars. The disk is large
    /// enough that nearest-centroid boundaries cut into it, while the gap stays wider than the
    /// typical 5-nearest-neighbor distance at n = 400.
    pub fn lsun() -> Self {
        GeneratorKind::Lsun {
            bar_length: 4.0,
            bar_width: 1.0,
            gap: 0.6,
            ball_center: [3.5, 3.5],
            ball_radius: 1.8,
        }
    }

    pub fn rings() -> Self {
        GeneratorKind::Rings {
            inner_radius: 1.0,
            outer_radius: 3.0,
            noise: 0.15,
        }
    }

    pub fn blobs(centers: Vec<Vec<f64>>, scale: f64) -> Self {
        let scales = vec![scale; centers.len()];
        GeneratorKind::GaussianBlobs { centers, scales }
    }

    pub fn n_clusters(&self) -> usize {
        match self {
            GeneratorKind::GaussianBlobs { centers, .. } => centers.len(),
            GeneratorKind::Atom { .. } | GeneratorKind::Rings { .. } => 2,
            GeneratorKind::Lsun { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::GaussianBlobs { .. } => "gaussian_blobs",
            GeneratorKind::Atom { .. } => "atom",
            GeneratorKind::Lsun { .. } => "lsun",
            GeneratorKind::Rings { .. } => "rings",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorSpec { kind, n, seed }
    }

    fn validate(&self) -> Result<()> {
        let k = self.kind.n_clusters();
        if k == 0 {
            return Err(MiscError::invalid("generator needs at least one cluster"));
        }
        if self.n < 2 * k {
            return Err(MiscError::invalid(format!(
                "{} with {k} clusters needs n >= {}, got {}",
                self.kind.name(),
                2 * k,
                self.n
            )));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    match spec.kind {
        GeneratorKind::GaussianBlobs { .. } => gen_gaussian_blobs(spec),
        GeneratorKind::Atom { .. } => gen_atom(spec),
        GeneratorKind::Lsun { .. } => gen_lsun(spec),
        GeneratorKind::Rings { .. } => gen_rings(spec),
    }
}

fn finish(columns: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<LabeledDataset> {
    let d = columns[0].len();
    let values = Array2::from_shape_fn((d, columns.len()), |(i, j)| columns[j][i]);
    LabeledDataset::new(DataMatrix::new(values)?, vec![("labels".into(), labels)])
}

fn wrong_kind(expected: &str) -> MiscError {
    MiscError::invalid(format!("generator spec is not of kind {expected}"))
}

fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Samples are assigned round-robin, so sample `i` belongs to cluster `i % k`.
pub fn gen_gaussian_blobs(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    let GeneratorKind::GaussianBlobs { centers, scales } = &spec.kind else {
        return Err(wrong_kind("gaussian_blobs"));
    };
    let k = centers.len();
    if k > spec.n {
        return Err(MiscError::invalid(format!(
            "{k} clusters requested for {} samples",
            spec.n
        )));
    }
    spec.validate()?;
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(MiscError::invalid("blob centers must share a nonzero dimension"));
    }
    if scales.len() != k || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(MiscError::invalid("need one positive scale per blob center"));
    }
    let mut rng = spec.rng();
    let mut columns = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % k;
        let col = centers[c]
            .iter()
            .map(|mu| {
                let z: f64 = rng.sample(StandardNormal);
                mu + scales[c] * z
            })
            .collect();
        columns.push(col);
        labels.push(c);
    }
    finish(columns, labels)
}

/// Core ball samples come first (label 0), then the shell (label 1).
pub fn gen_atom(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    let GeneratorKind::Atom {
        core_radius,
        shell_inner,
        shell_outer,
    } = spec.kind
    else {
        return Err(wrong_kind("atom"));
    };
    if spec.n % 2 != 0 {
        return Err(MiscError::invalid(format!("atom needs an even n, got {}", spec.n)));
    }
    if !(core_radius > 0.0 && core_radius < shell_inner && shell_inner <= shell_outer) {
        return Err(MiscError::invalid(
            "atom radii must satisfy 0 < core_radius < shell_inner <= shell_outer",
        ));
    }
    spec.validate()?;
    let mut rng = spec.rng();
    let half = spec.n / 2;
    let mut columns = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let dir = unit_direction(&mut rng, 3);
        let u: f64 = rng.random();
        let (radius, label) = if i < half {
            // uniform in the ball
            (core_radius * u.cbrt(), 0)
        } else {
            (shell_inner + (shell_outer - shell_inner) * u, 1)
        };
        columns.push(dir.into_iter().map(|x| x * radius).collect());
        labels.push(label);
    }
    finish(columns, labels)
}

/// Horizontal bar (label 0, n/4), vertical bar above it (label 1, n/4) and a disk (label 2, n/2).
pub fn gen_lsun(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    let GeneratorKind::Lsun {
        bar_length,
        bar_width,
        gap,
        ball_center,
        ball_radius,
    } = spec.kind
    else {
        return Err(wrong_kind("lsun"));
    };
    if spec.n % 4 != 0 {
        return Err(MiscError::invalid(format!(
            "lsun needs n divisible by 4, got {}",
            spec.n
        )));
    }
    if !(bar_length > 0.0 && bar_width > 0.0 && gap >= 0.0 && ball_radius > 0.0) {
        return Err(MiscError::invalid("lsun lengths must be positive"));
    }
    spec.validate()?;
    let mut rng = spec.rng();
    let quarter = spec.n / 4;
    let mut columns = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (point, label) = if i < quarter {
            (vec![a * bar_length, b * bar_width], 0)
        } else if i < 2 * quarter {
            (vec![a * bar_width, bar_width + gap + b * bar_length], 1)
        } else {
            let r = ball_radius * a.sqrt();
            let t = std::f64::consts::TAU * b;
            (
                vec![ball_center[0] + r * t.cos(), ball_center[1] + r * t.sin()],
                2,
            )
        };
        columns.push(point);
        labels.push(label);
    }
    finish(columns, labels)
}

/// Inner ring first (label 0), then the outer ring (label 1).
pub fn gen_rings(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    let GeneratorKind::Rings {
        inner_radius,
        outer_radius,
        noise,
    } = spec.kind
    else {
        return Err(wrong_kind("rings"));
    };
    if !(inner_radius > 0.0 && inner_radius < outer_radius && noise >= 0.0) {
        return Err(MiscError::invalid("rings need 0 < inner_radius < outer_radius"));
    }
    spec.validate()?;
    let mut rng = spec.rng();
    let half = spec.n / 2;
    let mut columns = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let (radius, label) = if i < half {
            (inner_radius, 0)
        } else {
            (outer_radius, 1)
        };
        let t = std::f64::consts::TAU * rng.random::<f64>();
        let (e1, e2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        columns.push(vec![
            radius * t.cos() + noise * e1,
            radius * t.sin() + noise * e2,
        ]);
        labels.push(label);
    }
    finish(columns, labels)
}

/// Stacks the feature blocks of `parts` after shuffling each part's samples independently.
///
/// Every view of every part is kept, aligned with the shuffled samples.
pub fn compose_multiview(parts: &[LabeledDataset], seed: u64) -> Result<LabeledDataset> {
    let n = parts
        .first()
        .ok_or_else(|| MiscError::invalid("compose_multiview needs at least one part"))?
        .data
        .n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = parts
        .iter()
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    compose_multiview_with_permutations(parts, &perms)
}

/// As [`compose_multiview`], with explicit permutations: new sample `j` of part `p` is old sample `perms[p][j]`.
pub fn compose_multiview_with_permutations(
    parts: &[LabeledDataset],
    perms: &[Vec<usize>],
) -> Result<LabeledDataset> {
    if parts.is_empty() || parts.len() != perms.len() {
        return Err(MiscError::invalid("need one permutation per part"));
    }
    let n = parts[0].data.n_samples();
    for (p, part) in parts.iter().enumerate() {
        if part.data.n_samples() != n {
            return Err(MiscError::invalid(format!(
                "part {p} has {} samples, expected {n}",
                part.data.n_samples()
            )));
        }
        let mut seen = vec![false; n];
        if perms[p].len() != n || perms[p].iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(MiscError::invalid(format!("permutation {p} is not a permutation of 0..{n}")));
        }
    }
    let blocks: Vec<Array2<f64>> = parts
        .iter()
        .zip(perms)
        .map(|(part, perm)| part.data.values().select(Axis(1), perm))
        .collect();
    let views_flat: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let values = ndarray::concatenate(Axis(0), &views_flat)
        .map_err(|e| MiscError::invalid(e.to_string()))?;
    let names: Option<Vec<String>> = if parts.iter().all(|p| p.data.feature_names().is_some()) {
        Some(
            parts
                .iter()
                .flat_map(|p| p.data.feature_names().unwrap().iter().cloned())
                .collect(),
        )
    } else {
        None
    };
    let views = parts
        .iter()
        .zip(perms)
        .enumerate()
        .flat_map(|(p, (part, perm))| {
            part.views.iter().map(move |(name, labels)| {
                (
                    format!("part{}_{name}", p + 1),
                    perm.iter().map(|&i| labels[i]).collect::<Vec<_>>(),
                )
            })
        })
        .collect();
    LabeledDataset::new(DataMatrix::with_names(values, names)?, views)
}
