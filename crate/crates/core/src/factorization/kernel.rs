use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{MiscError, Result};
use crate::linalg::pairwise_sq_distances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(−‖xᵢ − xⱼ‖² / (2σ²))`
    Gaussian,
    /// `xᵢᵀxⱼ`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelWidth {
    /// Root mean squared distance of the samples to their mean.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub width: KernelWidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::gaussian()
    }
}

impl KernelSpec {
    pub fn gaussian() -> Self {
        KernelSpec {
            kind: KernelKind::Gaussian,
            width: KernelWidth::Auto,
        }
    }

    pub fn gaussian_with_width(width: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Gaussian,
            width: KernelWidth::Fixed(width),
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            width: KernelWidth::Auto,
        }
    }
}

/// `σ = sqrt(Σᵢ ‖xᵢ − x̄‖² / n)` over the columns of `x`.
pub fn auto_width(x: &ArrayView2<f64>) -> f64 {
    let n = x.ncols() as f64;
    let mean = x.mean_axis(Axis(1)).expect("non-empty");
    let centered = x - &mean.insert_axis(Axis(1));
    (centered.mapv(|v| v * v).sum() / n).sqrt()
}

/// Kernel matrix between the columns of `x` (`m × n` → `n × n`).
pub fn gram(x: &ArrayView2<f64>, spec: &KernelSpec) -> Result<Array2<f64>> {
    if x.ncols() == 0 {
        return Err(MiscError::invalid("gram matrix of an empty sample set"));
    }
    match spec.kind {
        KernelKind::Linear => Ok(x.t().dot(x)),
        KernelKind::Gaussian => {
            let sigma = match spec.width {
                KernelWidth::Auto => auto_width(x),
                KernelWidth::Fixed(w) => w,
            };
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(MiscError::Degenerate(format!(
                    "gaussian kernel width must be positive, got {sigma} (identical samples?)"
                )));
            }
            let scale = -0.5 / (sigma * sigma);
            let mut k = pairwise_sq_distances(x);
            k.mapv_inplace(|d| (d * scale).exp());
            Ok(k)
        }
    }
}
