//! Linear logistic regression: loss, gradient, exact weight-space Hessian,
//! and the magnitude/direction decomposition of the adversarial loss.
//!
//! The per-sample loss is `log(1 + exp(-y * w.x))` with no bias term, so the
//! weight direction `w/||w||` carries the full geometry. All evaluations use
//! the softplus stabilization and 64-bit arithmetic.

use ndarray::{Array1, Array2};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::reduce::pairwise_mean;

/// Numerically stable `log(1 + exp(z))`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Numerically stable logistic sigmoid `1 / (1 + exp(-z))`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_dims(features: &Array2<f64>, labels: &[f64], w: &Array1<f64>) -> Result<()> {
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(Error::DimMismatch(format!(
            "{n} feature rows vs {} labels",
            labels.len()
        )));
    }
    if w.len() != d {
        return Err(Error::DimMismatch(format!(
            "feature dim {d} vs weight dim {}",
            w.len()
        )));
    }
    Ok(())
}

/// Per-sample margins `m_n = y_n * (w . x_n)`.
pub fn margins(features: &Array2<f64>, labels: &[f64], w: &Array1<f64>) -> Result<Vec<f64>> {
    check_dims(features, labels, w)?;
    let logits = features.dot(w);
    Ok(logits
        .iter()
        .zip(labels)
        .map(|(&logit, &y)| y * logit)
        .collect())
}

/// Per-sample losses `softplus(-m_n)`.
pub fn per_sample_losses(
    features: &Array2<f64>,
    labels: &[f64],
    w: &Array1<f64>,
) -> Result<Vec<f64>> {
    Ok(margins(features, labels, w)?
        .into_iter()
        .map(|m| softplus(-m))
        .collect())
}

/// Mean logistic loss over explicit features/labels.
pub fn mean_loss(features: &Array2<f64>, labels: &[f64], w: &Array1<f64>) -> Result<f64> {
    Ok(pairwise_mean(&per_sample_losses(features, labels, w)?))
}

/// Mean logistic loss of a dataset.
pub fn loss(data: &Dataset, w: &Array1<f64>) -> Result<f64> {
    mean_loss(data.features(), data.labels(), w)
}

/// Gradient of the mean loss with respect to the weights:
/// `(1/N) sum_n (-y_n x_n) sigmoid(-m_n)`.
pub fn gradient(features: &Array2<f64>, labels: &[f64], w: &Array1<f64>) -> Result<Array1<f64>> {
    let ms = margins(features, labels, w)?;
    let n = ms.len() as f64;
    let coefs = Array1::from_iter(ms.iter().zip(labels).map(|(&m, &y)| -y * sigmoid(-m) / n));
    Ok(features.t().dot(&coefs))
}

/// Gradient of the mean loss of a dataset.
pub fn grad(data: &Dataset, w: &Array1<f64>) -> Result<Array1<f64>> {
    gradient(data.features(), data.labels(), w)
}

/// Exact Hessian of the mean loss:
/// `(1/N) sum_n s_n (1 - s_n) x_n x_n^T` with `s_n = sigmoid(-m_n)`.
///
/// Symmetric positive-semidefinite by construction; `(y_n)^2 = 1` removes
/// the label from the curvature term.
pub fn hessian(features: &Array2<f64>, labels: &[f64], w: &Array1<f64>) -> Result<Array2<f64>> {
    let ms = margins(features, labels, w)?;
    let n = ms.len() as f64;
    // H = Z^T Z with Z = diag(sqrt(s(1-s)/N)) X; the scaled copy keeps the
    // accumulation order fixed inside one deterministic matrix product.
    let mut scaled = features.clone();
    for (mut row, &m) in scaled.rows_mut().into_iter().zip(&ms) {
        let s = sigmoid(-m);
        let c = (s * (1.0 - s) / n).sqrt();
        row.mapv_inplace(|v| v * c);
    }
    let h = scaled.t().dot(&scaled);
    let mut sym = h.clone();
    sym.zip_mut_with(&h.t(), |a, &b| *a = 0.5 * (*a + b));
    Ok(sym)
}

/// Exact Hessian of a dataset's loss, optionally at perturbed features.
pub fn hessian_exact(
    data: &Dataset,
    w: &Array1<f64>,
    perturbed_features: Option<&Array2<f64>>,
) -> Result<Array2<f64>> {
    let features = match perturbed_features {
        Some(p) => {
            if p.dim() != data.features().dim() {
                return Err(Error::DimMismatch(format!(
                    "perturbed features {:?} vs dataset {:?}",
                    p.dim(),
                    data.features().dim()
                )));
            }
            p
        }
        None => data.features(),
    };
    hessian(features, data.labels(), w)
}

/// Adversarial per-sample loss decomposed into magnitude and direction.
///
/// `cos_theta` is the cosine of the angle between the noise and `-w`, so the
/// exponent reads `-y w.x + y ||w|| ||eta|| cos(theta)`.
#[derive(Debug, Clone, Copy)]
pub struct DecomposedAdvLoss {
    /// Clean logit `y * (w . x)`.
    pub clean_logit: f64,
    pub w_norm: f64,
    pub eta_norm: f64,
    pub cos_theta: f64,
    /// Label in {-1, +1}.
    pub label: f64,
}

impl DecomposedAdvLoss {
    fn validate(&self) {
        debug_assert!(self.cos_theta.abs() <= 1.0 + 1e-12);
        debug_assert!(self.eta_norm >= 0.0);
        debug_assert!(self.w_norm >= 0.0);
        debug_assert!(self.label == 1.0 || self.label == -1.0);
    }
}

/// Evaluates the decomposed adversarial per-sample loss
/// `softplus(-clean_logit + label * ||w|| * ||eta|| * cos_theta)`.
///
/// Strictly increasing in `cos_theta` for label +1 and strictly decreasing
/// for label -1 whenever `||w|| * ||eta|| > 0`.
pub fn decomposed_adv_loss(term: &DecomposedAdvLoss) -> f64 {
    term.validate();
    softplus(-term.clean_logit + term.label * term.w_norm * term.eta_norm * term.cos_theta)
}

/// Euclidean norm of a vector.
pub fn l2_norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}
