//! Hessian spectra: dense symmetric eigendecomposition, matrix-free
//! top-k Lanczos, the theoretical Hessian at a per-point adversarial
//! optimum, and the epsilon scans used to check how sharpness scales with
//! the noise budget.
//!
//! The theoretical form at an optimum is a scaled projector:
//! `(1/2N) sum_n (||eta_n|| / ||w*||) (I - w^ w^T)` with `w^ = w*/||w*||`,
//! whose spectrum is the scale with multiplicity d-1 plus a zero along `w*`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{gradient, hessian, l2_norm};
use crate::numdiff::central_hessian_of_gradient;
use crate::perturb::{analytic_adversary_raw, perturb, PerturbationKind, PerturbationSpec};
use crate::rng;
use crate::train::{train_final, Checkpoint, TrainConfig, Trainer};

/// Eigenvalues of one Hessian, descending, with run metadata.
#[derive(Debug, Clone, Serialize)]
pub struct HessianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub epsilon: f64,
    pub norm_kind: PerturbationKind,
    pub w_norm: f64,
    pub source: SpectrumSource,
}

/// Which computation produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    /// Exact Hessian of the perturbed-data loss.
    Exact,
    /// Scaled-projector form valid at a per-point adversarial optimum.
    OptimumProjector,
    /// Vanishing-curvature limit of random-noise training.
    RandomNoiseLimit,
}

impl HessianSpectrum {
    /// Validates ordering (descending) and, for exact spectra on
    /// adversarially perturbed data, positive semidefiniteness.
    pub fn new(
        eigenvalues: Vec<f64>,
        epsilon: f64,
        norm_kind: PerturbationKind,
        w_norm: f64,
        source: SpectrumSource,
    ) -> Result<Self> {
        if eigenvalues.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::Eigen("eigenvalues must be descending".into()));
        }
        if source == SpectrumSource::Exact {
            if let Some(last) = eigenvalues.last() {
                if *last < -1e-9 {
                    return Err(Error::Eigen(format!(
                        "exact Hessian spectrum has eigenvalue {last} < -1e-9"
                    )));
                }
            }
        }
        Ok(HessianSpectrum {
            eigenvalues,
            epsilon,
            norm_kind,
            w_norm,
            source,
        })
    }
}

impl TryFrom<&ScanRow> for HessianSpectrum {
    type Error = Error;

    fn try_from(row: &ScanRow) -> Result<Self> {
        HessianSpectrum::new(
            row.eigenvalues.clone(),
            row.epsilon,
            row.kind,
            row.w_norm,
            SpectrumSource::Exact,
        )
    }
}

fn max_abs(h: &Array2<f64>) -> f64 {
    h.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn check_square_symmetric(h: &Array2<f64>) -> Result<usize> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::DimMismatch(format!("matrix is {r}x{c}, not square")));
    }
    let scale = max_abs(h).max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..r {
        for j in (i + 1)..r {
            max_asym = max_asym.max((h[[i, j]] - h[[j, i]]).abs());
        }
    }
    if max_asym > 1e-10 * scale {
        return Err(Error::Eigen(format!(
            "matrix is not symmetric: max asymmetry {max_asym:e}"
        )));
    }
    Ok(r)
}

/// Full spectrum of a symmetric matrix, descending.
pub fn eig_dense(h: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(eig_dense_full(h)?.0)
}

/// Full spectrum plus eigenvectors (columns, matching the sorted order).
pub fn eig_dense_full(h: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = check_square_symmetric(h)?;
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[[i, j]] + h[[j, i]]));
    let decomp = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[b]
            .partial_cmp(&decomp.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (out_col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, out_col]] = decomp.eigenvectors[(row, i)];
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit-shift QL,
/// values only). `off[i]` couples `diag[i]` and `diag[i+1]`.
fn tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(off.len() + 1 == n || n == 0);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigen("tridiagonal QL failed to converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Top-k eigenvalues of a symmetric operator given only matrix-vector
/// products, via Lanczos with full reorthogonalization.
///
/// Restarts with a fresh seed vector on breakdown (at most 3 attempts).
pub fn eig_topk<F>(apply: F, d: usize, k: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    if k == 0 || k > d {
        return Err(Error::Eigen(format!("k = {k} out of range for dim {d}")));
    }
    let max_steps = d.min(10 * k + 50);
    for attempt in 0..3u64 {
        match lanczos_attempt(&apply, d, k, rng::derive(seed, attempt), max_steps)? {
            Some(values) => return Ok(values),
            None => continue,
        }
    }
    Err(Error::Eigen(
        "lanczos broke down before finding an invariant subspace of size k (3 restarts)".into(),
    ))
}

fn lanczos_attempt<F>(
    apply: &F,
    d: usize,
    k: usize,
    seed: u64,
    max_steps: usize,
) -> Result<Option<Vec<f64>>>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let mut rng = rng::stream(seed, 0);
    let mut v = Array1::from_iter((0..d).map(|_| rng.random::<f64>() - 0.5));
    let norm = l2_norm(&v);
    if norm == 0.0 {
        return Ok(None);
    }
    v.mapv_inplace(|x| x / norm);

    let mut basis: Vec<Array1<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_ritz: Option<Vec<f64>> = None;

    for j in 0..max_steps {
        let mut w = apply(&basis[j]);
        if w.len() != d {
            return Err(Error::Eigen(format!(
                "operator returned length {} for dim {d}",
                w.len()
            )));
        }
        let alpha = basis[j].dot(&w);
        alphas.push(alpha);
        w.zip_mut_with(&basis[j], |a, &b| *a -= alpha * b);
        if j > 0 {
            let beta_prev = betas[j - 1];
            w.zip_mut_with(&basis[j - 1], |a, &b| *a -= beta_prev * b);
        }
        // full reorthogonalization, two Gram-Schmidt passes
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&w);
                w.zip_mut_with(q, |a, &b| *a -= proj * b);
            }
        }
        let beta = l2_norm(&w);
        let scale = alphas
            .iter()
            .map(|a| a.abs())
            .chain(betas.iter().map(|b| b.abs()))
            .fold(0.0f64, f64::max)
            .max(1.0);

        let have = alphas.len();
        if beta <= 1e-13 * scale || have == max_steps {
            // invariant subspace (or step budget) reached
            if have >= k {
                return Ok(Some(top_ritz(&alphas, &betas, k)?));
            }
            return Ok(None);
        }
        if have >= k {
            let ritz = top_ritz(&alphas, &betas, k)?;
            if let Some(prev) = &prev_ritz {
                let drift = ritz
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300))
                    .fold(0.0f64, f64::max);
                if drift < 1e-12 {
                    return Ok(Some(ritz));
                }
            }
            prev_ritz = Some(ritz);
        }
        betas.push(beta);
        basis.push(w.mapv(|x| x / beta));
    }
    match prev_ritz {
        Some(r) => Ok(Some(r)),
        None => Ok(None),
    }
}

fn top_ritz(alphas: &[f64], betas: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut values = tridiag_eigenvalues(alphas, betas)?;
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite ritz values"));
    values.truncate(k);
    Ok(values)
}

/// Matrix-free product with the exact Hessian of the logistic loss at the
/// given (possibly perturbed) features: `Hv = (1/N) X^T (c . (X v))`.
pub fn hessian_operator<'a>(
    features: &'a Array2<f64>,
    labels: &[f64],
    w: &Array1<f64>,
) -> Result<impl Fn(&Array1<f64>) -> Array1<f64> + 'a> {
    let ms = crate::model::margins(features, labels, w)?;
    let n = ms.len() as f64;
    let coefs: Vec<f64> = ms
        .iter()
        .map(|&m| {
            let s = crate::model::sigmoid(-m);
            s * (1.0 - s) / n
        })
        .collect();
    Ok(move |v: &Array1<f64>| {
        let mut t = features.dot(v);
        for (ti, &c) in t.iter_mut().zip(&coefs) {
            *ti *= c;
        }
        features.t().dot(&t)
    })
}

/// The projector `I - w^ w^T` with `w^ = w/||w||`.
pub fn unit_projector(w: &Array1<f64>) -> Result<Array2<f64>> {
    let norm = l2_norm(w);
    if norm == 0.0 {
        return Err(Error::Data(
            "projector needs a nonzero weight vector".into(),
        ));
    }
    let d = w.len();
    let mut p = Array2::eye(d);
    for i in 0..d {
        for j in 0..d {
            p[[i, j]] -= w[i] * w[j] / (norm * norm);
        }
    }
    Ok(p)
}

/// Theoretical Hessian at a per-point adversarial optimum:
/// `(1/2N) sum_n (||eta_n|| / ||w*||) * (I - w^ w^T)`.
///
/// Its spectrum is the scalar prefactor with multiplicity d-1 and a single
/// zero whose eigenvector is `w*`.
pub fn theory_hessian_at_optimum(w_star: &Array1<f64>, eta_norms: &[f64]) -> Result<Array2<f64>> {
    let w_norm = l2_norm(w_star);
    if w_norm == 0.0 {
        return Err(Error::Data("optimum Hessian needs ||w*|| > 0".into()));
    }
    if eta_norms.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::Data("eta norms must be finite and >= 0".into()));
    }
    let n = eta_norms.len() as f64;
    let scale = eta_norms.iter().sum::<f64>() / (2.0 * n * w_norm);
    Ok(unit_projector(w_star)? * scale)
}

/// Comparison of the theoretical optimum Hessian against the numerically
/// exact Hessian of the worst-case-L2 adversarial loss.
#[derive(Debug, Clone)]
pub struct OptimumMatch {
    pub exact: Array2<f64>,
    pub theory: Array2<f64>,
    pub max_abs_diff: f64,
}

impl OptimumMatch {
    /// `1e-8 * max(1, ||exact||_F)`.
    pub fn tolerance(&self) -> f64 {
        let fro = self.exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        1e-8 * fro.max(1.0)
    }

    pub fn pass(&self) -> bool {
        self.max_abs_diff < self.tolerance()
    }
}

/// Builds a single-sample adversarial optimum and compares the exact
/// Hessian of the worst-case loss against the scaled-projector theory.
///
/// The stationarity condition `w*/||w*|| = y x / ||eta||` fixes only the
/// direction and requires `||x|| = eps`, so `x` is rescaled to norm `eps`
/// and `w* = scale * y * x / eps` for the free scale `scale > 0`. The exact
/// side differentiates the full pipeline: the worst-case L2 perturbation is
/// regenerated at every probed weight vector and the analytic gradient is
/// centrally differenced.
pub fn verify_optimum_match(
    x: &Array1<f64>,
    y: f64,
    epsilon: f64,
    scale: f64,
) -> Result<OptimumMatch> {
    let x_norm = l2_norm(x);
    if x_norm == 0.0 {
        return Err(Error::Data("sample must be nonzero".into()));
    }
    if epsilon < 1e-6 {
        return Err(Error::InvalidSpec(format!(
            "optimum construction degenerates for epsilon < 1e-6, got {epsilon}"
        )));
    }
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "scale must be > 0, got {scale}"
        )));
    }
    if y != 1.0 && y != -1.0 {
        return Err(Error::Data(format!("label must be -1 or +1, got {y}")));
    }
    let d = x.len();
    let x_scaled = x.mapv(|v| v * epsilon / x_norm);
    let w_star = x_scaled.mapv(|v| scale * y * v / epsilon);
    let features = x_scaled
        .clone()
        .into_shape_with_order((1, d))
        .expect("row vector");
    let labels = [y];
    let spec = PerturbationSpec::analytic_l2(epsilon);
    let robust_grad = |w: &Array1<f64>| {
        let adv = analytic_adversary_raw(&features, &labels, w, &spec)
            .expect("analytic adversary on constructed input");
        gradient(&adv, &labels, w).expect("gradient on constructed input")
    };
    let step = 1e-5 * scale.max(1.0);
    let exact = central_hessian_of_gradient(robust_grad, &w_star, step);
    let theory = theory_hessian_at_optimum(&w_star, &[epsilon])?;
    let max_abs_diff = exact
        .iter()
        .zip(theory.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(OptimumMatch {
        exact,
        theory,
        max_abs_diff,
    })
}

/// One row of an epsilon scan: top eigenvalues of the exact Hessian at the
/// trained weights, with the perturbation regenerated there.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub kind: PerturbationKind,
    /// Top-k eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub w_norm: f64,
    pub train_loss: f64,
    /// Relative gap between the Lanczos and dense top eigenvalue.
    pub lanczos_rel_err: f64,
}

/// Spectrum of one trained checkpoint: regenerates the training
/// perturbation at the final weights and reports the top-k eigenvalues of
/// the exact Hessian there (dense path for d <= 1024, cross-checked against
/// matrix-free Lanczos).
pub fn spectrum_of_checkpoint(data: &Dataset, ckpt: &Checkpoint, k: usize) -> Result<ScanRow> {
    let w = ckpt.weights();
    let spec = ckpt.config.perturbation;
    let perturbed = perturb(data, &w, &spec)?;
    let d = data.dim();
    let k = k.min(d);
    let (eigenvalues, lanczos_rel_err) = if d <= 1024 {
        let h = hessian(&perturbed, data.labels(), &w)?;
        let dense = eig_dense(&h)?;
        let op = hessian_operator(&perturbed, data.labels(), &w)?;
        let lanczos = eig_topk(op, d, k, 0x5eed)?;
        let rel = if dense[0].abs() > 1e-300 {
            (lanczos[0] - dense[0]).abs() / dense[0].abs()
        } else {
            (lanczos[0] - dense[0]).abs()
        };
        (dense[..k].to_vec(), rel)
    } else {
        let op = hessian_operator(&perturbed, data.labels(), &w)?;
        (eig_topk(op, d, k, 0x5eed)?, 0.0)
    };
    Ok(ScanRow {
        epsilon: spec.epsilon,
        kind: spec.kind,
        eigenvalues,
        w_norm: l2_norm(&w),
        train_loss: ckpt.train_loss,
        lanczos_rel_err,
    })
}

/// Trains one model per perturbation spec (ascending epsilon) and reports
/// the top-k exact-Hessian eigenvalues at each trained model.
pub fn adversarial_scan(
    data: &Dataset,
    specs: &[PerturbationSpec],
    base: &TrainConfig,
    k: usize,
) -> Result<Vec<ScanRow>> {
    if specs.windows(2).any(|p| p[0].epsilon > p[1].epsilon) {
        return Err(Error::Config(
            "scan epsilons must be sorted ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let cfg = TrainConfig {
            perturbation: *spec,
            ..base.clone()
        };
        let ckpt = train_final(data, cfg)?;
        rows.push(spectrum_of_checkpoint(data, &ckpt, k)?);
    }
    Ok(rows)
}

/// Least-squares line fit. Returns `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = slope * x + intercept;
            (y - fit) * (y - fit)
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// One record point of a random-noise training trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseScanRow {
    pub epsilon: f64,
    pub epoch: usize,
    pub top_eigenvalue: f64,
    pub grad_norm: f64,
}

/// Trains with uniform Linf noise for each epsilon and logs the top exact
/// Hessian eigenvalue (at the epoch's own noise draw) across epochs.
/// Epoch 1, every `record_every`-th epoch, and the final epoch are recorded.
///
/// Meaningful convergence to zero curvature needs separable data; on
/// non-separable data the per-point losses cannot reach zero and the
/// trajectory flattens out instead.
pub fn random_noise_scan(
    data: &Dataset,
    epsilons: &[f64],
    base: &TrainConfig,
) -> Result<Vec<NoiseScanRow>> {
    let mut rows = Vec::new();
    for &eps in epsilons {
        let spec = PerturbationSpec::uniform_linf(eps, base.perturbation.seed).with_clip(false);
        let cfg = TrainConfig {
            perturbation: spec,
            ..base.clone()
        };
        let record_every = cfg.record_every;
        let epochs = cfg.epochs;
        let mut trainer = Trainer::new(data, cfg)?;
        for epoch in 1..=epochs {
            let perturbed = trainer.epoch_perturbation()?;
            let record = epoch == 1 || epoch % record_every == 0 || epoch == epochs;
            let top = if record {
                let h = hessian(&perturbed, data.labels(), trainer.weights())?;
                Some(eig_dense(&h)?[0])
            } else {
                None
            };
            let stats = trainer.step_with(&perturbed)?;
            if let Some(top_eigenvalue) = top {
                rows.push(NoiseScanRow {
                    epsilon: eps,
                    epoch,
                    top_eigenvalue,
                    grad_norm: stats.grad_norm,
                });
            }
        }
    }
    Ok(rows)
}
