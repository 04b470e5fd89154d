//! Data-space perturbations: PGD attacks under L2/Linf constraints,
//! closed-form adversaries for the linear model, and uniform random noise.
//!
//! Per-sample work is independent; each sample draws from its own
//! counter-based RNG stream `(seed, sample index)` so results do not depend
//! on scheduling.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{l2_norm, sigmoid};
use crate::rng;

/// Kind of data-space perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    PgdL2,
    PgdLinf,
    AnalyticL2,
    AnalyticLinf,
    UniformLinf,
    UniformL2Ball,
}

impl PerturbationKind {
    /// Attack family label used in CSV output.
    pub fn family(&self) -> &'static str {
        match self {
            PerturbationKind::None => "none",
            PerturbationKind::PgdL2 | PerturbationKind::PgdLinf => "pgd",
            PerturbationKind::AnalyticL2 | PerturbationKind::AnalyticLinf => "analytic",
            PerturbationKind::UniformLinf | PerturbationKind::UniformL2Ball => "uniform",
        }
    }

    /// Norm label used in CSV output.
    pub fn norm(&self) -> &'static str {
        match self {
            PerturbationKind::None => "none",
            PerturbationKind::PgdL2
            | PerturbationKind::AnalyticL2
            | PerturbationKind::UniformL2Ball => "l2",
            PerturbationKind::PgdLinf
            | PerturbationKind::AnalyticLinf
            | PerturbationKind::UniformLinf => "linf",
        }
    }

    pub fn is_pgd(&self) -> bool {
        matches!(self, PerturbationKind::PgdL2 | PerturbationKind::PgdLinf)
    }

    pub fn is_random(&self) -> bool {
        matches!(
            self,
            PerturbationKind::UniformLinf | PerturbationKind::UniformL2Ball
        )
    }

    pub fn is_analytic(&self) -> bool {
        matches!(
            self,
            PerturbationKind::AnalyticL2 | PerturbationKind::AnalyticLinf
        )
    }
}

/// Raw JSON form; fills kind-dependent defaults for omitted fields.
#[derive(Deserialize)]
struct RawSpec {
    kind: PerturbationKind,
    #[serde(default)]
    epsilon: f64,
    step_size: Option<f64>,
    iterations: Option<usize>,
    clip_01: Option<bool>,
    #[serde(default)]
    seed: u64,
}

/// Full description of one perturbation.
///
/// `epsilon` is in the units of the kind's norm. `step_size`/`iterations`
/// apply to PGD kinds, `seed` to random kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub epsilon: f64,
    pub step_size: f64,
    pub iterations: usize,
    pub clip_01: bool,
    pub seed: u64,
}

impl TryFrom<RawSpec> for PerturbationSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let mut spec = match raw.kind {
            PerturbationKind::None => PerturbationSpec::none(),
            PerturbationKind::PgdL2 => PerturbationSpec::pgd_l2(raw.epsilon),
            PerturbationKind::PgdLinf => PerturbationSpec::pgd_linf(raw.epsilon),
            PerturbationKind::AnalyticL2 => PerturbationSpec::analytic_l2(raw.epsilon),
            PerturbationKind::AnalyticLinf => PerturbationSpec::analytic_linf(raw.epsilon),
            PerturbationKind::UniformLinf => PerturbationSpec::uniform_linf(raw.epsilon, raw.seed),
            PerturbationKind::UniformL2Ball => {
                PerturbationSpec::uniform_l2_ball(raw.epsilon, raw.seed)
            }
        };
        if let Some(step) = raw.step_size {
            spec.step_size = step;
        }
        if let Some(iters) = raw.iterations {
            spec.iterations = iters;
        }
        if let Some(clip) = raw.clip_01 {
            spec.clip_01 = clip;
        }
        spec.seed = raw.seed;
        spec.validate()?;
        Ok(spec)
    }
}

impl PerturbationSpec {
    pub fn none() -> Self {
        PerturbationSpec {
            kind: PerturbationKind::None,
            epsilon: 0.0,
            step_size: 1.0,
            iterations: 1,
            clip_01: false,
            seed: 0,
        }
    }

    /// L2 PGD with the experiment defaults: step `0.15 * epsilon`,
    /// 40 iterations, clipping to `[0,1]` enabled.
    pub fn pgd_l2(epsilon: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::PgdL2,
            epsilon,
            step_size: 0.15 * epsilon,
            iterations: 40,
            clip_01: true,
            seed: 0,
        }
    }

    /// Linf PGD with the experiment defaults: step 0.01, 40 iterations,
    /// clipping to `[0,1]` enabled.
    pub fn pgd_linf(epsilon: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::PgdLinf,
            epsilon,
            step_size: 0.01,
            iterations: 40,
            clip_01: true,
            seed: 0,
        }
    }

    /// Closed-form worst-case L2 perturbation (no clipping).
    pub fn analytic_l2(epsilon: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::AnalyticL2,
            epsilon,
            step_size: 1.0,
            iterations: 1,
            clip_01: false,
            seed: 0,
        }
    }

    /// Closed-form worst-case Linf perturbation (no clipping).
    pub fn analytic_linf(epsilon: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::AnalyticLinf,
            epsilon,
            step_size: 1.0,
            iterations: 1,
            clip_01: false,
            seed: 0,
        }
    }

    /// I.i.d. uniform noise per coordinate, `U(-epsilon, epsilon)`.
    pub fn uniform_linf(epsilon: f64, seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::UniformLinf,
            epsilon,
            step_size: 1.0,
            iterations: 1,
            clip_01: true,
            seed,
        }
    }

    /// Noise drawn uniformly from the L2 ball of radius `epsilon`.
    pub fn uniform_l2_ball(epsilon: f64, seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::UniformL2Ball,
            epsilon,
            step_size: 1.0,
            iterations: 1,
            clip_01: true,
            seed,
        }
    }

    pub fn with_clip(mut self, clip_01: bool) -> Self {
        self.clip_01 = clip_01;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_step_size(mut self, step_size: f64) -> Self {
        self.step_size = step_size;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Evaluation-time variant: PGD kinds run 100 iterations; other kinds
    /// are unchanged.
    pub fn evaluation(&self) -> Self {
        if self.kind.is_pgd() {
            self.with_iterations(100)
        } else {
            *self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.kind.is_pgd() {
            if self.iterations < 1 {
                return Err(Error::InvalidSpec("PGD needs iterations >= 1".into()));
            }
            if (self.step_size.is_nan() || self.step_size <= 0.0) && self.epsilon > 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "PGD needs step_size > 0, got {}",
                    self.step_size
                )));
            }
        }
        if self.kind.is_analytic() && self.clip_01 {
            return Err(Error::InvalidSpec(
                "analytic adversaries require clip_01 = false; the closed form \
                 is not the constrained maximizer under [0,1] clamping"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Short stable identifier used in file names: `kind` plus epsilon.
    pub fn tag(&self) -> String {
        format!(
            "{}_{}_{:.6}",
            self.kind.family(),
            self.kind.norm(),
            self.epsilon
        )
    }
}

fn l2_project(row: &mut [f64], origin: &[f64], epsilon: f64) {
    let dist2: f64 = row.iter().zip(origin).map(|(a, b)| (a - b) * (a - b)).sum();
    let dist = dist2.sqrt();
    if dist > epsilon {
        let scale = epsilon / dist;
        for (v, &o) in row.iter_mut().zip(origin) {
            *v = o + (*v - o) * scale;
        }
    }
}

fn clip_unit_box(row: &mut [f64]) {
    for v in row.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Iterative PGD attack on the logistic per-sample loss.
///
/// Starts at the clean point (no random restart). Each step moves along the
/// signed gradient (Linf) or the normalized gradient (L2), projects onto the
/// epsilon-ball around the clean point, then optionally clamps to `[0,1]`.
/// A sample whose loss gradient is numerically zero is left unperturbed.
pub fn pgd(data: &Dataset, w: &Array1<f64>, spec: &PerturbationSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    if !spec.kind.is_pgd() {
        return Err(Error::InvalidSpec(format!(
            "pgd() called with kind {:?}",
            spec.kind
        )));
    }
    if w.len() != data.dim() {
        return Err(Error::DimMismatch(format!(
            "weight dim {} vs feature dim {}",
            w.len(),
            data.dim()
        )));
    }
    let mut out = data.features().clone();
    if spec.epsilon == 0.0 {
        return Ok(out);
    }
    let d = data.dim();
    let w_norm = l2_norm(w);
    let w_slice = w.as_slice().expect("weights are contiguous");
    let clean = data.features().as_slice().expect("row-major features");
    let labels = data.labels();
    let spec = *spec;
    out.as_slice_mut()
        .expect("row-major output")
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(n, row)| {
            let origin = &clean[n * d..(n + 1) * d];
            let y = labels[n];
            for _ in 0..spec.iterations {
                let logit: f64 = row.iter().zip(w_slice).map(|(a, b)| a * b).sum();
                // input-space gradient of softplus(-y w.x) is -y * s * w
                let s = sigmoid(-y * logit);
                if s == 0.0 || w_norm == 0.0 {
                    break;
                }
                match spec.kind {
                    PerturbationKind::PgdLinf => {
                        for (v, &wi) in row.iter_mut().zip(w_slice) {
                            if wi != 0.0 {
                                *v += spec.step_size * (-y * wi).signum();
                            }
                        }
                        for (v, &o) in row.iter_mut().zip(origin) {
                            *v = v.clamp(o - spec.epsilon, o + spec.epsilon);
                        }
                    }
                    PerturbationKind::PgdL2 => {
                        // normalized gradient direction is -y * w / ||w||
                        let scale = spec.step_size * (-y) / w_norm;
                        for (v, &wi) in row.iter_mut().zip(w_slice) {
                            *v += scale * wi;
                        }
                        l2_project(row, origin, spec.epsilon);
                    }
                    _ => unreachable!(),
                }
                if spec.clip_01 {
                    clip_unit_box(row);
                }
            }
        });
    Ok(out)
}

/// Exact per-sample maximizer of the loss over the epsilon-ball for the
/// linear model: `x - eps * y * w/||w||` (L2) or `x - eps * y * sign(w)`
/// (Linf). Requires `clip_01 = false`. A zero weight vector leaves the data
/// unperturbed (the loss is then constant in the noise).
pub fn analytic_adversary(
    data: &Dataset,
    w: &Array1<f64>,
    spec: &PerturbationSpec,
) -> Result<Array2<f64>> {
    analytic_adversary_raw(data.features(), data.labels(), w, spec)
}

/// [`analytic_adversary`] on raw features; also used by internal oracles
/// whose constructed inputs live outside the `[0,1]` box.
pub(crate) fn analytic_adversary_raw(
    features: &Array2<f64>,
    labels: &[f64],
    w: &Array1<f64>,
    spec: &PerturbationSpec,
) -> Result<Array2<f64>> {
    spec.validate()?;
    if !spec.kind.is_analytic() {
        return Err(Error::InvalidSpec(format!(
            "analytic_adversary() called with kind {:?}",
            spec.kind
        )));
    }
    if w.len() != features.ncols() {
        return Err(Error::DimMismatch(format!(
            "weight dim {} vs feature dim {}",
            w.len(),
            features.ncols()
        )));
    }
    let mut out = features.clone();
    let w_norm = l2_norm(w);
    if spec.epsilon == 0.0 || w_norm == 0.0 {
        return Ok(out);
    }
    for (mut row, &y) in out.rows_mut().into_iter().zip(labels) {
        match spec.kind {
            PerturbationKind::AnalyticL2 => {
                let scale = -spec.epsilon * y / w_norm;
                row.zip_mut_with(w, |v, &wi| *v += scale * wi);
            }
            PerturbationKind::AnalyticLinf => {
                row.zip_mut_with(w, |v, &wi| {
                    if wi != 0.0 {
                        *v += -spec.epsilon * y * wi.signum();
                    }
                });
            }
            _ => unreachable!(),
        }
    }
    Ok(out)
}

fn noise_for_sample(spec: &PerturbationSpec, sample: usize, d: usize) -> Vec<f64> {
    let mut rng = rng::stream(spec.seed, sample as u64);
    match spec.kind {
        PerturbationKind::UniformLinf => (0..d)
            .map(|_| spec.epsilon * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        PerturbationKind::UniformL2Ball => {
            let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: f64 = rng.random();
            if norm == 0.0 {
                return vec![0.0; d];
            }
            let radius = spec.epsilon * u.powf(1.0 / d as f64);
            for v in dir.iter_mut() {
                *v *= radius / norm;
            }
            dir
        }
        _ => unreachable!(),
    }
}

/// Adds uniform random noise to every sample. Deterministic per seed via
/// counter-based per-sample streams; `clip_01` clamps `x + eta` into `[0,1]`.
pub fn random_noise(data: &Dataset, spec: &PerturbationSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    if !spec.kind.is_random() {
        return Err(Error::InvalidSpec(format!(
            "random_noise() called with kind {:?}",
            spec.kind
        )));
    }
    let mut out = data.features().clone();
    if spec.epsilon == 0.0 {
        return Ok(out);
    }
    let d = data.dim();
    let spec = *spec;
    out.as_slice_mut()
        .expect("row-major output")
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(n, row)| {
            let eta = noise_for_sample(&spec, n, d);
            for (v, e) in row.iter_mut().zip(eta) {
                *v += e;
            }
            if spec.clip_01 {
                clip_unit_box(row);
            }
        });
    Ok(out)
}

/// Dispatches to the matching generator; `kind = none` returns the clean
/// features. Gradient-based kinds applied at `w = 0` also return the clean
/// features (every per-sample gradient is exactly zero there).
pub fn perturb(data: &Dataset, w: &Array1<f64>, spec: &PerturbationSpec) -> Result<Array2<f64>> {
    match spec.kind {
        PerturbationKind::None => {
            spec.validate()?;
            Ok(data.features().clone())
        }
        PerturbationKind::PgdL2 | PerturbationKind::PgdLinf => pgd(data, w, spec),
        PerturbationKind::AnalyticL2 | PerturbationKind::AnalyticLinf => {
            analytic_adversary(data, w, spec)
        }
        PerturbationKind::UniformLinf | PerturbationKind::UniformL2Ball => random_noise(data, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_separable;
    use crate::model::{mean_loss, per_sample_losses, DecomposedAdvLoss};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn tiny_dataset(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Dataset {
        let n = xs.len();
        let d = xs[0].len();
        let flat: Vec<f64> = xs.into_iter().flatten().collect();
        Dataset::new(Array2::from_shape_vec((n, d), flat).unwrap(), ys, "tiny").unwrap()
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let data = synth_separable(5, 3, 0.3, 1).unwrap();
        let w = array![0.4, -0.2, 0.1];
        for spec in [
            PerturbationSpec::pgd_l2(0.0),
            PerturbationSpec::pgd_linf(0.0),
            PerturbationSpec::analytic_l2(0.0),
            PerturbationSpec::analytic_linf(0.0),
            PerturbationSpec::uniform_linf(0.0, 3),
            PerturbationSpec::uniform_l2_ball(0.0, 3),
            PerturbationSpec::none(),
        ] {
            let out = perturb(&data, &w, &spec).unwrap();
            assert_eq!(&out, data.features());
        }
    }

    #[test]
    fn one_step_linf_pgd_matches_sign_formula() {
        let data = tiny_dataset(vec![vec![0.5, 0.5, 0.5]], vec![1.0]);
        let w = array![0.7, -0.3, 0.0];
        let eps = 0.05;
        let spec = PerturbationSpec::pgd_linf(eps)
            .with_iterations(1)
            .with_step_size(0.2)
            .with_clip(false);
        let out = pgd(&data, &w, &spec).unwrap();
        // x - eps * y * sign(w), zero weight coordinate untouched
        assert_abs_diff_eq!(out[[0, 0]], 0.5 - eps, epsilon = 1e-15);
        assert_abs_diff_eq!(out[[0, 1]], 0.5 + eps, epsilon = 1e-15);
        assert_abs_diff_eq!(out[[0, 2]], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn linf_closed_form_beats_every_corner() {
        // brute-force corner enumeration in d = 3
        let mut rng = crate::rng::stream(5150, 0);
        for _ in 0..25 {
            let x: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let w = Array1::from_iter((0..3).map(|_| rng.random_range(-1.0..1.0)));
            let eps = 0.2;
            let data = tiny_dataset(vec![x.clone()], vec![y]);
            let spec = PerturbationSpec::analytic_linf(eps);
            let adv = analytic_adversary(&data, &w, &spec).unwrap();
            let adv_loss = mean_loss(&adv, data.labels(), &w).unwrap();
            for corner in 0..8u32 {
                let probe: Vec<f64> = (0..3)
                    .map(|j| x[j] + if corner >> j & 1 == 1 { eps } else { -eps })
                    .collect();
                let probe = Array2::from_shape_vec((1, 3), probe).unwrap();
                let corner_loss = mean_loss(&probe, data.labels(), &w).unwrap();
                assert!(adv_loss >= corner_loss - 1e-12);
            }
        }
    }

    #[test]
    fn analytic_l2_hand_example() {
        let data = tiny_dataset(vec![vec![0.0, 0.0]], vec![1.0]);
        let w = array![3.0, 4.0];
        let spec = PerturbationSpec::analytic_l2(1.0);
        let out = analytic_adversary(&data, &w, &spec).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(out[[0, 1]], -0.8, epsilon = 1e-15);
    }

    #[test]
    fn analytic_l2_beats_dense_circle_grid() {
        let data = tiny_dataset(vec![vec![0.0, 0.0]], vec![1.0]);
        let w = array![3.0, 4.0];
        let spec = PerturbationSpec::analytic_l2(1.0);
        let adv = analytic_adversary(&data, &w, &spec).unwrap();
        let best = mean_loss(&adv, data.labels(), &w).unwrap();
        for i in 0..3600 {
            let t = i as f64 * std::f64::consts::TAU / 3600.0;
            let probe = Array2::from_shape_vec((1, 2), vec![t.cos(), t.sin()]).unwrap();
            let l = mean_loss(&probe, data.labels(), &w).unwrap();
            assert!(best >= l - 1e-12);
        }
    }

    #[test]
    fn analytic_l2_beats_random_probes() {
        let mut rng = crate::rng::stream(321, 9);
        let d = 6;
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let y = -1.0;
        let w = Array1::from_iter((0..d).map(|_| rng.random_range(-1.0..1.0)));
        let eps = 0.7;
        let data = tiny_dataset(vec![x.clone()], vec![y]);
        let adv = analytic_adversary(&data, &w, &PerturbationSpec::analytic_l2(eps)).unwrap();
        let best = mean_loss(&adv, data.labels(), &w).unwrap();
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let radius: f64 = rng.random::<f64>() * eps;
            for (vi, xi) in v.iter_mut().zip(&x) {
                *vi = xi + *vi / norm * radius;
            }
            let probe = Array2::from_shape_vec((1, d), v).unwrap();
            let l = mean_loss(&probe, data.labels(), &w).unwrap();
            assert!(best >= l - 1e-12);
        }
    }

    #[test]
    fn analytic_l2_loss_matches_decomposition_at_aligned_angle() {
        // per-sample analytic-L2 loss equals the decomposed loss at
        // y * cos(theta) = 1 and ||eta|| = eps
        let data = synth_separable(6, 4, 0.3, 2).unwrap();
        let w = array![0.8, -0.5, 0.3, 0.1];
        let eps = 0.45;
        let adv = analytic_adversary(&data, &w, &PerturbationSpec::analytic_l2(eps)).unwrap();
        let adv_losses = per_sample_losses(&adv, data.labels(), &w).unwrap();
        let w_norm = l2_norm(&w);
        for (n, &y) in data.labels().iter().enumerate() {
            let clean_logit = y * data.features().row(n).dot(&w);
            let expected = crate::model::decomposed_adv_loss(&DecomposedAdvLoss {
                clean_logit,
                w_norm,
                eta_norm: eps,
                cos_theta: y,
                label: y,
            });
            assert_abs_diff_eq!(adv_losses[n], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn pgd_l2_converges_to_analytic_adversary() {
        let data = synth_separable(10, 5, 0.35, 4).unwrap();
        let w = Array1::from_iter(
            (0..5).map(|i| 0.3 * (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 }),
        );
        let eps = 0.6;
        let spec = PerturbationSpec::pgd_l2(eps)
            .with_iterations(100)
            .with_clip(false);
        let attacked = pgd(&data, &w, &spec).unwrap();
        let analytic = analytic_adversary(&data, &w, &PerturbationSpec::analytic_l2(eps)).unwrap();
        let pgd_losses = per_sample_losses(&attacked, data.labels(), &w).unwrap();
        let exact_losses = per_sample_losses(&analytic, data.labels(), &w).unwrap();
        for (a, b) in pgd_losses.iter().zip(&exact_losses) {
            assert!((a - b).abs() < 1e-8, "pgd {a} vs analytic {b}");
        }
    }

    #[test]
    fn analytic_dominates_pgd() {
        let data = synth_separable(15, 4, 0.3, 8).unwrap();
        let w = array![0.9, -0.6, 0.2, 0.4];
        for eps in [0.1, 0.5, 1.0] {
            let attacked = pgd(&data, &w, &PerturbationSpec::pgd_l2(eps).with_clip(false)).unwrap();
            let analytic =
                analytic_adversary(&data, &w, &PerturbationSpec::analytic_l2(eps)).unwrap();
            let pgd_losses = per_sample_losses(&attacked, data.labels(), &w).unwrap();
            let exact_losses = per_sample_losses(&analytic, data.labels(), &w).unwrap();
            for (&p, &a) in pgd_losses.iter().zip(&exact_losses) {
                assert!(a >= p - 1e-9);
            }
        }
    }

    #[test]
    fn pgd_never_lowers_the_loss() {
        let data = synth_separable(12, 4, 0.3, 6).unwrap();
        let w = array![0.5, 0.8, -0.7, 0.2];
        for spec in [
            PerturbationSpec::pgd_l2(0.4),
            PerturbationSpec::pgd_linf(0.05),
            PerturbationSpec::pgd_l2(0.4).with_clip(false),
        ] {
            let out = pgd(&data, &w, &spec).unwrap();
            let clean = per_sample_losses(data.features(), data.labels(), &w).unwrap();
            let attacked = per_sample_losses(&out, data.labels(), &w).unwrap();
            for (c, a) in clean.iter().zip(&attacked) {
                assert!(a >= &(c - 1e-12));
            }
        }
    }

    #[test]
    fn pgd_loss_nondecreasing_across_iterations() {
        let data = synth_separable(8, 3, 0.3, 13).unwrap();
        let w = array![0.6, -0.9, 0.3];
        let eps = 0.5;
        let iters = 20;
        let step = eps / iters as f64;
        let mut prev = mean_loss(data.features(), data.labels(), &w).unwrap();
        for k in 1..=iters {
            let spec = PerturbationSpec::pgd_l2(eps)
                .with_iterations(k)
                .with_step_size(step)
                .with_clip(false);
            let out = pgd(&data, &w, &spec).unwrap();
            let l = mean_loss(&out, data.labels(), &w).unwrap();
            assert!(l >= prev - 1e-12);
            prev = l;
        }
    }

    #[test]
    fn zero_weights_leave_samples_unperturbed() {
        let data = synth_separable(4, 3, 0.3, 2).unwrap();
        let w = Array1::zeros(3);
        for spec in [
            PerturbationSpec::pgd_l2(0.5),
            PerturbationSpec::pgd_linf(0.1),
            PerturbationSpec::analytic_l2(0.5),
            PerturbationSpec::analytic_linf(0.1),
        ] {
            let out = perturb(&data, &w, &spec).unwrap();
            assert_eq!(&out, data.features());
        }
    }

    #[test]
    fn analytic_rejects_clipping() {
        let mut spec = PerturbationSpec::analytic_l2(0.5);
        spec.clip_01 = true;
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn uniform_noise_is_seed_deterministic() {
        let data = synth_separable(6, 4, 0.3, 3).unwrap();
        let spec = PerturbationSpec::uniform_linf(0.1, 42);
        let a = random_noise(&data, &spec).unwrap();
        let b = random_noise(&data, &spec).unwrap();
        assert_eq!(a, b);
        let c = random_noise(&data, &spec.with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_streams_match_serial_reconstruction() {
        let data = synth_separable(5, 3, 0.3, 9).unwrap();
        let spec = PerturbationSpec::uniform_l2_ball(0.2, 7).with_clip(false);
        let out = random_noise(&data, &spec).unwrap();
        for n in 0..data.len() {
            let eta = noise_for_sample(&spec, n, 3);
            for j in 0..3 {
                assert_eq!(out[[n, j]], data.features()[[n, j]] + eta[j]);
            }
        }
    }

    #[test]
    fn uniform_linf_moments_match_theory() {
        // d = 1, 1e5 draws: mean ~ 0 and variance ~ eps^2/3
        let n = 100_000;
        let eps = 0.3;
        let features = Array2::from_elem((n, 1), 0.5);
        let data = Dataset::new(features, vec![1.0; n], "flat").unwrap();
        let spec = PerturbationSpec::uniform_linf(eps, 11).with_clip(false);
        let noisy = random_noise(&data, &spec).unwrap();
        let etas: Vec<f64> = (0..n).map(|i| noisy[[i, 0]] - 0.5).collect();
        let mean = etas.iter().sum::<f64>() / n as f64;
        let var = etas.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * eps / (3.0 * n as f64).sqrt());
        let expected = eps * eps / 3.0;
        assert!(
            (var / expected - 1.0).abs() < 0.02,
            "var {var} vs {expected}"
        );
    }

    #[test]
    fn l2_ball_noise_respects_radius() {
        let data = synth_separable(50, 6, 0.3, 21).unwrap();
        let eps = 0.4;
        let spec = PerturbationSpec::uniform_l2_ball(eps, 5).with_clip(false);
        let noisy = random_noise(&data, &spec).unwrap();
        for n in 0..data.len() {
            let mut dist2 = 0.0;
            for j in 0..6 {
                let diff = noisy[[n, j]] - data.features()[[n, j]];
                dist2 += diff * diff;
            }
            assert!(dist2.sqrt() <= eps + 1e-9);
        }
    }

    #[test]
    fn spec_json_round_trip_uses_stable_keys() {
        let spec = PerturbationSpec::pgd_l2(0.8).with_seed(3);
        let json = serde_json::to_string(&spec).unwrap();
        for key in [
            "kind",
            "epsilon",
            "step_size",
            "iterations",
            "clip_01",
            "seed",
        ] {
            assert!(json.contains(key), "missing key {key} in {json}");
        }
        let back: PerturbationSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_json_fills_kind_defaults() {
        let spec: PerturbationSpec =
            serde_json::from_str(r#"{"kind":"pgd_linf","epsilon":0.0627}"#).unwrap();
        assert_eq!(spec.iterations, 40);
        assert_abs_diff_eq!(spec.step_size, 0.01, epsilon = 1e-15);
        assert!(spec.clip_01);
        let none: PerturbationSpec = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(none.epsilon, 0.0);
    }

    proptest! {
        // ball constraints and box constraints hold for every PGD output
        #[test]
        fn pgd_respects_ball_and_box(
            seed in 0u64..200,
            eps in 0.01..0.8f64,
            linf in proptest::bool::ANY,
            clip in proptest::bool::ANY,
        ) {
            let data = synth_separable(6, 4, 0.3, seed).unwrap();
            let mut rng = crate::rng::stream(seed, 1);
            let w = Array1::from_iter((0..4).map(|_| rng.random_range(-1.0..1.0)));
            let spec = if linf {
                PerturbationSpec::pgd_linf(eps).with_step_size(eps * 0.3)
            } else {
                PerturbationSpec::pgd_l2(eps)
            }
            .with_iterations(10)
            .with_clip(clip);
            let out = pgd(&data, &w, &spec).unwrap();
            for n in 0..data.len() {
                let mut dist2 = 0.0;
                let mut dinf: f64 = 0.0;
                for j in 0..4 {
                    let diff = out[[n, j]] - data.features()[[n, j]];
                    dist2 += diff * diff;
                    dinf = dinf.max(diff.abs());
                    if clip {
                        prop_assert!((0.0..=1.0).contains(&out[[n, j]]));
                    }
                }
                if linf {
                    prop_assert!(dinf <= eps + 1e-9);
                } else {
                    prop_assert!(dist2.sqrt() <= eps + 1e-9);
                }
            }
        }
    }
}
