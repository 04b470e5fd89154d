//! Self-contained verification suite over synthetic fixtures.
//!
//! Each check pairs an implementation path with an independent oracle
//! (finite differences, closed forms, brute probes) and reports a metric
//! against a pinned tolerance. The CLI `verify` command serializes the
//! results as JSON and fails on any red check.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::Serialize;

use crate::data::{synth_separable, Dataset};
use crate::model::{
    decomposed_adv_loss, gradient, hessian, l2_norm, mean_loss, per_sample_losses,
    DecomposedAdvLoss,
};
use crate::numdiff::{central_gradient, central_hessian_of_gradient};
use crate::perturb::{analytic_adversary, pgd, random_noise, PerturbationSpec};
use crate::rng;
use crate::spectrum::{eig_dense, random_noise_scan, unit_projector, verify_optimum_match};
use crate::train::TrainConfig;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Observed worst-case metric (smaller is better unless noted).
    pub metric: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, metric: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            pass: metric < tolerance,
            metric,
            tolerance,
        }
    }
}

/// Runs the oracle suite; `only` restricts to checks whose name contains
/// the given substring.
pub fn run_suite(only: Option<&str>) -> Vec<CheckResult> {
    let all: Vec<fn() -> CheckResult> = vec![
        check_gradient_fd,
        check_hessian_fd,
        check_optimum_match,
        check_projector_spectrum,
        check_pgd_vs_analytic,
        check_monotone_decomposed_loss,
        check_random_noise_convergence,
        check_uniform_noise_variance,
    ];
    all.iter()
        .map(|f| f())
        .filter(|r| only.is_none_or(|needle| r.name.contains(needle)))
        .collect()
}

/// JSON report `{check_name: {pass, metric, tolerance}}`, keys sorted.
pub fn report_json(results: &[CheckResult]) -> String {
    #[derive(Serialize)]
    struct Entry {
        pass: bool,
        metric: f64,
        tolerance: f64,
    }
    let map: std::collections::BTreeMap<String, Entry> = results
        .iter()
        .map(|r| {
            (
                r.name.clone(),
                Entry {
                    pass: r.pass,
                    metric: r.metric,
                    tolerance: r.tolerance,
                },
            )
        })
        .collect();
    serde_json::to_string_pretty(&map).expect("report serializes")
}

fn random_instance(rng: &mut impl Rng, n: usize, d: usize) -> (Array2<f64>, Vec<f64>, Array1<f64>) {
    let mut feats = Array2::zeros((n, d));
    feats.mapv_inplace(|_| rng.random::<f64>());
    let labels: Vec<f64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let w = Array1::from_iter((0..d).map(|_| rng.random_range(-2.0..2.0)));
    (feats, labels, w)
}

/// Analytic gradient vs central finite differences, 100 random instances.
fn check_gradient_fd() -> CheckResult {
    let mut rng = rng::stream(0x67AD, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..8);
        let d = rng.random_range(1..6);
        let (feats, labels, w) = random_instance(&mut rng, n, d);
        let g = gradient(&feats, &labels, &w).unwrap();
        let fd = central_gradient(|wv| mean_loss(&feats, &labels, wv).unwrap(), &w, 1e-5);
        let rel = l2_norm(&(&g - &fd)) / l2_norm(&g).max(1e-12);
        worst = worst.max(rel);
    }
    CheckResult::new("gradient_finite_difference", worst, 1e-6)
}

/// Exact Hessian vs finite-differenced analytic gradient, elementwise.
fn check_hessian_fd() -> CheckResult {
    let mut rng = rng::stream(0x4E55, 0);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let n = rng.random_range(2..8);
        let d = rng.random_range(2..6);
        let (feats, labels, w) = random_instance(&mut rng, n, d);
        let h = hessian(&feats, &labels, &w).unwrap();
        let fd = central_hessian_of_gradient(|wv| gradient(&feats, &labels, wv).unwrap(), &w, 1e-5);
        let scale = h.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-9);
        for (a, b) in h.iter().zip(fd.iter()) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    CheckResult::new("hessian_finite_difference", worst, 1e-4)
}

/// Theoretical optimum Hessian vs the numerically differentiated
/// worst-case loss, on constructed single-point optima. The metric is the
/// largest `max_abs_diff / tolerance` ratio, so 1.0 is the pass boundary.
fn check_optimum_match() -> CheckResult {
    let mut rng = rng::stream(0x0B71, 0);
    let mut worst_ratio = 0.0f64;
    for (i, &d) in [2usize, 5, 10, 784].iter().enumerate() {
        for rep in 0..5 {
            let x = Array1::from_iter((0..d).map(|_| rng.random_range(0.05..1.0)));
            let y = if (i + rep) % 2 == 0 { 1.0 } else { -1.0 };
            let eps = rng.random_range(0.3..1.2);
            let scale = rng.random_range(0.5..2.0);
            let m = verify_optimum_match(&x, y, eps, scale).unwrap();
            worst_ratio = worst_ratio.max(m.max_abs_diff / m.tolerance());
        }
    }
    CheckResult::new("optimum_hessian_match", worst_ratio, 1.0)
}

/// Spectrum of `I - w^ w^T` is exactly {1 x (d-1), 0 x 1}.
fn check_projector_spectrum() -> CheckResult {
    let mut rng = rng::stream(0x9707, 0);
    let mut worst = 0.0f64;
    for d in [2usize, 3, 8, 32] {
        let w = Array1::from_iter((0..d).map(|_| rng.random_range(-1.0..1.0)));
        let p = unit_projector(&w).unwrap();
        let eigs = eig_dense(&p).unwrap();
        for v in &eigs[..d - 1] {
            worst = worst.max((v - 1.0).abs());
        }
        worst = worst.max(eigs[d - 1].abs());
    }
    CheckResult::new("projector_spectrum", worst, 1e-10)
}

/// 100-step unclipped L2 PGD reaches the analytic adversary's per-sample
/// loss.
fn check_pgd_vs_analytic() -> CheckResult {
    let data = synth_separable(20, 6, 0.4, 0x70D).unwrap();
    let mut rng = rng::stream(0x70D, 1);
    let w = Array1::from_iter((0..6).map(|_| rng.random_range(-1.0..1.0)));
    let mut worst = 0.0f64;
    for eps in [0.2, 0.6, 1.0] {
        let attacked = pgd(
            &data,
            &w,
            &PerturbationSpec::pgd_l2(eps)
                .with_iterations(100)
                .with_clip(false),
        )
        .unwrap();
        let exact = analytic_adversary(&data, &w, &PerturbationSpec::analytic_l2(eps)).unwrap();
        let a = per_sample_losses(&attacked, data.labels(), &w).unwrap();
        let b = per_sample_losses(&exact, data.labels(), &w).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    CheckResult::new("pgd_vs_analytic_adversary", worst, 1e-8)
}

/// Strict monotonicity of the decomposed loss in cos(theta) over 1000
/// random draws. Metric counts violations.
fn check_monotone_decomposed_loss() -> CheckResult {
    let mut rng = rng::stream(0x1EA1, 0);
    let mut violations = 0.0;
    for _ in 0..1000 {
        let label = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let clean_logit = rng.random_range(-4.0..4.0);
        let w_norm = rng.random_range(0.05..3.0);
        let eta_norm = rng.random_range(0.05..2.0);
        let mut c1: f64 = rng.random_range(-1.0..1.0);
        let mut c2: f64 = rng.random_range(-1.0..1.0);
        if (c1 - c2).abs() < 1e-9 {
            c2 = (c1 + 0.5).clamp(-1.0, 1.0);
            c1 -= 0.25;
        }
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let at = |cos_theta: f64| {
            decomposed_adv_loss(&DecomposedAdvLoss {
                clean_logit,
                w_norm,
                eta_norm,
                cos_theta,
                label,
            })
        };
        let increasing = at(hi) > at(lo);
        if (label > 0.0) != increasing {
            violations += 1.0;
        }
    }
    CheckResult::new("decomposed_loss_monotonicity", violations, 0.5)
}

/// Top-eigenvalue trajectory under uniform-noise training on separable
/// data: the final value must fall below 5% of the epoch-1 value while the
/// gradient norm shrinks, and at a fixed early epoch (the first record
/// point, where the finite-loss regime separates the trajectories) the
/// eigenvalue must be ordered by epsilon.
fn check_random_noise_convergence() -> CheckResult {
    let data = synth_separable(300, 8, 0.5, 0xF00D).unwrap();
    let early_epoch = 500;
    let base = TrainConfig::new(PerturbationSpec::uniform_linf(0.0, 5))
        .with_learning_rate(2.0)
        .with_epochs(4000)
        .with_record_every(early_epoch);
    let epsilons = [0.0, 8.0 / 255.0, 16.0 / 255.0];
    let rows = random_noise_scan(&data, &epsilons, &base).unwrap();
    let mut worst_ratio = 0.0f64;
    let mut early_eigs = Vec::new();
    for &eps in &epsilons {
        let per: Vec<&crate::spectrum::NoiseScanRow> =
            rows.iter().filter(|r| r.epsilon == eps).collect();
        let first = per.first().unwrap();
        let last = per.last().unwrap();
        worst_ratio = worst_ratio.max(last.top_eigenvalue / first.top_eigenvalue);
        if last.grad_norm >= first.grad_norm {
            worst_ratio = worst_ratio.max(1.0);
        }
        early_eigs.push(
            per.iter()
                .find(|r| r.epoch == early_epoch)
                .unwrap()
                .top_eigenvalue,
        );
    }
    let ordered = early_eigs.windows(2).all(|p| p[0] < p[1]);
    let metric = if ordered { worst_ratio } else { 1.0 };
    CheckResult::new("random_noise_eigenvalue_decay", metric, 0.05)
}

/// Sample variance of uniform Linf noise matches eps^2/3 within 2% over
/// 1e5 draws.
fn check_uniform_noise_variance() -> CheckResult {
    let n = 100_000;
    let eps = 16.0 / 255.0;
    let features = Array2::from_elem((n, 1), 0.5);
    let data = Dataset::new(features, vec![1.0; n], "flat").unwrap();
    let spec = PerturbationSpec::uniform_linf(eps, 0xAB).with_clip(false);
    let noisy = random_noise(&data, &spec).unwrap();
    let etas: Vec<f64> = (0..n).map(|i| noisy[[i, 0]] - 0.5).collect();
    let mean = etas.iter().sum::<f64>() / n as f64;
    let var = etas.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64;
    let rel = (var / (eps * eps / 3.0) - 1.0).abs();
    CheckResult::new("uniform_noise_variance", rel, 0.02)
}
