//! Training loops: standard, adversarial (min-max), and random-noise.
//!
//! The outer minimization is plain gradient descent; the inner maximization
//! is re-solved every step by regenerating perturbations at the current
//! weights. Full-batch descent is the default so runs are bitwise
//! reproducible under a fixed config.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{gradient, l2_norm, margins, mean_loss};
use crate::perturb::{perturb, PerturbationSpec};
use crate::reduce::pairwise_mean;
use crate::rng;

/// Weight initialization scheme. Zeros are the deterministic default;
/// `w = 0` has a well-defined gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    #[default]
    Zeros,
    Gaussian {
        scale: f64,
    },
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub perturbation: PerturbationSpec,
    pub learning_rate: f64,
    pub epochs: usize,
    /// 0 = full batch.
    pub batch_size: usize,
    pub seed: u64,
    /// Stop early once the training-step gradient norm falls below this.
    pub stop_tol: f64,
    /// Record a checkpoint every this many epochs (the final epoch is
    /// always recorded).
    pub record_every: usize,
    #[serde(default)]
    pub init: WeightInit,
}

impl TrainConfig {
    pub fn new(perturbation: PerturbationSpec) -> Self {
        TrainConfig {
            perturbation,
            learning_rate: 0.1,
            epochs: 500,
            batch_size: 0,
            seed: 0,
            stop_tol: 0.0,
            record_every: 50,
            init: WeightInit::Zeros,
        }
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every.max(1);
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        if self.stop_tol < 0.0 {
            return Err(Error::Config("stop_tol must be >= 0".into()));
        }
        self.perturbation.validate()
    }
}

/// Model state captured during or after training.
///
/// `train_loss`, `train_robust_acc` and `grad_norm` are evaluated at this
/// checkpoint's weights with the configured perturbation regenerated there
/// (base seed, not the per-epoch draw).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub w: Vec<f64>,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_robust_acc: f64,
    pub grad_norm: f64,
    pub config: TrainConfig,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn weights(&self) -> Array1<f64> {
        Array1::from_vec(self.w.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("checkpoint decode: {e}")))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        if !(0.0..=100.0).contains(&self.train_robust_acc) {
            return Err(Error::Data(format!(
                "checkpoint accuracy {} outside [0,100]",
                self.train_robust_acc
            )));
        }
        if self.train_loss.is_nan() || self.train_loss < 0.0 {
            return Err(Error::Data(format!(
                "checkpoint loss {} is negative or NaN",
                self.train_loss
            )));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "checkpoint weights contain non-finite values".into(),
            ));
        }
        self.config.validate()
    }
}

/// Robust accuracy/loss of a model under one perturbation spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub spec: PerturbationSpec,
    /// Percent in [0, 100]; a logit of exactly zero counts as an error.
    pub robust_accuracy: f64,
    pub robust_loss: f64,
}

/// Loss, accuracy and gradient norm at `w` under `spec` (perturbation
/// regenerated at `w` with the spec's own seed).
pub(crate) fn robust_metrics(
    data: &Dataset,
    w: &Array1<f64>,
    spec: &PerturbationSpec,
) -> Result<(f64, f64, f64)> {
    let perturbed = perturb(data, w, spec)?;
    let loss = mean_loss(&perturbed, data.labels(), w)?;
    let ms = margins(&perturbed, data.labels(), w)?;
    let correct = ms.iter().filter(|m| **m > 0.0).count();
    let acc = 100.0 * correct as f64 / ms.len() as f64;
    let grad = gradient(&perturbed, data.labels(), w)?;
    Ok((loss, acc, l2_norm(&grad)))
}

/// Evaluates robust accuracy and loss on (re-generated) perturbed data.
pub fn evaluate(data: &Dataset, w: &Array1<f64>, spec: &PerturbationSpec) -> Result<EvalResult> {
    let (robust_loss, robust_accuracy, _) = robust_metrics(data, w, spec)?;
    Ok(EvalResult {
        spec: *spec,
        robust_accuracy,
        robust_loss,
    })
}

/// Train robust accuracy minus test robust accuracy (may be negative).
/// Both evaluations must use the same perturbation spec.
pub fn generalization_gap(train_eval: &EvalResult, test_eval: &EvalResult) -> Result<f64> {
    if train_eval.spec != test_eval.spec {
        return Err(Error::InvalidSpec(
            "generalization gap requires both evaluations under the same spec".into(),
        ));
    }
    Ok(train_eval.robust_accuracy - test_eval.robust_accuracy)
}

/// Stats of one epoch, measured at the weights *before* the update using
/// that epoch's perturbation draw.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Incremental driver for one training run. `step()` advances one epoch;
/// scans that need the per-epoch perturbed features use
/// `epoch_perturbation()` + `step_with()`.
pub struct Trainer<'a> {
    data: &'a Dataset,
    cfg: TrainConfig,
    w: Array1<f64>,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a Dataset, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let d = data.dim();
        let w = match cfg.init {
            WeightInit::Zeros => Array1::zeros(d),
            WeightInit::Gaussian { scale } => {
                let mut rng = rng::stream(cfg.seed, u64::MAX);
                Array1::from_iter((0..d).map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                }))
            }
        };
        Ok(Trainer {
            data,
            cfg,
            w,
            epoch: 0,
        })
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.w
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Spec for the upcoming epoch: random kinds redraw their noise each
    /// epoch through a derived seed; deterministic kinds are unchanged.
    fn epoch_spec(&self) -> PerturbationSpec {
        if self.cfg.perturbation.kind.is_random() {
            self.cfg.perturbation.with_seed(rng::derive(
                self.cfg.perturbation.seed,
                self.epoch as u64 + 1,
            ))
        } else {
            self.cfg.perturbation
        }
    }

    /// This epoch's perturbed features at the current weights.
    pub fn epoch_perturbation(&self) -> Result<Array2<f64>> {
        perturb(self.data, &self.w, &self.epoch_spec())
    }

    /// Full-batch gradient step on the given perturbed features.
    pub fn step_with(&mut self, perturbed: &Array2<f64>) -> Result<EpochStats> {
        if self.cfg.batch_size != 0 {
            return Err(Error::Config(
                "step_with() is only valid for full-batch training".into(),
            ));
        }
        let loss = mean_loss(perturbed, self.data.labels(), &self.w)?;
        let grad = gradient(perturbed, self.data.labels(), &self.w)?;
        let grad_norm = l2_norm(&grad);
        self.epoch += 1;
        if !loss.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Diverged {
                epoch: self.epoch,
                reason: format!("loss {loss}, grad norm {grad_norm}"),
            });
        }
        self.w.zip_mut_with(&grad, |wi, &gi| {
            *wi -= self.cfg.learning_rate * gi;
        });
        Ok(EpochStats {
            epoch: self.epoch,
            loss,
            grad_norm,
        })
    }

    /// Runs one epoch: a single step for full-batch training, otherwise one
    /// pass of seeded-shuffle mini-batches with per-batch perturbations.
    pub fn step(&mut self) -> Result<EpochStats> {
        if self.cfg.batch_size == 0 {
            let perturbed = self.epoch_perturbation()?;
            return self.step_with(&perturbed);
        }
        let spec = self.epoch_spec();
        let n = self.data.len();
        let order = shuffled_indices(n, rng::derive(self.cfg.seed, self.epoch as u64 + 1));
        let mut batch_losses = Vec::new();
        let mut last_grad_norm = 0.0;
        for batch in order.chunks(self.cfg.batch_size) {
            let (sub, sub_labels) = take_rows(self.data, batch);
            let sub_ds = Dataset::new(sub, sub_labels, "batch")?;
            let perturbed = perturb(&sub_ds, &self.w, &spec)?;
            let loss = mean_loss(&perturbed, sub_ds.labels(), &self.w)?;
            let grad = gradient(&perturbed, sub_ds.labels(), &self.w)?;
            last_grad_norm = l2_norm(&grad);
            if !loss.is_finite() || !last_grad_norm.is_finite() {
                return Err(Error::Diverged {
                    epoch: self.epoch + 1,
                    reason: format!("batch loss {loss}, grad norm {last_grad_norm}"),
                });
            }
            self.w.zip_mut_with(&grad, |wi, &gi| {
                *wi -= self.cfg.learning_rate * gi;
            });
            batch_losses.push(loss);
        }
        self.epoch += 1;
        Ok(EpochStats {
            epoch: self.epoch,
            loss: pairwise_mean(&batch_losses),
            grad_norm: last_grad_norm,
        })
    }

    fn checkpoint(&self) -> Result<Checkpoint> {
        let (train_loss, train_robust_acc, grad_norm) =
            robust_metrics(self.data, &self.w, &self.cfg.perturbation)?;
        Ok(Checkpoint {
            version: CHECKPOINT_VERSION,
            w: self.w.to_vec(),
            epoch: self.epoch,
            train_loss,
            train_robust_acc,
            grad_norm,
            config: self.cfg.clone(),
        })
    }
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, 0);
    order.shuffle(&mut rng);
    order
}

fn take_rows(data: &Dataset, rows: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let d = data.dim();
    let mut sub = Array2::zeros((rows.len(), d));
    let mut labels = Vec::with_capacity(rows.len());
    for (out_row, &i) in rows.iter().enumerate() {
        sub.row_mut(out_row).assign(&data.features().row(i));
        labels.push(data.labels()[i]);
    }
    (sub, labels)
}

/// Runs a full training loop and returns the checkpoint history.
///
/// A checkpoint is recorded every `record_every` epochs plus always at the
/// final epoch (or at early stop). The last entry holds the final weights.
pub fn train(data: &Dataset, cfg: TrainConfig) -> Result<Vec<Checkpoint>> {
    let mut trainer = Trainer::new(data, cfg)?;
    let mut history = Vec::new();
    for _ in 0..trainer.cfg.epochs {
        let stats = trainer.step()?;
        if trainer.cfg.stop_tol > 0.0 && stats.grad_norm < trainer.cfg.stop_tol {
            break;
        }
        if stats.epoch % trainer.cfg.record_every == 0 && stats.epoch != trainer.cfg.epochs {
            history.push(trainer.checkpoint()?);
        }
    }
    history.push(trainer.checkpoint()?);
    Ok(history)
}

/// Convenience: train and keep only the final checkpoint.
pub fn train_final(data: &Dataset, cfg: TrainConfig) -> Result<Checkpoint> {
    Ok(train(data, cfg)?.pop().expect("history is never empty"))
}

/// Early-stopping variant: picks the recorded checkpoint with the best
/// robust accuracy on a held-out split (robust overfitting guard). Fixed-
/// epoch training stays the default; ties go to the later checkpoint.
pub fn select_best_checkpoint<'a>(
    history: &'a [Checkpoint],
    held_out: &Dataset,
) -> Result<&'a Checkpoint> {
    if history.is_empty() {
        return Err(Error::Data("empty checkpoint history".into()));
    }
    let mut best = &history[0];
    let mut best_acc = f64::NEG_INFINITY;
    for ckpt in history {
        let eval = evaluate(held_out, &ckpt.weights(), &ckpt.config.perturbation)?;
        if eval.robust_accuracy >= best_acc {
            best_acc = eval.robust_accuracy;
            best = ckpt;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_separable;
    use crate::perturb::PerturbationKind;
    use ndarray::array;

    fn quick_cfg(spec: PerturbationSpec) -> TrainConfig {
        TrainConfig::new(spec)
            .with_learning_rate(0.5)
            .with_epochs(200)
            .with_record_every(50)
    }

    #[test]
    fn standard_training_separates_margin_04() {
        let data = synth_separable(25, 4, 0.4, 17).unwrap();
        let cfg = quick_cfg(PerturbationSpec::none()).with_epochs(500);
        let ckpt = train_final(&data, cfg).unwrap();
        let eval = evaluate(&data, &ckpt.weights(), &PerturbationSpec::none()).unwrap();
        assert_eq!(eval.robust_accuracy, 100.0);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let data = synth_separable(10, 3, 0.35, 3).unwrap();
        let cfg = quick_cfg(PerturbationSpec::uniform_linf(0.05, 9)).with_epochs(50);
        let a = train_final(&data, cfg.clone()).unwrap();
        let b = train_final(&data, cfg).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.train_loss, b.train_loss);
    }

    #[test]
    fn loss_tail_is_monotone_for_small_lr() {
        let data = synth_separable(10, 3, 0.4, 5).unwrap();
        let mut trainer = Trainer::new(
            &data,
            TrainConfig::new(PerturbationSpec::none())
                .with_learning_rate(0.05)
                .with_epochs(300),
        )
        .unwrap();
        let mut losses = Vec::new();
        for _ in 0..300 {
            losses.push(trainer.step().unwrap().loss);
        }
        for pair in losses[100..].windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn adversarial_loss_dominates_standard_loss() {
        let data = synth_separable(12, 4, 0.35, 7).unwrap();
        let base = TrainConfig::new(PerturbationSpec::none())
            .with_learning_rate(0.2)
            .with_epochs(120);
        let adv_cfg = TrainConfig {
            perturbation: PerturbationSpec::analytic_l2(0.25),
            ..base.clone()
        };
        let mut std_trainer = Trainer::new(&data, base).unwrap();
        let mut adv_trainer = Trainer::new(&data, adv_cfg).unwrap();
        for _ in 0..120 {
            let s = std_trainer.step().unwrap();
            let a = adv_trainer.step().unwrap();
            assert!(
                a.loss >= s.loss - 1e-12,
                "epoch {}: {} < {}",
                s.epoch,
                a.loss,
                s.loss
            );
        }
    }

    #[test]
    fn divergence_is_reported() {
        // conflicting labels on identical wide inputs: one absurd step makes
        // the margin dot product overflow and the loss of the minority
        // sample is +inf
        let d = 16;
        let features = Array2::from_elem((3, d), 1.0);
        let data = Dataset::new(features, vec![1.0, 1.0, -1.0], "clash").unwrap();
        let cfg = TrainConfig::new(PerturbationSpec::none())
            .with_learning_rate(1e308)
            .with_epochs(5);
        match train(&data, cfg) {
            Err(Error::Diverged { epoch, .. }) => assert_eq!(epoch, 2),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn analytic_adversary_stalls_at_stationary_point() {
        // single point with eps = ||x||: after the first step the analytic
        // perturbation maps the sample onto the origin, the gradient
        // vanishes, and the weights stay finite
        let features = Array2::from_shape_vec((1, 2), vec![0.6, 0.8]).unwrap();
        let data = Dataset::new(features, vec![1.0], "one").unwrap();
        let cfg = TrainConfig::new(PerturbationSpec::analytic_l2(1.0))
            .with_learning_rate(0.5)
            .with_epochs(50)
            .with_stop_tol(1e-14);
        let ckpt = train_final(&data, cfg).unwrap();
        assert!(ckpt.grad_norm < 1e-14);
        let w_norm = l2_norm(&ckpt.weights());
        assert!(w_norm > 0.0 && w_norm < 1.0);
        assert!(
            ckpt.epoch < 50,
            "early stop expected, ran {} epochs",
            ckpt.epoch
        );
    }

    #[test]
    fn adversarial_training_keeps_weights_bounded_when_eps_exceeds_margin() {
        let features = Array2::from_shape_vec((1, 2), vec![0.3, 0.4]).unwrap();
        let data = Dataset::new(features, vec![1.0], "one").unwrap();
        let run = |spec: PerturbationSpec| {
            let cfg = TrainConfig::new(spec)
                .with_learning_rate(0.5)
                .with_epochs(400);
            l2_norm(&train_final(&data, cfg).unwrap().weights())
        };
        let robust_norm = run(PerturbationSpec::analytic_l2(0.8)); // eps > ||x|| = 0.5
        let clean_norm = run(PerturbationSpec::none());
        assert!(robust_norm < 1.0, "weights should stall, got {robust_norm}");
        assert!(clean_norm > 2.0 * robust_norm);
    }

    #[test]
    fn evaluate_tie_rule_counts_zero_logits_as_errors() {
        let data = synth_separable(5, 3, 0.3, 1).unwrap();
        let w = Array1::zeros(3);
        let eval = evaluate(&data, &w, &PerturbationSpec::none()).unwrap();
        assert_eq!(eval.robust_accuracy, 0.0);
    }

    #[test]
    fn evaluate_perfect_separator() {
        let data = synth_separable(8, 2, 0.4, 4).unwrap();
        // the generating direction (1,-1)/sqrt(2) separates the clouds
        let w = array![4.0, -4.0];
        let eval = evaluate(&data, &w, &PerturbationSpec::none()).unwrap();
        assert_eq!(eval.robust_accuracy, 100.0);
    }

    #[test]
    fn gap_requires_matching_specs() {
        let a = EvalResult {
            spec: PerturbationSpec::pgd_l2(0.5),
            robust_accuracy: 99.49,
            robust_loss: 0.1,
        };
        let b = EvalResult {
            spec: PerturbationSpec::pgd_l2(0.5),
            robust_accuracy: 99.62,
            robust_loss: 0.1,
        };
        let gap = generalization_gap(&a, &b).unwrap();
        assert!((gap - -0.13).abs() < 1e-12);
        let c = EvalResult {
            spec: PerturbationSpec::pgd_l2(0.6),
            ..b
        };
        assert!(generalization_gap(&a, &c).is_err());
    }

    #[test]
    fn gap_is_zero_on_identical_datasets() {
        let data = synth_separable(6, 3, 0.35, 8).unwrap();
        let ckpt = train_final(&data, quick_cfg(PerturbationSpec::none()).with_epochs(50)).unwrap();
        let spec = PerturbationSpec::none();
        let e1 = evaluate(&data, &ckpt.weights(), &spec).unwrap();
        let e2 = evaluate(&data, &ckpt.weights(), &spec).unwrap();
        assert_eq!(generalization_gap(&e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn sgd_matches_epoch_count_and_is_deterministic() {
        let data = synth_separable(16, 3, 0.35, 10).unwrap();
        let cfg = quick_cfg(PerturbationSpec::none())
            .with_batch_size(8)
            .with_epochs(30);
        let a = train_final(&data, cfg.clone()).unwrap();
        let b = train_final(&data, cfg).unwrap();
        assert_eq!(a.epoch, 30);
        assert_eq!(a.w, b.w);
    }

    #[test]
    fn checkpoint_history_records_requested_epochs() {
        let data = synth_separable(6, 3, 0.35, 11).unwrap();
        let cfg = quick_cfg(PerturbationSpec::none())
            .with_epochs(100)
            .with_record_every(40);
        let history = train(&data, cfg).unwrap();
        let epochs: Vec<usize> = history.iter().map(|c| c.epoch).collect();
        assert_eq!(epochs, vec![40, 80, 100]);
    }

    #[test]
    fn best_checkpoint_selection_prefers_higher_held_out_accuracy() {
        let data = synth_separable(20, 4, 0.4, 19).unwrap();
        let held_out = synth_separable(10, 4, 0.4, 20).unwrap();
        let cfg = quick_cfg(PerturbationSpec::none())
            .with_epochs(200)
            .with_record_every(40);
        let history = train(&data, cfg).unwrap();
        let best = select_best_checkpoint(&history, &held_out).unwrap();
        let best_eval = evaluate(&held_out, &best.weights(), &PerturbationSpec::none()).unwrap();
        for ckpt in &history {
            let eval = evaluate(&held_out, &ckpt.weights(), &PerturbationSpec::none()).unwrap();
            assert!(eval.robust_accuracy <= best_eval.robust_accuracy);
        }
    }

    #[test]
    fn checkpoint_json_round_trip() {
        let data = synth_separable(4, 3, 0.35, 12).unwrap();
        let ckpt = train_final(
            &data,
            quick_cfg(PerturbationSpec::pgd_l2(0.3)).with_epochs(5),
        )
        .unwrap();
        let back = Checkpoint::from_json(&ckpt.to_json()).unwrap();
        assert_eq!(back.w, ckpt.w);
        assert_eq!(back.epoch, ckpt.epoch);
        assert_eq!(back.config.perturbation.kind, PerturbationKind::PgdL2);
        assert_eq!(back.train_loss, ckpt.train_loss);
    }

    #[test]
    fn checkpoint_rejects_bad_version() {
        let data = synth_separable(4, 3, 0.35, 12).unwrap();
        let mut ckpt =
            train_final(&data, quick_cfg(PerturbationSpec::none()).with_epochs(3)).unwrap();
        ckpt.version = 99;
        assert!(Checkpoint::from_json(&ckpt.to_json()).is_err());
    }
}
