//! Softmax cross-entropy, Adam/AdamW, the two-phase training loop and a
//! finite-difference gradient checker.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{bail, Result};
use crate::kan::{Gradients, KanNetwork};
use crate::metrics::argmax;

/// Loss `logsumexp(scores) - scores[label]` and its gradient
/// `softmax(scores) - onehot(label)`.
pub fn cross_entropy_loss(scores: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= scores.len() {
        bail!(Contract, "label {label} out of range for {} classes", scores.len());
    }
    let top = crate::metrics::argmax(scores);
    let max = scores[top];
    let exps: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    // log(sum) as log1p of the non-maximal terms keeps confident losses accurate
    let rest: f64 = exps.iter().enumerate().filter(|&(i, _)| i != top).map(|(_, e)| e).sum();
    let sum = 1.0 + rest;
    let loss = (max - scores[label]) + libm::log1p(rest);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    Ok((loss.max(0.0), grad))
}

/// Loss and full parameter gradients of one labeled sample.
pub fn loss_and_gradients(net: &KanNetwork, x: &[f64], label: usize) -> Result<(f64, Gradients)> {
    let trace = net.forward_trace(x)?;
    let (loss, upstream) = cross_entropy_loss(trace.output(), label)?;
    Ok((loss, net.backward(&trace, &upstream)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    /// Adam with decoupled weight decay.
    AdamW,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdamW => "adamw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Ignored by plain Adam.
    pub weight_decay: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn adamw(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimizerKind::AdamW,
            weight_decay,
            ..Self::adam(learning_rate)
        }
    }
}

/// Adam/AdamW state: step counter plus first and second moments for each
/// parameter group. Moments are allocated on the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// One update over several parameter groups sharing the step counter.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            bail!(
                Contract,
                "{} parameter groups but {} gradient groups",
                params.len(),
                grads.len()
            );
        }
        if self.step_count == 0 {
            self.first_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            bail!(
                Contract,
                "optimizer holds {} groups, step got {}",
                self.first_moment.len(),
                params.len()
            );
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() || p.len() != self.first_moment[i].len() {
                bail!(
                    Contract,
                    "group {i}: {} parameters, {} gradients, {} moments",
                    p.len(),
                    g.len(),
                    self.first_moment[i].len()
                );
            }
        }

        self.step_count += 1;
        let c = self.config;
        let t = self.step_count as f64;
        let bias1 = 1.0 - libm::pow(c.beta1, t);
        let bias2 = 1.0 - libm::pow(c.beta2, t);
        let decay = match c.kind {
            OptimizerKind::Adam => 0.0,
            OptimizerKind::AdamW => c.learning_rate * c.weight_decay,
        };
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= decay * p[i];
                p[i] -= c.learning_rate * m_hat / (libm::sqrt(v_hat) + c.epsilon);
            }
        }
        Ok(())
    }

    /// Single flat parameter vector.
    pub fn step_flat(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step(&mut [params], &[grads])
    }

    pub fn step_network(&mut self, net: &mut KanNetwork, grads: &Gradients) -> Result<()> {
        let mut params: Vec<&mut [f64]> = net.layers_mut().iter_mut().map(|l| l.params_mut()).collect();
        let grads: Vec<&[f64]> = grads.layers.iter().map(Vec::as_slice).collect();
        self.step(&mut params, &grads)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub pretrain_lr: f64,
    pub finetune_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// AdamW decoupled decay used while fine-tuning.
    pub weight_decay: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_epochs: 60,
            finetune_epochs: 40,
            batch_size: 64,
            pretrain_lr: 1e-3,
            finetune_lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn optimizer(&self, phase: Phase) -> OptimizerConfig {
        let (kind, learning_rate, weight_decay) = match phase {
            Phase::Pretrain => (OptimizerKind::Adam, self.pretrain_lr, 0.0),
            Phase::Finetune => (OptimizerKind::AdamW, self.finetune_lr, self.weight_decay),
        };
        OptimizerConfig {
            kind,
            learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Adam.
    Pretrain,
    /// AdamW, fresh optimizer state.
    Finetune,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pretrain => "pretrain",
            Phase::Finetune => "finetune",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based, counted across both phases.
    pub epoch: usize,
    pub phase: Phase,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

pub type TrainHistory = Vec<EpochRecord>;

/// [`train_with_callback`] without a callback.
pub fn train(net: &mut KanNetwork, data: &LabeledDataset, config: &TrainConfig) -> Result<TrainHistory> {
    train_with_callback(net, data, config, |_, _| {})
}

/// Adam for `pretrain_epochs`, then AdamW with reset moments for
/// `finetune_epochs`. Mini-batch gradients are averaged in sample order, so
/// the result is a pure function of `(net, data, config)`. The callback sees
/// the network after each epoch.
pub fn train_with_callback<F>(
    net: &mut KanNetwork,
    data: &LabeledDataset,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainHistory>
where
    F: FnMut(&EpochRecord, &KanNetwork),
{
    if data.is_empty() {
        bail!(Input, "training set is empty");
    }
    if config.batch_size == 0 {
        bail!(Config, "batch size must be at least 1");
    }
    if data.dim() != net.input_dim() {
        bail!(
            Contract,
            "features have {} columns but the network expects {}",
            data.dim(),
            net.input_dim()
        );
    }
    if let Some(&l) = data.labels.iter().find(|&&l| l >= net.output_dim()) {
        bail!(Contract, "label {l} out of range for {} outputs", net.output_dim());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros_like(net);
    let mut history = Vec::with_capacity(config.pretrain_epochs + config.finetune_epochs);
    let phases = [
        (Phase::Pretrain, config.pretrain_epochs),
        (Phase::Finetune, config.finetune_epochs),
    ];

    for (phase, epochs) in phases {
        let mut opt = OptimizerState::new(config.optimizer(phase));
        for _ in 0..epochs {
            if config.shuffle {
                order.shuffle(&mut rng);
            }
            let mut loss_sum = 0.0;
            let mut correct = 0usize;
            for batch in order.chunks(config.batch_size) {
                grads.fill_zero();
                let inv = 1.0 / batch.len() as f64;
                for &i in batch {
                    let trace = net.forward_trace(&data.features[i])?;
                    let (loss, mut upstream) = cross_entropy_loss(trace.output(), data.labels[i])?;
                    loss_sum += loss;
                    if argmax(trace.output()) == data.labels[i] {
                        correct += 1;
                    }
                    upstream.iter_mut().for_each(|g| *g *= inv);
                    net.backward_accumulate(&trace, &upstream, &mut grads)?;
                }
                opt.step_network(net, &grads)?;
            }
            let record = EpochRecord {
                epoch: history.len() + 1,
                phase,
                mean_loss: loss_sum / data.len() as f64,
                train_accuracy: correct as f64 / data.len() as f64,
            };
            on_epoch(&record, net);
            history.push(record);
        }
    }
    Ok(history)
}

/// Mean cross-entropy over a dataset.
pub fn mean_loss(net: &KanNetwork, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        bail!(Input, "dataset is empty");
    }
    let mut total = 0.0;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        total += cross_entropy_loss(&net.forward(x)?, y)?.0;
    }
    Ok(total / data.len() as f64)
}

/// Denominator floor for the relative error. With a 1e-6 step, central
/// differences carry about 1e-10 of rounding noise, so gradients below this
/// magnitude are compared on an absolute scale instead.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    /// `(layer, parameter index)` of the largest error.
    pub worst: (usize, usize),
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR)
}

/// Compares backprop gradients of the cross-entropy loss with central
/// differences over every trainable scalar.
pub fn grad_check(
    net: &KanNetwork,
    sample: &[f64],
    label: usize,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let (_, analytic) = loss_and_gradients(net, sample, label)?;
    grad_check_against(net, sample, label, step, tolerance, &analytic)
}

/// Like [`grad_check`] but with caller-supplied analytic gradients.
pub fn grad_check_against(
    net: &KanNetwork,
    sample: &[f64],
    label: usize,
    step: f64,
    tolerance: f64,
    analytic: &Gradients,
) -> Result<GradCheckReport> {
    if !(step > 0.0) {
        bail!(Config, "finite-difference step must be positive, got {step}");
    }
    if analytic.layers.len() != net.layers().len()
        || analytic
            .layers
            .iter()
            .zip(net.layers())
            .any(|(g, l)| g.len() != l.params().len())
    {
        bail!(Contract, "analytic gradients do not match the network shape");
    }
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        mean_rel_error: 0.0,
        worst: (0, 0),
        tolerance,
    };
    let mut sum = 0.0;
    for l in 0..net.layers().len() {
        for i in 0..net.layers()[l].params().len() {
            let original = probe.layers()[l].params()[i];
            probe.layers_mut()[l].params_mut()[i] = original + step;
            let plus = cross_entropy_loss(&probe.forward(sample)?, label)?.0;
            probe.layers_mut()[l].params_mut()[i] = original - step;
            let minus = cross_entropy_loss(&probe.forward(sample)?, label)?.0;
            probe.layers_mut()[l].params_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic.layers[l][i], numeric);
            sum += err;
            report.checked += 1;
            if err > report.max_rel_error || report.checked == 1 {
                report.max_rel_error = err;
                report.worst = (l, i);
            }
        }
    }
    report.mean_rel_error = sum / report.checked.max(1) as f64;
    Ok(report)
}
