use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Sample};
use super::model::{batch_gradient, init_params, loss_and_accuracy, Model};
use crate::builder::{grow, prune_loop};
use crate::circuit::GateKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Rng};
use crate::sim::Statevector;
use crate::subcircuit::Library;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Initial angles are drawn from `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Epochs without a `growth_min_delta` gain in validation accuracy before
    /// the ansatz grows; also the window a growth step has to pay off.
    pub growth_patience: usize,
    pub growth_min_delta: f64,
    pub growth_cap: usize,
    pub prune_epsilon: f64,
    /// Largest tolerated validation-accuracy drop below the pre-pruning level.
    pub prune_max_drop: f64,
    pub prune_finetune_epochs: usize,
    /// Validation samples compared before and after each growth step.
    pub continuity_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            init_scale: PI / 8.0,
            growth_patience: 3,
            growth_min_delta: 0.005,
            growth_cap: 4,
            prune_epsilon: 0.1,
            prune_max_drop: 0.02,
            prune_finetune_epochs: 0,
            continuity_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.growth_min_delta >= 0.0) || !(self.prune_max_drop >= 0.0) {
            return Err(Error::Config("learning rate, growth delta and prune drop must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Initial angles for an ansatz with `n` parameters.
    pub fn initial_params(&self, n: usize) -> Vec<f64> {
        init_params(n, self.init_scale, derive_seed(self.seed, "init"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
    pub gates: usize,
    pub depth: usize,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub epoch: usize,
    pub entry_id: usize,
    pub qubits: Vec<usize>,
    pub new_params: usize,
    /// Largest change of any class probability over the continuity batch.
    pub max_output_change: f64,
    pub validation_loss_before: f64,
    pub validation_loss_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub epoch: usize,
    pub kind: GateKind,
    pub qubit: usize,
    pub value: f64,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub growth: Vec<GrowthRecord>,
    pub prune: Vec<PruneRecord>,
    pub final_validation_accuracy: f64,
    /// `None` when the test split is empty.
    pub final_test_accuracy: Option<f64>,
    /// Epoch at which the loss stopped being finite; training halts there.
    pub diverged_at: Option<usize>,
}

pub const EPOCH_CSV_HEADER: &str = "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy,gates,depth,params";

impl TrainReport {
    /// Per-epoch metrics as CSV with [`EPOCH_CSV_HEADER`].
    pub fn epochs_csv(&self) -> String {
        let mut out = format!("{EPOCH_CSV_HEADER}\n");
        for e in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.epoch, e.train_loss, e.train_accuracy, e.validation_loss, e.validation_accuracy, e.gates, e.depth, e.params
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub report: TrainReport,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn extend(&mut self, extra: usize) {
        self.m.resize(self.m.len() + extra, 0.0);
        self.v.resize(self.v.len() + extra, 0.0);
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            params[i] -= cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.adam_epsilon);
        }
    }
}

/// A split with its encoder states computed once.
struct Encoded {
    states: Vec<Statevector>,
    labels: Vec<usize>,
}

impl Encoded {
    fn new(model: &Model, samples: &[Sample]) -> Result<Self> {
        Ok(Encoded {
            states: model.encode_all(samples)?,
            labels: samples.iter().map(|s| s.label).collect(),
        })
    }
}

struct Prepared {
    train: Encoded,
    validation: Encoded,
    test: Encoded,
}

impl Prepared {
    fn new(model: &Model, dataset: &Dataset) -> Result<Self> {
        if dataset.train.is_empty() {
            return Err(Error::Dataset("training split is empty".into()));
        }
        if dataset.validation.is_empty() {
            return Err(Error::Dataset("validation split is empty".into()));
        }
        if dataset.num_features != model.encoder.num_features {
            return Err(Error::WidthMismatch {
                expected: model.encoder.num_features,
                got: dataset.num_features,
            });
        }
        if dataset.num_classes != model.readout.num_classes() {
            return Err(Error::Dataset(format!(
                "dataset has {} classes, model reads out {}",
                dataset.num_classes,
                model.readout.num_classes()
            )));
        }
        Ok(Prepared {
            train: Encoded::new(model, &dataset.train)?,
            validation: Encoded::new(model, &dataset.validation)?,
            test: Encoded::new(model, &dataset.test)?,
        })
    }
}

struct Growth<'a> {
    library: &'a Library,
    rng: Rng,
}

/// Mini-batch Adam on the cross-entropy loss for `config.epochs` epochs,
/// starting from `model.params`.
pub fn train(model: &Model, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    run(model, dataset, config, None)
}

/// As [`train`], but grows the ansatz by one appendable library entry (new
/// angles at zero) whenever validation accuracy has gained less than
/// `growth_min_delta` for `growth_patience` epochs. Growing stops at
/// `growth_cap` steps or when a step fails to raise the best validation
/// accuracy within `growth_patience` epochs.
pub fn train_with_growth(model: &Model, library: &Library, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.growth_cap > 0 && library.appendable().next().is_none() {
        return Err(Error::NoAppendable);
    }
    run(model, dataset, config, Some(library))
}

/// Trains, then prunes small-angle rotations one at a time.
pub fn train_with_pruning(model: &Model, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let trained = train(model, dataset, config)?;
    prune_trained(trained, dataset, config)
}

fn run(model: &Model, dataset: &Dataset, config: &TrainConfig, library: Option<&Library>) -> Result<TrainOutcome> {
    config.validate()?;
    let data = Prepared::new(model, dataset)?;
    let mut model = model.clone();
    let mut report = TrainReport::default();
    let mut growth = library.map(|library| Growth {
        library,
        rng: stream_rng(derive_seed(config.seed, "grow"), 0),
    });
    fit(&mut model, &data, config, config.epochs, growth.as_mut(), &mut report)?;
    finish(&model, &data, &mut report)?;
    Ok(TrainOutcome { model, report })
}

fn finish(model: &Model, data: &Prepared, report: &mut TrainReport) -> Result<()> {
    report.final_validation_accuracy = loss_and_accuracy(model, &data.validation.states, &data.validation.labels, &model.params)?.1;
    report.final_test_accuracy = if data.test.states.is_empty() {
        None
    } else {
        Some(loss_and_accuracy(model, &data.test.states, &data.test.labels, &model.params)?.1)
    };
    Ok(())
}

fn fit(
    model: &mut Model,
    data: &Prepared,
    config: &TrainConfig,
    epochs: usize,
    mut growth: Option<&mut Growth>,
    report: &mut TrainReport,
) -> Result<()> {
    let mut shuffle_rng = stream_rng(derive_seed(config.seed, "shuffle"), report.epochs.len() as u64);
    let mut adam = Adam::new(model.params.len());
    let mut order: Vec<usize> = (0..data.train.states.len()).collect();
    let first_epoch = report.epochs.len();

    let mut best_val = f64::NEG_INFINITY;
    let mut stale = 0usize;
    let mut grows = 0usize;
    let mut growing = growth.is_some() && config.growth_cap > 0;
    // (epoch of the last growth step, best validation accuracy before it)
    let mut pending: Option<(usize, f64)> = None;

    for epoch in first_epoch..first_epoch + epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            let states: Vec<&Statevector> = chunk.iter().map(|&i| &data.train.states[i]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| data.train.labels[i]).collect();
            let (loss, grad) = batch_gradient(model, &states, &labels, &model.params)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                report.diverged_at = Some(epoch);
                return Ok(());
            }
            adam.step(&mut model.params, &grad, config);
        }
        let (train_loss, train_accuracy) = loss_and_accuracy(model, &data.train.states, &data.train.labels, &model.params)?;
        let (validation_loss, validation_accuracy) =
            loss_and_accuracy(model, &data.validation.states, &data.validation.labels, &model.params)?;
        if !train_loss.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            report.diverged_at = Some(epoch);
            return Ok(());
        }
        let c = model.circuit();
        report.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            validation_loss,
            validation_accuracy,
            gates: c.len(),
            depth: c.depth(),
            params: c.num_params(),
        });

        if validation_accuracy > best_val + config.growth_min_delta {
            best_val = validation_accuracy;
            stale = 0;
        } else {
            stale += 1;
        }
        best_val = best_val.max(validation_accuracy);

        if let Some((at, before)) = pending {
            if best_val > before {
                pending = None;
            } else if epoch - at >= config.growth_patience {
                growing = false;
                pending = None;
            }
        }
        let Some(g) = growth.as_deref_mut() else { continue };
        let last_epoch = epoch + 1 == first_epoch + epochs;
        if growing && pending.is_none() && stale >= config.growth_patience && grows < config.growth_cap && !last_epoch {
            let record = grow_step(model, data, config, g, epoch, validation_loss)?;
            adam.extend(record.new_params);
            report.growth.push(record);
            grows += 1;
            stale = 0;
            pending = Some((epoch, best_val));
        }
    }
    Ok(())
}

fn grow_step(
    model: &mut Model,
    data: &Prepared,
    config: &TrainConfig,
    growth: &mut Growth,
    epoch: usize,
    validation_loss_before: f64,
) -> Result<GrowthRecord> {
    let probe = config.continuity_batch.min(data.validation.states.len());
    let before: Vec<Vec<f64>> = data.validation.states[..probe]
        .iter()
        .map(|s| model.forward_encoded(s, &model.params))
        .collect::<Result<_>>()?;

    let (ansatz, event) = grow(&model.ansatz, growth.library, &mut growth.rng)?;
    model.ansatz = ansatz;
    model.params.resize(model.params.len() + event.new_params, 0.0);

    let mut max_change: f64 = 0.0;
    for (s, b) in data.validation.states[..probe].iter().zip(&before) {
        let a = model.forward_encoded(s, &model.params)?;
        for (x, y) in a.iter().zip(b) {
            max_change = max_change.max((x - y).abs());
        }
    }
    let validation_loss_after = loss_and_accuracy(model, &data.validation.states, &data.validation.labels, &model.params)?.0;
    Ok(GrowthRecord {
        epoch,
        entry_id: event.entry_id,
        qubits: event.qubits,
        new_params: event.new_params,
        max_output_change: max_change,
        validation_loss_before,
        validation_loss_after,
    })
}

/// Prunes a trained model one rotation at a time (smallest angle below
/// `prune_epsilon` first), optionally fine-tuning after each removal, and
/// stops at the first removal that costs more than `prune_max_drop`
/// validation accuracy relative to the unpruned model. That removal is
/// reverted. Events are appended to the report.
pub fn prune_trained(outcome: TrainOutcome, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let TrainOutcome { model, mut report } = outcome;
    let data = Prepared::new(&model, dataset)?;
    let epoch = report.epochs.last().map_or(0, |e| e.epoch);
    let base = model.clone();
    let looped = prune_loop(&model.ansatz, &model.params, config.prune_epsilon, config.prune_max_drop, |ansatz, params| {
        let mut m = Model {
            ansatz: ansatz.clone(),
            params: params.clone(),
            ..base.clone()
        };
        if config.prune_finetune_epochs > 0 && ansatz != &base.ansatz {
            let mut scratch = TrainReport {
                epochs: report.epochs.clone(),
                ..TrainReport::default()
            };
            fit(&mut m, &data, config, config.prune_finetune_epochs, None, &mut scratch)?;
            *params = m.params.clone();
        }
        Ok(loss_and_accuracy(&m, &data.validation.states, &data.validation.labels, &m.params)?.1)
    })?;
    let mut before = looped.baseline;
    for step in &looped.steps {
        report.prune.push(PruneRecord {
            epoch,
            kind: step.removed.kind,
            qubit: step.removed.qubit,
            value: step.removed.value,
            accuracy_before: before,
            accuracy_after: step.accuracy,
            kept: step.kept,
        });
        if step.kept {
            before = step.accuracy;
        }
    }
    let model = Model {
        ansatz: looped.ansatz,
        params: looped.params,
        ..model
    };
    finish(&model, &data, &mut report)?;
    Ok(TrainOutcome { model, report })
}
