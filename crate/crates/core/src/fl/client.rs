use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feddw::{reg_grad, reg_grad_linearized, reg_loss, softmax_cr, RegMode, SlAccumulator, SlMatrix};
use crate::fl::{RunConfig, Strategy};
use crate::nn::{adam_step, backward, cross_entropy_loss, forward, AdamState, Model};
use crate::numerics::{softmax_rows, Matrix, Rng};
use crate::scalar::Scalar;

const EVAL_CHUNK: usize = 512;

/// Optimizer settings for one round of local training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalTraining {
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl From<&RunConfig> for LocalTraining {
    fn from(cfg: &RunConfig) -> Self {
        Self {
            local_epochs: cfg.local_epochs,
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
        }
    }
}

/// What a client uploads after local training, plus loss telemetry.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientReport<T> {
    pub client_id: usize,
    /// Post-training parameters in [`Model::to_flat`] order.
    pub params: Vec<T>,
    /// Local SL matrix of the post-training model.
    pub sl: SlMatrix<T>,
    pub class_counts: Vec<usize>,
    pub sample_count: usize,
    /// Mean cross-entropy of the post-training model over the shard.
    pub cla_loss: T,
    /// Unweighted regularizer against the broadcast global SL matrix.
    pub reg_loss: T,
    pub steps: u64,
}

impl<T: Scalar> ClientReport<T> {
    /// `cla + μ·reg`.
    pub fn train_loss(&self, mu: f64) -> T {
        self.cla_loss + T::of(mu) * self.reg_loss
    }
}

/// Accuracy and mean cross-entropy over a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

pub fn evaluate<T: Scalar>(model: &Model<T>, data: &Dataset<T>) -> Result<Evaluation> {
    let all: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0usize;
    let mut loss = 0.0;
    for chunk in all.chunks(EVAL_CHUNK) {
        let (x, y) = data.batch(chunk)?;
        let logits = model.logits(&x)?;
        loss += cross_entropy_loss(&logits, &y)?.to_f64_lossy() * chunk.len() as f64;
        correct += logits
            .iter_rows()
            .zip(&y)
            .filter(|(row, &label)| argmax(row) == label)
            .count();
    }
    let n = data.len().max(1) as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: loss / n,
    })
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Regularizer gradient on ω for one step, or `None` when it is inactive.
struct RegInjector<'a, T> {
    global_sl: &'a SlMatrix<T>,
    mu: T,
    mode: RegMode,
    refresh: u64,
    reference: Option<Matrix<T>>,
}

impl<T: Scalar> RegInjector<'_, T> {
    fn grad(&mut self, weights: &Matrix<T>, step: u64) -> Result<Matrix<T>> {
        match self.mode {
            RegMode::Exact => Ok(reg_grad(self.global_sl, weights)?.scale(self.mu)),
            RegMode::Linearized => {
                if self.reference.is_none() || step % self.refresh == 0 {
                    self.reference = Some(softmax_cr(weights)?);
                }
                let reference = self.reference.as_ref().expect("set above");
                let c = T::of(self.global_sl.classes() as f64);
                let g = reg_grad_linearized(self.global_sl, weights, reference)?;
                Ok(g.scale(self.mu / (c * c)))
            }
        }
    }
}

/// Runs `local_epochs` of mini-batch Adam on `shard`, starting from `start`.
///
/// Adam state is fresh for every call. FedDW adds `μ·∂L_reg/∂ω` to the
/// classification-layer gradient once per step; FedProx adds
/// `prox_mu·(θ − θ_start)` to every parameter gradient. Both are skipped
/// entirely when their weight is zero, so those cases reproduce FedAvg bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn client_train<T: Scalar>(
    client_id: usize,
    start: &Model<T>,
    global_sl: &SlMatrix<T>,
    data: &Dataset<T>,
    shard: &[usize],
    strategy: &Strategy,
    training: &LocalTraining,
    mut rng: Rng,
) -> Result<ClientReport<T>> {
    if shard.is_empty() {
        return Err(Error::InvalidInput(format!("client {client_id} has an empty shard")));
    }
    if training.batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be positive".into()));
    }
    if strategy.is_feddw() && start.classifier().has_bias() {
        return Err(Error::InvalidInput(
            "feddw requires a bias-free classification layer".into(),
        ));
    }
    if global_sl.classes() != start.class_count() {
        return Err(Error::shape("client global SL", start.class_count(), global_sl.classes()));
    }

    let mut injector = match strategy {
        Strategy::FedDw(reg) if reg.mu > 0.0 => Some(RegInjector {
            global_sl,
            mu: T::of(reg.mu),
            mode: reg.mode,
            refresh: reg.linearization_refresh.max(1) as u64,
            reference: None,
        }),
        _ => None,
    };
    let prox_mu = match strategy {
        Strategy::FedProx { prox_mu } if *prox_mu > 0.0 => Some(T::of(*prox_mu)),
        _ => None,
    };

    let mut model = start.clone();
    let mut adam = AdamState::new(&model, T::of(training.learning_rate));
    let mut order = shard.to_vec();
    for _ in 0..training.local_epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(training.batch_size) {
            let (x, y) = data.batch(batch)?;
            let (logits, cache) = forward(&model, &x)?;
            let extra = match injector.as_mut() {
                Some(inj) => Some(inj.grad(model.classifier_weights(), adam.step())?),
                None => None,
            };
            let mut grads = backward(&model, &cache, &logits, &y, extra.as_ref())?;
            if let Some(s) = prox_mu {
                grads.add_proximal(s, &model, start)?;
            }
            adam_step(&mut model, &mut adam, &grads)?;
        }
    }
    if !model.is_finite() {
        return Err(Error::TrainingDiverged(format!("client {client_id}: non-finite parameters")));
    }

    let classes = model.class_count();
    let mut acc = SlAccumulator::new(classes);
    let mut ce = T::zero();
    for chunk in shard.chunks(EVAL_CHUNK) {
        let (x, y) = data.batch(chunk)?;
        let logits = model.logits(&x)?;
        if !logits.is_finite() {
            return Err(Error::TrainingDiverged(format!("client {client_id}: non-finite logits")));
        }
        ce += cross_entropy_loss(&logits, &y)? * T::of(chunk.len() as f64);
        acc.add(&softmax_rows(&logits)?, &y)?;
    }
    let cla_loss = ce / T::of(shard.len() as f64);
    if !cla_loss.is_finite() {
        return Err(Error::TrainingDiverged(format!("client {client_id}: non-finite loss")));
    }
    let (sl, class_counts) = acc.finish();
    let reg_loss = reg_loss(global_sl, model.classifier_weights())?;
    Ok(ClientReport {
        client_id,
        params: model.to_flat(),
        sl,
        class_counts,
        sample_count: shard.len(),
        cla_loss,
        reg_loss,
        steps: adam.step(),
    })
}
