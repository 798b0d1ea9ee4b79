use std::time::Instant;

use rayon::prelude::*;

use crate::data::{dirichlet_partition, Dataset, Partition};
use crate::error::{Error, Result};
use crate::feddw::{aggregate_sl, softmax_cr, theorem1_bound, SlMatrix};
use crate::fl::client::{client_train, evaluate, ClientReport, Evaluation, LocalTraining};
use crate::fl::{aggregate_models, sample_participants, CommMeter, RoundRecord, RunConfig, Strategy};
use crate::nn::Model;
use crate::numerics::{frobenius_sq_dist, Rng};
use crate::scalar::Scalar;

/// Everything a finished run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub records: Vec<RoundRecord>,
    /// Final global model (the untouched initial model for local-only runs).
    pub model: Model<T>,
    pub global_sl: SlMatrix<T>,
    /// Per-client models of a local-only run; empty otherwise.
    pub client_models: Vec<Model<T>>,
    pub comm: CommMeter,
    pub partition: Partition,
}

/// Round-by-round driver. Records of completed rounds survive a failing round.
pub struct Simulation<'a, T> {
    config: RunConfig,
    train: &'a Dataset<T>,
    test: &'a Dataset<T>,
    root: Rng,
    partition: Partition,
    global: Model<T>,
    global_sl: SlMatrix<T>,
    client_models: Vec<Model<T>>,
    training: LocalTraining,
    pool: rayon::ThreadPool,
    records: Vec<RoundRecord>,
    comm: CommMeter,
}

impl<'a, T: Scalar> Simulation<'a, T> {
    pub fn new(config: &RunConfig, train: &'a Dataset<T>, test: &'a Dataset<T>) -> Result<Self> {
        config.validate()?;
        let classes = train.class_count();
        if test.class_count() != classes || test.feature_dim() != train.feature_dim() {
            return Err(Error::InvalidInput(
                "train and test sets disagree on classes or feature width".into(),
            ));
        }
        let root = Rng::new(config.seed);
        let partition = if config.clients == 1 {
            Partition::single(train.len(), config.seed)
        } else {
            dirichlet_partition(train, config.clients, config.beta, &mut root.derive("partition", &[]))?
        };
        let global = Model::new(&config.model, train.feature_dim(), classes, &root.derive("model", &[]))?;
        let client_models = match config.strategy {
            Strategy::LocalOnly => vec![global.clone(); config.clients],
            _ => Vec::new(),
        };
        let threads = match config.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {threads} workers: {e}")))?;
        let comm = CommMeter::new(&config.strategy, global.param_count(), classes);
        Ok(Self {
            config: config.clone(),
            train,
            test,
            root,
            partition,
            global,
            global_sl: SlMatrix::uniform(classes),
            client_models,
            training: LocalTraining::from(config),
            pool,
            records: Vec::new(),
            comm,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn global_model(&self) -> &Model<T> {
        &self.global
    }

    pub fn global_sl(&self) -> &SlMatrix<T> {
        &self.global_sl
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn comm(&self) -> &CommMeter {
        &self.comm
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() >= self.config.rounds
    }

    /// Broadcast, parallel local training, aggregation, evaluation.
    pub fn step(&mut self) -> Result<&RoundRecord> {
        if self.is_finished() {
            return Err(Error::InvalidInput("all rounds already ran".into()));
        }
        let round = self.records.len() + 1;
        let clock = Instant::now();
        let participants = sample_participants(
            self.config.clients,
            self.config.participation_rate,
            &mut self.root.derive("participants", &[round as u64]),
        )?;

        let outcomes: Vec<(usize, Result<ClientReport<T>>)> = {
            let this = &*self;
            this.pool.install(|| {
                participants
                    .par_iter()
                    .map(|&id| {
                        let start = match this.config.strategy {
                            Strategy::LocalOnly => &this.client_models[id],
                            _ => &this.global,
                        };
                        let rng = this.root.derive("client", &[round as u64, id as u64]);
                        let report = client_train(
                            id,
                            start,
                            &this.global_sl,
                            this.train,
                            &this.partition.shards[id],
                            &this.config.strategy,
                            &this.training,
                            rng,
                        );
                        (id, report)
                    })
                    .collect()
            })
        };

        let mut reports = Vec::with_capacity(outcomes.len());
        let mut failed = Vec::new();
        for (id, outcome) in outcomes {
            match outcome {
                Ok(r) => reports.push(r),
                Err(Error::TrainingDiverged(why)) => {
                    log::warn!("round {round}: client {id} dropped ({why})");
                    failed.push(id);
                }
                Err(e) => return Err(e),
            }
        }
        if reports.is_empty() {
            return Err(Error::RoundFailure {
                round,
                reason: format!("all {} participants diverged", participants.len()),
            });
        }

        let classes = self.train.class_count();
        let bound: T = theorem1_bound(classes)?;
        if let Some(r) = reports.iter().find(|r| !(r.reg_loss >= T::zero() && r.reg_loss < bound)) {
            return Err(Error::Invariant(format!(
                "round {round}: client {} regularizer {} outside [0, {bound})",
                r.client_id, r.reg_loss
            )));
        }

        let sl_inputs: Vec<_> = reports.iter().map(|r| (&r.sl, r.class_counts.as_slice())).collect();
        let next_sl = aggregate_sl(&sl_inputs, &self.global_sl)?;

        let (eval, sl_cr_distance) = if self.config.strategy.aggregates() {
            let weighted: Vec<(&[T], usize)> = reports.iter().map(|r| (r.params.as_slice(), r.sample_count)).collect();
            let params = aggregate_models(&weighted).map_err(|e| match e {
                Error::RoundFailure { reason, .. } => Error::RoundFailure { round, reason },
                other => other,
            })?;
            self.global.load_flat(&params)?;
            self.global_sl = next_sl;
            let eval = evaluate(&self.global, self.test)?;
            (eval, sl_cr_distance(&self.global_sl, &self.global)?)
        } else {
            for r in &reports {
                self.client_models[r.client_id].load_flat(&r.params)?;
            }
            self.global_sl = next_sl;
            self.evaluate_local_models()?
        };

        let n = reports.len() as f64;
        let mu = self.config.strategy.mu();
        let mean = |f: &dyn Fn(&ClientReport<T>) -> T| reports.iter().map(|r| f(r).to_f64_lossy()).sum::<f64>() / n;
        let (up, down) = self.comm.record_round(participants.len(), reports.len());
        let record = RoundRecord {
            round,
            participants,
            failed,
            accuracy: eval.accuracy,
            loss: eval.loss,
            cla_loss: mean(&|r| r.cla_loss),
            reg_loss: mean(&|r| r.reg_loss),
            train_loss: mean(&|r| r.train_loss(mu)),
            sl_cr_distance,
            millis: if self.config.record_timing {
                clock.elapsed().as_millis() as u64
            } else {
                0
            },
            upload_bytes: up,
            download_bytes: down,
        };
        log::debug!(
            "round {round}: acc {:.4} loss {:.4} train {:.4} dist {:.4}",
            record.accuracy,
            record.loss,
            record.train_loss,
            record.sl_cr_distance
        );
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Mean test metrics and SL/CR distance over every client's own model.
    fn evaluate_local_models(&self) -> Result<(Evaluation, f64)> {
        let per_client: Vec<Result<(Evaluation, f64)>> = self.pool.install(|| {
            self.client_models
                .par_iter()
                .map(|m| Ok((evaluate(m, self.test)?, sl_cr_distance(&self.global_sl, m)?)))
                .collect()
        });
        let n = per_client.len() as f64;
        let (mut acc, mut loss, mut dist) = (0.0, 0.0, 0.0);
        for r in per_client {
            let (e, d) = r?;
            acc += e.accuracy;
            loss += e.loss;
            dist += d;
        }
        Ok((
            Evaluation {
                accuracy: acc / n,
                loss: loss / n,
            },
            dist / n,
        ))
    }

    pub fn finish(self) -> RunOutcome<T> {
        RunOutcome {
            records: self.records,
            model: self.global,
            global_sl: self.global_sl,
            client_models: self.client_models,
            comm: self.comm,
            partition: self.partition,
        }
    }
}

fn sl_cr_distance<T: Scalar>(sl: &SlMatrix<T>, model: &Model<T>) -> Result<f64> {
    let cr = softmax_cr(model.classifier_weights())?;
    Ok(frobenius_sq_dist(sl.omega(), &cr)?.to_f64_lossy().sqrt())
}

/// Runs every round of `config`. Use [`Simulation`] to observe rounds as they
/// finish or to keep the records of a run that fails part way.
pub fn run<T: Scalar>(config: &RunConfig, train: &Dataset<T>, test: &Dataset<T>) -> Result<RunOutcome<T>> {
    let mut sim = Simulation::new(config, train, test)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.finish())
}
