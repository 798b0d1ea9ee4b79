//! Round protocol: participant sampling, local training, aggregation, metrics.

mod aggregate;
mod client;
mod config;
mod engine;
mod metrics;
mod participants;
mod strategy;

pub use aggregate::aggregate_models;
pub use client::{client_train, evaluate, ClientReport, Evaluation, LocalTraining};
pub use config::RunConfig;
pub use engine::{run, RunOutcome, Simulation};
pub use metrics::{CommMeter, RoundRecord};
pub use participants::sample_participants;
pub use strategy::Strategy;
