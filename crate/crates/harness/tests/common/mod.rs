#![allow(dead_code)]

use std::path::PathBuf;

use feddw_core::data::DatasetSpec;
use feddw_core::feddw::RegularizerConfig;
use feddw_core::fl::{RunConfig, Strategy};
use feddw_core::nn::ModelSpec;

pub fn blobs(classes: usize) -> DatasetSpec {
    DatasetSpec::Blobs {
        classes,
        per_class: 60,
        dim: 16,
        spread: 1.0,
        test_per_class: 20,
    }
}

/// Small blob federation; the classifier bias is off for every strategy so
/// runs of different strategies share one architecture.
pub fn blob_config(strategy: Strategy, seed: u64) -> RunConfig {
    RunConfig {
        strategy,
        clients: 5,
        rounds: 5,
        local_epochs: 2,
        batch_size: 32,
        participation_rate: 1.0,
        beta: 0.5,
        learning_rate: 1e-3,
        seed,
        dataset: blobs(4),
        model: ModelSpec {
            feature_hidden: vec![32],
            mapping_width: 16,
            classifier_bias: false,
        },
        workers: 1,
        record_timing: false,
    }
}

pub fn feddw(mu: f64) -> Strategy {
    Strategy::FedDw(RegularizerConfig::exact(mu))
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn mnist_spec() -> DatasetSpec {
    let root = repo_root().join("data/mnist-5k");
    DatasetSpec::Mnist {
        images: root.join("images-idx3-ubyte"),
        labels: root.join("labels-idx1-ubyte"),
        test_images: None,
        test_labels: None,
        subset: None,
        test_fraction: 0.2,
    }
}
