use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{load_mnist, make_blobs, Dataset};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::scalar::Scalar;

/// Where the train and test sets come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Train and test sets share the class means; only the noise differs.
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        test_per_class: usize,
    },
    /// MNIST IDX files. Without explicit test files a class-stratified
    /// `test_fraction` of the (optionally subsampled) images is held out.
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_images: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_labels: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subset: Option<usize>,
        test_fraction: f64,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Blobs {
            classes: 10,
            per_class: 200,
            dim: 32,
            spread: 1.0,
            test_per_class: 50,
        }
    }
}

impl DatasetSpec {
    /// Builds `(train, test)` deterministically from `seed`.
    pub fn materialize<T: Scalar>(&self, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
        let root = Rng::new(seed);
        match self {
            DatasetSpec::Blobs {
                classes,
                per_class,
                dim,
                spread,
                test_per_class,
            } => {
                let train = make_blobs(&mut root.derive("blobs-train", &[]), *classes, *per_class, *dim, *spread)?;
                let test = make_blobs(&mut root.derive("blobs-test", &[]), *classes, *test_per_class, *dim, *spread)?;
                Ok((train, test))
            }
            DatasetSpec::Mnist {
                images,
                labels,
                test_images,
                test_labels,
                subset,
                test_fraction,
            } => {
                let mut pool: Dataset<T> = load_mnist(images, labels)?;
                if let Some(size) = subset {
                    pool = pool.stratified_subset(*size, &mut root.derive("mnist-subset", &[]))?;
                }
                match (test_images, test_labels) {
                    (Some(ti), Some(tl)) => Ok((pool, load_mnist(ti, tl)?)),
                    (None, None) => pool.stratified_split(*test_fraction, &mut root.derive("mnist-holdout", &[])),
                    _ => Err(Error::InvalidInput(
                        "test_images and test_labels must be given together".into(),
                    )),
                }
            }
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            DatasetSpec::Blobs { classes, .. } => *classes,
            DatasetSpec::Mnist { .. } => 10,
        }
    }
}
