//! Datasets (synthetic Gaussian blobs, MNIST IDX files) and Dirichlet
//! non-IID partitioning into client shards.

mod blobs;
mod dataset;
mod idx;
mod partition;
mod spec;

pub use blobs::{blob_means, make_blobs, read_blobs, write_blobs, BLOB_SCALE};
pub use dataset::Dataset;
pub use idx::{load_mnist, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, IdxImages};
pub use partition::{class_counts, dirichlet_partition, Partition};
pub use spec::DatasetSpec;
