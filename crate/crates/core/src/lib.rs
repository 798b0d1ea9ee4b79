//! Deterministic federated-learning simulator built around a consistency
//! regularizer that aligns the classification layer's class-relation matrix
//! (`softmax(ω ωᵀ)`) with a globally aggregated soft-label matrix.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). Experiments
//! and gradient checks run in `f64`; the `*64` aliases below are the types the
//! harness uses.

pub mod data;
pub mod error;
pub mod feddw;
pub mod fl;
pub mod nn;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = numerics::Matrix<f64>;
pub type Matrix32 = numerics::Matrix<f32>;
pub type Model64 = nn::Model<f64>;
pub type Model32 = nn::Model<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type SlMatrix64 = feddw::SlMatrix<f64>;
pub type ClientReport64 = fl::ClientReport<f64>;
pub type RunOutcome64 = fl::RunOutcome<f64>;
