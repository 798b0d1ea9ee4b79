//! Dense matrices, row softmax, seeded sampling and the finite-difference
//! gradient oracle shared by every other module.

mod finite_diff;
mod matrix;
mod rng;
mod sampling;

pub use finite_diff::{finite_diff_grad, max_relative_error};
pub use matrix::{frobenius_sq_dist, gram, softmax_rows, Matrix};
pub(crate) use matrix::softmax_in_place as softmax_rows_in_place;
pub use rng::Rng;
pub use sampling::sample_dirichlet;
