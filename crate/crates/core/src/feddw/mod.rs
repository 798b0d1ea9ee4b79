//! Soft-label (SL) matrices, the class-relation (CR) matrix `ω ωᵀ`, and the
//! consistency regularizer `(1/|C|²)·‖Ω − softmax_rows(ω ωᵀ)‖²_F` with its
//! exact gradient, upper bound and linearized convex surrogate.

mod linearized;
mod regularizer;
mod sl;

pub use linearized::{
    linearized_surrogate, linearized_surrogate_grad, reg_grad_linearized, reg_loss_linearized,
    unsoftmaxed_objective,
};
pub use regularizer::{
    cr_matrix, reg_grad, reg_loss, reg_loss_and_grad, softmax_cr, theorem1_bound, RegMode,
    RegularizerConfig,
};
pub use sl::{aggregate_sl, local_sl_matrix, SlAccumulator, SlMatrix, SlMatrixJson};
