//! Convex surrogate of the un-softmaxed objective `‖Ω − AᵀA‖²_F`.
//!
//! Expanding `AᵀA` to first order around a reference `A₀` gives
//! `‖Ω − A₀ᵀA − AᵀA₀ + A₀ᵀA₀‖²_F`, a squared norm of an affine map of `A`
//! and therefore convex. During training `A = softmax_rows(ω ωᵀ)` and the
//! reference is a snapshot of `A` taken at intervals.

use crate::error::{Error, Result};
use crate::feddw::regularizer::{backprop_softmax_gram, softmax_cr};
use crate::feddw::SlMatrix;
use crate::numerics::{frobenius_sq_dist, Matrix};
use crate::scalar::Scalar;

fn square_check<T: Scalar>(op: &'static str, omega: &Matrix<T>, m: &Matrix<T>) -> Result<()> {
    if m.shape() != omega.shape() {
        return Err(Error::shape(op, format!("{:?}", omega.shape()), format!("{:?}", m.shape())));
    }
    Ok(())
}

/// `‖Ω − AᵀA‖²_F`.
pub fn unsoftmaxed_objective<T: Scalar>(omega: &Matrix<T>, a: &Matrix<T>) -> Result<T> {
    square_check("unsoftmaxed objective", omega, a)?;
    frobenius_sq_dist(omega, &a.t_matmul(a)?)
}

fn residual<T: Scalar>(omega: &Matrix<T>, a: &Matrix<T>, a0: &Matrix<T>) -> Result<Matrix<T>> {
    square_check("linearized surrogate", omega, a)?;
    square_check("linearized surrogate reference", omega, a0)?;
    let cross = a0.t_matmul(a)?;
    omega
        .sub(&cross)?
        .sub(&cross.transpose())?
        .add(&a0.t_matmul(a0)?)
}

/// `‖Ω − A₀ᵀA − AᵀA₀ + A₀ᵀA₀‖²_F`.
pub fn linearized_surrogate<T: Scalar>(omega: &Matrix<T>, a: &Matrix<T>, a0: &Matrix<T>) -> Result<T> {
    let m = residual(omega, a, a0)?;
    Ok(m.as_slice().iter().map(|&v| v * v).sum())
}

/// Gradient of [`linearized_surrogate`] with respect to `A`: `−2A₀(M + Mᵀ)`.
pub fn linearized_surrogate_grad<T: Scalar>(
    omega: &Matrix<T>,
    a: &Matrix<T>,
    a0: &Matrix<T>,
) -> Result<Matrix<T>> {
    let m = residual(omega, a, a0)?;
    Ok(a0.matmul(&m.add(&m.transpose())?)?.scale(T::of(-2.0)))
}

fn check_weights<T: Scalar>(sl: &SlMatrix<T>, w: &Matrix<T>) -> Result<()> {
    if w.rows() != sl.classes() {
        return Err(Error::shape("linearized classes", sl.classes(), w.rows()));
    }
    Ok(())
}

/// Surrogate evaluated at `A = softmax_rows(ω ωᵀ)` around `reference`.
pub fn reg_loss_linearized<T: Scalar>(
    global_sl: &SlMatrix<T>,
    classifier_weights: &Matrix<T>,
    reference: &Matrix<T>,
) -> Result<T> {
    check_weights(global_sl, classifier_weights)?;
    let a = softmax_cr(classifier_weights)?;
    linearized_surrogate(global_sl.omega(), &a, reference)
}

/// Gradient of [`reg_loss_linearized`] with respect to ω.
pub fn reg_grad_linearized<T: Scalar>(
    global_sl: &SlMatrix<T>,
    classifier_weights: &Matrix<T>,
    reference: &Matrix<T>,
) -> Result<Matrix<T>> {
    check_weights(global_sl, classifier_weights)?;
    let a = softmax_cr(classifier_weights)?;
    let d_a = linearized_surrogate_grad(global_sl.omega(), &a, reference)?;
    Ok(backprop_softmax_gram(&a, &d_a, classifier_weights))
}
