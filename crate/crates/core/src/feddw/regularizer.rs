use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feddw::SlMatrix;
use crate::numerics::{gram, softmax_rows, Matrix};
use crate::scalar::Scalar;

/// How the regularizer enters local training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegMode {
    /// Exact `(1/|C|²)·‖Ω − softmax_rows(ω ωᵀ)‖²_F`.
    #[default]
    Exact,
    /// Convex surrogate around a reference `A₀` refreshed every
    /// `linearization_refresh` optimizer steps.
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerConfig {
    pub mu: f64,
    #[serde(default)]
    pub mode: RegMode,
    #[serde(default = "default_refresh")]
    pub linearization_refresh: usize,
}

fn default_refresh() -> usize {
    50
}

impl RegularizerConfig {
    pub fn exact(mu: f64) -> Self {
        Self {
            mu,
            mode: RegMode::Exact,
            linearization_refresh: default_refresh(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidInput(format!("mu must be ≥ 0, got {}", self.mu)));
        }
        if self.linearization_refresh == 0 {
            return Err(Error::InvalidInput("linearization_refresh must be positive".into()));
        }
        Ok(())
    }
}

/// Class-relation matrix `ω ωᵀ`.
pub fn cr_matrix<T: Scalar>(classifier_weights: &Matrix<T>) -> Matrix<T> {
    gram(classifier_weights)
}

/// `softmax_rows(ω ωᵀ)`.
pub fn softmax_cr<T: Scalar>(classifier_weights: &Matrix<T>) -> Result<Matrix<T>> {
    softmax_rows(&cr_matrix(classifier_weights))
}

/// Upper bound `2/|C|` on the regularizer.
pub fn theorem1_bound<T: Scalar>(class_count: usize) -> Result<T> {
    if class_count < 2 {
        return Err(Error::InvalidInput(format!(
            "bound needs at least 2 classes, got {class_count}"
        )));
    }
    Ok(T::of(2.0) / T::of(class_count as f64))
}

fn check_shapes<T: Scalar>(sl: &SlMatrix<T>, w: &Matrix<T>) -> Result<()> {
    if w.rows() != sl.classes() {
        return Err(Error::shape("regularizer classes", sl.classes(), w.rows()));
    }
    Ok(())
}

/// `(1/|C|²)·Σ_{covered i} Σ_j (Ω_ij − softmax_rows(ω ωᵀ)_ij)²`.
pub fn reg_loss<T: Scalar>(global_sl: &SlMatrix<T>, classifier_weights: &Matrix<T>) -> Result<T> {
    check_shapes(global_sl, classifier_weights)?;
    let s = softmax_cr(classifier_weights)?;
    Ok(loss_from_softmax(global_sl, &s))
}

fn loss_from_softmax<T: Scalar>(sl: &SlMatrix<T>, s: &Matrix<T>) -> T {
    let c = sl.classes();
    let mut total = T::zero();
    for i in (0..c).filter(|&i| sl.covered()[i]) {
        for (&o, &a) in sl.omega().row(i).iter().zip(s.row(i)) {
            total += (o - a) * (o - a);
        }
    }
    let loss = total / T::of((c * c) as f64);
    // Strict in exact arithmetic; a saturated f64 softmax row can land on the bound itself.
    debug_assert!(loss.to_f64_lossy() <= 2.0 / c as f64, "regularizer exceeded 2/|C|");
    loss
}

/// Exact gradient of [`reg_loss`] with respect to ω.
pub fn reg_grad<T: Scalar>(global_sl: &SlMatrix<T>, classifier_weights: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(reg_loss_and_grad(global_sl, classifier_weights)?.1)
}

/// [`reg_loss`] and [`reg_grad`] sharing one softmax evaluation.
pub fn reg_loss_and_grad<T: Scalar>(
    global_sl: &SlMatrix<T>,
    classifier_weights: &Matrix<T>,
) -> Result<(T, Matrix<T>)> {
    check_shapes(global_sl, classifier_weights)?;
    let s = softmax_cr(classifier_weights)?;
    let loss = loss_from_softmax(global_sl, &s);
    let c = global_sl.classes();
    let scale = T::of(-2.0) / T::of((c * c) as f64);
    let mut d_s = Matrix::zeros(c, c);
    for i in (0..c).filter(|&i| global_sl.covered()[i]) {
        for j in 0..c {
            d_s[(i, j)] = scale * (global_sl.omega()[(i, j)] - s[(i, j)]);
        }
    }
    Ok((loss, backprop_softmax_gram(&s, &d_s, classifier_weights)))
}

/// Pulls `∂L/∂S`, with `S = softmax_rows(ω ωᵀ)`, back to `∂L/∂ω`.
pub(crate) fn backprop_softmax_gram<T: Scalar>(s: &Matrix<T>, d_s: &Matrix<T>, w: &Matrix<T>) -> Matrix<T> {
    let c = s.rows();
    // Row-wise softmax Jacobian: dG_ij = S_ij (dS_ij − Σ_k dS_ik S_ik).
    let mut d_g = Matrix::zeros(c, c);
    for i in 0..c {
        let dot: T = s.row(i).iter().zip(d_s.row(i)).map(|(&a, &b)| a * b).sum();
        for j in 0..c {
            d_g[(i, j)] = s[(i, j)] * (d_s[(i, j)] - dot);
        }
    }
    // G = ω ωᵀ  ⇒  dω = (dG + dGᵀ) ω.
    let sym = d_g.add(&d_g.transpose()).expect("square");
    sym.matmul(w).expect("class dimensions agree")
}
