use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::scalar::Scalar;

/// Draws a probability vector from `Dir(alpha · 1_k)` by normalizing `k`
/// independent `Gamma(alpha, 1)` draws.
pub fn sample_dirichlet<T: Scalar>(rng: &mut Rng, alpha: f64, k: usize) -> Result<Vec<T>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dirichlet concentration must be positive and finite, got {alpha}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "dirichlet dimension must be at least 2, got {k}"
        )));
    }
    // Tiny concentrations can underflow a gamma draw to exactly zero.
    let draws: Vec<f64> = (0..k)
        .map(|_| rng.gamma(alpha).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    Ok(draws.into_iter().map(|g| T::of(g / total)).collect())
}
