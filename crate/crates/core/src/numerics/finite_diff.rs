use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Central-difference gradient of a scalar function of a matrix.
pub fn finite_diff_grad<T, F>(mut f: F, at: &Matrix<T>, h: T) -> Result<Matrix<T>>
where
    T: Scalar,
    F: FnMut(&Matrix<T>) -> T,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let mut probe = at.clone();
    let mut grad = Matrix::zeros(at.rows(), at.cols());
    let two_h = h + h;
    for idx in 0..at.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let plus = f(&probe);
        probe.as_mut_slice()[idx] = orig - h;
        let minus = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::OracleFailure(format!(
                "non-finite function value near flat index {idx}"
            )));
        }
        grad.as_mut_slice()[idx] = (plus - minus) / two_h;
    }
    Ok(grad)
}

/// Largest entrywise deviation relative to the larger of the two gradients'
/// max-abs scale: `max|a − b| / max(‖a‖∞, ‖b‖∞)`.
///
/// Returns the raw absolute deviation when both gradients are identically zero.
pub fn max_relative_error<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "gradient lengths differ");
    let scale = a
        .iter()
        .chain(b)
        .fold(T::zero(), |m, x| m.max(x.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
    if scale > T::zero() {
        diff / scale
    } else {
        diff
    }
}
