use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

fn check_labels<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<()> {
    if labels.len() != logits.rows() {
        return Err(Error::shape("cross_entropy labels", logits.rows(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {} classes",
            logits.cols()
        )));
    }
    Ok(())
}

/// Per-row `logsumexp(z) − z_y`, i.e. `−log softmax(z)_y`.
fn row_nll<T: Scalar>(row: &[T], y: usize) -> T {
    let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let lse = row.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
    lse - row[y]
}

/// Mean negative log-likelihood of the true class, computed in log space.
pub fn cross_entropy_loss<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<T> {
    check_labels(logits, labels)?;
    let total: T = logits
        .iter_rows()
        .zip(labels)
        .map(|(row, &y)| row_nll(row, y))
        .sum();
    Ok(total / T::of(labels.len() as f64))
}

/// Loss together with its gradient w.r.t. the logits: `(softmax − onehot) / B`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>)> {
    check_labels(logits, labels)?;
    let n = T::of(labels.len() as f64);
    let mut grad = logits.clone();
    let mut total = T::zero();
    for (row, &y) in grad.as_mut_slice().chunks_exact_mut(logits.cols()).zip(labels) {
        total += row_nll(row, y);
        crate::numerics::softmax_rows_in_place(row);
        row[y] -= T::one();
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok((total / n, grad))
}
