use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sample-count weighted mean of flat parameter vectors.
///
/// Weights are `n_k / Σ n` over the given reports. Every output entry is
/// clamped to the `[min, max]` of its inputs so rounding cannot leave the hull.
pub fn aggregate_models<T: Scalar>(reports: &[(&[T], usize)]) -> Result<Vec<T>> {
    let (first, _) = reports.first().ok_or_else(|| Error::RoundFailure {
        round: 0,
        reason: "no successful client reports to aggregate".into(),
    })?;
    let len = first.len();
    if let Some((p, _)) = reports.iter().find(|(p, _)| p.len() != len) {
        return Err(Error::shape("aggregate_models", len, p.len()));
    }
    let total: usize = reports.iter().map(|&(_, n)| n).sum();
    if total == 0 {
        return Err(Error::InvalidInput("aggregated reports hold no samples".into()));
    }
    let total = T::of(total as f64);
    let weights: Vec<T> = reports.iter().map(|&(_, n)| T::of(n as f64) / total).collect();
    let mut out = vec![T::zero(); len];
    let mut lo = first.to_vec();
    let mut hi = first.to_vec();
    for ((params, _), &w) in reports.iter().zip(&weights) {
        for (j, &p) in params.iter().enumerate() {
            out[j] += w * p;
            lo[j] = lo[j].min(p);
            hi[j] = hi[j].max(p);
        }
    }
    for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
        *o = o.max(l).min(h);
    }
    Ok(out)
}
