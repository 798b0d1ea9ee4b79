use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Uniform sample without replacement of `max(1, round(rate · clients))`
/// client ids, returned in ascending order.
pub fn sample_participants(clients: usize, rate: f64, rng: &mut Rng) -> Result<Vec<usize>> {
    if clients == 0 {
        return Err(Error::InvalidInput("no clients to sample".into()));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "participation rate must lie in (0, 1], got {rate}"
        )));
    }
    let k = ((rate * clients as f64).round() as usize).clamp(1, clients);
    let mut ids = if k == clients {
        (0..clients).collect()
    } else {
        rng.sample_indices(clients, k)
    };
    ids.sort_unstable();
    Ok(ids)
}
