use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{sample_dirichlet, Rng};
use crate::scalar::Scalar;

/// Disjoint, exhaustive assignment of sample indices to clients.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub shards: Vec<Vec<usize>>,
    pub beta: f64,
    pub seed: u64,
}

impl Partition {
    /// Everything on one client.
    pub fn single(len: usize, seed: u64) -> Self {
        Self {
            shards: vec![(0..len).collect()],
            beta: f64::INFINITY,
            seed,
        }
    }

    pub fn clients(&self) -> usize {
        self.shards.len()
    }
}

/// Splits each class among `clients` by a fresh `Dir(beta · 1)` proportion
/// vector, cutting the shuffled class indices at the rounded cumulative shares.
/// Any shard left empty receives one sample from the currently largest shard.
pub fn dirichlet_partition<T: Scalar>(
    dataset: &Dataset<T>,
    clients: usize,
    beta: f64,
    rng: &mut Rng,
) -> Result<Partition> {
    if clients < 2 {
        return Err(Error::InvalidInput(format!(
            "partition needs at least 2 clients, got {clients}"
        )));
    }
    if dataset.len() < clients {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot cover {clients} clients",
            dataset.len()
        )));
    }
    let seed = rng.seed();
    let mut shards = vec![Vec::new(); clients];
    for mut group in dataset.indices_by_class() {
        if group.is_empty() {
            continue;
        }
        rng.shuffle(&mut group);
        let shares: Vec<f64> = sample_dirichlet(rng, beta, clients)?;
        let n = group.len() as f64;
        let mut start = 0;
        let mut cumulative = 0.0;
        for (k, share) in shares.iter().enumerate() {
            cumulative += share;
            let end = if k + 1 == clients {
                group.len()
            } else {
                ((cumulative * n).round() as usize).clamp(start, group.len())
            };
            shards[k].extend_from_slice(&group[start..end]);
            start = end;
        }
    }
    while let Some(empty) = shards.iter().position(Vec::is_empty) {
        let donor = (0..clients)
            .max_by(|&a, &b| shards[a].len().cmp(&shards[b].len()).then(b.cmp(&a)))
            .expect("at least two clients");
        let moved = shards[donor].pop().expect("donor holds at least two samples");
        shards[empty].push(moved);
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(Partition { shards, beta, seed })
}

/// Per-class sample counts of a shard.
pub fn class_counts<T: Scalar>(dataset: &Dataset<T>, shard: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; dataset.class_count()];
    for &i in shard {
        counts[dataset.labels()[i]] += 1;
    }
    counts
}
