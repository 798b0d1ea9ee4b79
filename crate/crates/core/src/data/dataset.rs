use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

/// Labelled feature matrix, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    class_count: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape("Dataset labels", features.rows(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Features and labels of the given sample indices, in that order.
    pub fn batch(&self, indices: &[usize]) -> Result<(Matrix<T>, Vec<usize>)> {
        let x = self.features.select_rows(indices)?;
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        Ok((x, y))
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let (features, labels) = self.batch(indices)?;
        Ok(Self {
            features,
            labels,
            class_count: self.class_count,
        })
    }

    /// Sample indices grouped by class, each group in dataset order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.class_count];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    /// Class-stratified split: `round(fraction · n_c)` random samples of each
    /// class go to the second dataset.
    pub fn stratified_split(&self, fraction: f64, rng: &mut Rng) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::InvalidInput(format!(
                "split fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let mut keep = Vec::new();
        let mut held = Vec::new();
        for mut group in self.indices_by_class() {
            rng.shuffle(&mut group);
            let cut = (fraction * group.len() as f64).round() as usize;
            held.extend_from_slice(&group[..cut]);
            keep.extend_from_slice(&group[cut..]);
        }
        keep.sort_unstable();
        held.sort_unstable();
        if keep.is_empty() || held.is_empty() {
            return Err(Error::InvalidInput("split leaves an empty side".into()));
        }
        Ok((self.subset(&keep)?, self.subset(&held)?))
    }

    /// Class-stratified random subset of (about) `size` samples.
    pub fn stratified_subset(&self, size: usize, rng: &mut Rng) -> Result<Self> {
        if size == 0 || size > self.len() {
            return Err(Error::InvalidInput(format!(
                "subset size {size} outside 1..={}",
                self.len()
            )));
        }
        let fraction = size as f64 / self.len() as f64;
        let mut chosen = Vec::new();
        for mut group in self.indices_by_class() {
            rng.shuffle(&mut group);
            let take = (fraction * group.len() as f64).round() as usize;
            chosen.extend_from_slice(&group[..take.min(group.len())]);
        }
        chosen.sort_unstable();
        self.subset(&chosen)
    }
}
