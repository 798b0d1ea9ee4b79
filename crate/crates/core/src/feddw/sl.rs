use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::Model;
use crate::numerics::{softmax_rows, Matrix};
use crate::scalar::Scalar;

const ROW_SUM_TOL: f64 = 1e-9;
const EVAL_CHUNK: usize = 512;

/// `|C| × |C|` matrix whose row `i` is the mean soft label of class-`i` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SlMatrix<T> {
    omega: Matrix<T>,
    covered: Vec<bool>,
}

impl<T: Scalar> SlMatrix<T> {
    /// Validates: covered rows are probability vectors, uncovered rows are zero.
    pub fn new(omega: Matrix<T>, covered: Vec<bool>) -> Result<Self> {
        let c = omega.rows();
        if omega.cols() != c || covered.len() != c {
            return Err(Error::shape(
                "SlMatrix",
                format!("{c}x{c} with {c} flags"),
                format!("{}x{} with {} flags", omega.rows(), omega.cols(), covered.len()),
            ));
        }
        for (i, (row, &cov)) in omega.iter_rows().zip(&covered).enumerate() {
            if cov {
                let sum: T = row.iter().copied().sum();
                let in_range = row.iter().all(|&x| x >= T::zero() && x <= T::one());
                if !in_range || (sum.to_f64_lossy() - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidInput(format!(
                        "SL row {i} is not a probability vector"
                    )));
                }
            } else if row.iter().any(|&x| x != T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "uncovered SL row {i} must be zero"
                )));
            }
        }
        Ok(Self { omega, covered })
    }

    /// Every row `1/|C|`.
    pub fn uniform(classes: usize) -> Self {
        Self {
            omega: Matrix::filled(classes, classes, T::one() / T::of(classes as f64)),
            covered: vec![true; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.covered.len()
    }

    pub fn omega(&self) -> &Matrix<T> {
        &self.omega
    }

    pub fn covered(&self) -> &[bool] {
        &self.covered
    }

    pub fn is_fully_covered(&self) -> bool {
        self.covered.iter().all(|&c| c)
    }

    pub fn to_json(&self) -> SlMatrixJson {
        SlMatrixJson {
            classes: self.classes(),
            values: self.omega.to_f64_vec(),
            covered: self.covered.clone(),
        }
    }

    pub fn from_json(json: &SlMatrixJson) -> Result<Self> {
        let c = json.classes;
        let omega = Matrix::new(c, c, json.values.iter().map(|&x| T::of(x)).collect())?;
        Self::new(omega, json.covered.clone())
    }
}

/// Wire/export form: row-major values plus coverage flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlMatrixJson {
    pub classes: usize,
    pub values: Vec<f64>,
    pub covered: Vec<bool>,
}

/// Running per-class sums of softmax outputs.
#[derive(Clone, Debug)]
pub struct SlAccumulator<T> {
    sums: Matrix<T>,
    counts: Vec<usize>,
}

impl<T: Scalar> SlAccumulator<T> {
    pub fn new(classes: usize) -> Self {
        Self {
            sums: Matrix::zeros(classes, classes),
            counts: vec![0; classes],
        }
    }

    /// Adds rows of class probabilities with their labels.
    pub fn add(&mut self, probs: &Matrix<T>, labels: &[usize]) -> Result<()> {
        let c = self.counts.len();
        if probs.cols() != c || probs.rows() != labels.len() {
            return Err(Error::shape(
                "SlAccumulator::add",
                format!("{} rows of width {c}", labels.len()),
                format!("{}x{}", probs.rows(), probs.cols()),
            ));
        }
        for (row, &y) in probs.iter_rows().zip(labels) {
            if y >= c {
                return Err(Error::InvalidInput(format!("label {y} out of range")));
            }
            for (s, &p) in self.sums.row_mut(y).iter_mut().zip(row) {
                *s += p;
            }
            self.counts[y] += 1;
        }
        Ok(())
    }

    /// Class means plus the per-class sample counts.
    pub fn finish(self) -> (SlMatrix<T>, Vec<usize>) {
        let mut omega = self.sums;
        for (i, &n) in self.counts.iter().enumerate() {
            if n > 0 {
                let inv = T::one() / T::of(n as f64);
                for v in omega.row_mut(i) {
                    *v *= inv;
                }
            }
        }
        let covered = self.counts.iter().map(|&n| n > 0).collect();
        (SlMatrix { omega, covered }, self.counts)
    }
}

/// Local SL matrix of `model` over the shard samples (full evaluation pass).
pub fn local_sl_matrix<T: Scalar>(
    model: &Model<T>,
    data: &Dataset<T>,
    shard: &[usize],
    class_count: usize,
) -> Result<SlMatrix<T>> {
    if model.class_count() != class_count {
        return Err(Error::shape("local_sl_matrix classes", class_count, model.class_count()));
    }
    let mut acc = SlAccumulator::new(class_count);
    for chunk in shard.chunks(EVAL_CHUNK) {
        let (x, y) = data.batch(chunk)?;
        acc.add(&softmax_rows(&model.logits(&x)?)?, &y)?;
    }
    Ok(acc.finish().0)
}

/// Count-weighted mean of client SL rows. Rows no participant covers are
/// carried over from `previous`.
pub fn aggregate_sl<T: Scalar>(
    reports: &[(&SlMatrix<T>, &[usize])],
    previous: &SlMatrix<T>,
) -> Result<SlMatrix<T>> {
    let c = previous.classes();
    for (sl, counts) in reports {
        if sl.classes() != c || counts.len() != c {
            return Err(Error::shape(
                "aggregate_sl",
                c,
                format!("{} classes / {} counts", sl.classes(), counts.len()),
            ));
        }
    }
    let mut omega = Matrix::zeros(c, c);
    let mut covered = vec![false; c];
    for i in 0..c {
        let total: usize = reports.iter().map(|(_, n)| n[i]).sum();
        if total == 0 {
            omega.row_mut(i).copy_from_slice(previous.omega.row(i));
            covered[i] = previous.covered[i];
            continue;
        }
        covered[i] = true;
        let total = T::of(total as f64);
        for j in 0..c {
            let mut acc = T::zero();
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for (sl, n) in reports.iter().filter(|(_, n)| n[i] > 0) {
                let v = sl.omega[(i, j)];
                acc += T::of(n[i] as f64) / total * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            // A weighted mean lies in the hull of its inputs; clamp off rounding.
            omega[(i, j)] = acc.max(lo).min(hi);
        }
    }
    Ok(SlMatrix { omega, covered })
}
