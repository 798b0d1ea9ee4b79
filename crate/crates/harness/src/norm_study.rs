use feddw_core::data::Dataset;
use feddw_core::feddw::SlMatrix;
use feddw_core::fl::{client_train, evaluate, LocalTraining, RunConfig, Strategy};
use feddw_core::nn::Model;
use feddw_core::numerics::Rng;
use feddw_core::Dataset64;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Classification-layer row norms after centralized training on a dataset
/// with prescribed class proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub seed: u64,
    pub proportions: Vec<f64>,
    pub class_counts: Vec<usize>,
    /// `‖ω_c‖₂ / Σᵢ ‖ω_i‖₂`.
    pub relative_norms: Vec<f64>,
    /// Spearman rank correlation between proportion and relative norm;
    /// `None` when either side is constant.
    pub spearman: Option<f64>,
    pub test_accuracy: f64,
}

fn check_proportions(p: &[f64], classes: usize) -> Result<()> {
    let invalid = |m: String| Err(HarnessError::Core(feddw_core::Error::InvalidInput(m)));
    if p.len() != classes {
        return invalid(format!("{} proportions for {classes} classes", p.len()));
    }
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return invalid("proportions must be finite and non-negative".into());
    }
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return invalid("proportions are all zero".into());
    }
    if (total - 1.0).abs() > 1e-6 {
        return invalid(format!("proportions sum to {total}, not 1"));
    }
    Ok(())
}

/// Draws `round(p_c · len)` samples of each class with replacement.
fn resample(train: &Dataset64, proportions: &[f64], rng: &mut Rng) -> Result<Dataset64> {
    let groups = train.indices_by_class();
    let mut chosen = Vec::new();
    for (c, (&p, group)) in proportions.iter().zip(&groups).enumerate() {
        let take = (p * train.len() as f64).round() as usize;
        if take > 0 && group.is_empty() {
            return Err(HarnessError::Core(feddw_core::Error::InvalidInput(format!(
                "class {c} has no training samples"
            ))));
        }
        chosen.extend((0..take).map(|_| group[rng.below(group.len())]));
    }
    chosen.sort_unstable();
    Ok(train.subset(&chosen)?)
}

/// Trains one bias-free model on data resampled to `proportions` and reports
/// the relative norms of its classification-layer rows.
pub fn norm_study(proportions: &[f64], config: &RunConfig) -> Result<NormReport> {
    let classes = config.dataset.class_count();
    check_proportions(proportions, classes)?;
    let (train, test) = config.dataset.materialize::<f64>(config.seed)?;
    let root = Rng::new(config.seed);
    let data = resample(&train, proportions, &mut root.derive("norm-study", &[]))?;

    let mut spec = config.model.clone();
    spec.classifier_bias = false;
    let model = Model::new(&spec, data.feature_dim(), classes, &root.derive("model", &[]))?;
    let all: Vec<usize> = (0..data.len()).collect();
    let report = client_train(
        0,
        &model,
        &SlMatrix::uniform(classes),
        &data,
        &all,
        &Strategy::FedAvg,
        &LocalTraining::from(config),
        root.derive("client", &[1, 0]),
    )?;
    let mut trained = model;
    trained.load_flat(&report.params)?;

    let norms: Vec<f64> = trained
        .classifier_weights()
        .iter_rows()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let total: f64 = norms.iter().sum();
    let relative_norms: Vec<f64> = norms.iter().map(|n| n / total).collect();
    Ok(NormReport {
        seed: config.seed,
        proportions: proportions.to_vec(),
        class_counts: class_histogram(&data),
        spearman: spearman(proportions, &relative_norms),
        relative_norms,
        test_accuracy: evaluate(&trained, &test)?.accuracy,
    })
}

fn class_histogram(data: &Dataset<f64>) -> Vec<usize> {
    let mut counts = vec![0; data.class_count()];
    for &y in data.labels() {
        counts[y] += 1;
    }
    counts
}

/// 1-based ranks with ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = mean;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation of the ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}
