use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

/// Distance scale of the class means.
pub const BLOB_SCALE: f64 = 2.0;

const BLOB_MAGIC: &[u8; 4] = b"FDWB";
const BLOB_VERSION: u32 = 1;

/// Class means. With `classes ≤ dim` mean `c` is `BLOB_SCALE · e_c`;
/// otherwise the means sit on a circle in the first two coordinates with the
/// same minimum pairwise distance `BLOB_SCALE · √2`.
pub fn blob_means(classes: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|c| {
            let mut m = vec![0.0; dim];
            if classes <= dim {
                m[c] = BLOB_SCALE;
            } else {
                let angle = std::f64::consts::TAU * c as f64 / classes as f64;
                let radius = BLOB_SCALE * std::f64::consts::SQRT_2
                    / (2.0 * (std::f64::consts::PI / classes as f64).sin());
                m[0] = radius * angle.cos();
                m[1] = radius * angle.sin();
            }
            m
        })
        .collect()
}

/// Gaussian blobs around [`blob_means`], class-major order.
///
/// Noise is `N(0, spread²)` per coordinate, truncated to `|n| < 2·spread`, so
/// for `classes ≤ dim` and `spread ≤ 0.5` every sample's largest coordinate is
/// its own class index and the data is linearly separable.
pub fn make_blobs<T: Scalar>(
    rng: &mut Rng,
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
) -> Result<Dataset<T>> {
    if classes < 2 || per_class < 1 || dim < 2 {
        return Err(Error::InvalidInput(format!(
            "blobs need classes ≥ 2, per_class ≥ 1, dim ≥ 2 (got {classes}, {per_class}, {dim})"
        )));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::InvalidInput(format!("spread must be non-negative, got {spread}")));
    }
    let means = blob_means(classes, dim);
    let n = classes * per_class;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            for &m in mean {
                let noise = loop {
                    let z = rng.normal();
                    if z.abs() < 2.0 {
                        break z * spread;
                    }
                };
                data.push(T::of(m + noise));
            }
            labels.push(c);
        }
    }
    Dataset::new(Matrix::new(n, dim, data)?, labels, classes)
}

/// Binary fixture format: `FDWB`, version, rows, cols, classes (little-endian
/// u32/u64), then row-major `f64` features and `u32` labels.
pub fn write_blobs<T: Scalar>(path: &Path, data: &Dataset<T>) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(BLOB_MAGIC);
    out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
    for v in [data.len(), data.feature_dim(), data.class_count()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &x in data.features().as_slice() {
        out.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
    }
    for &y in data.labels() {
        out.extend_from_slice(&(y as u32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_blobs<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let truncated = |field| Error::Format {
        field,
        detail: "file truncated".into(),
    };
    if bytes.get(..4) != Some(BLOB_MAGIC.as_slice()) {
        return Err(Error::Format {
            field: "magic",
            detail: "not a blob fixture".into(),
        });
    }
    let version = u32::from_le_bytes(bytes.get(4..8).ok_or(truncated("version"))?.try_into().unwrap());
    if version != BLOB_VERSION {
        return Err(Error::Format {
            field: "version",
            detail: format!("unsupported version {version}"),
        });
    }
    let header = |i: usize, field| -> Result<usize> {
        let at = 8 + 8 * i;
        Ok(u64::from_le_bytes(bytes.get(at..at + 8).ok_or(truncated(field))?.try_into().unwrap()) as usize)
    };
    let (rows, cols, classes) = (header(0, "rows")?, header(1, "cols")?, header(2, "classes")?);
    let body = &bytes[32..];
    if body.len() != rows * cols * 8 + rows * 4 {
        return Err(truncated("body"));
    }
    let (feat, lab) = body.split_at(rows * cols * 8);
    let data = feat
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let labels = lab
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    Dataset::new(Matrix::new(rows, cols, data)?, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{adam_step, backward, forward, AdamState, Dense, Model};

    #[test]
    fn same_seed_same_dataset() {
        let a: Dataset<f64> = make_blobs(&mut Rng::new(4), 3, 10, 5, 0.3).unwrap();
        let b: Dataset<f64> = make_blobs(&mut Rng::new(4), 3, 10, 5, 0.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
    }

    #[test]
    fn means_are_far_apart() {
        for (k, d) in [(2, 2), (5, 8), (10, 32), (10, 2), (7, 3)] {
            let means = blob_means(k, d);
            for i in 0..k {
                for j in i + 1..k {
                    let dist: f64 = means[i]
                        .iter()
                        .zip(&means[j])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    assert!(dist >= 2.0 - 1e-12, "k={k} d={d}: {dist}");
                }
            }
        }
    }

    #[test]
    fn argmax_probe_separates_tight_blobs() {
        let ds: Dataset<f64> = make_blobs(&mut Rng::new(9), 4, 200, 6, 0.5).unwrap();
        for (row, &y) in ds.features().iter_rows().zip(ds.labels()) {
            let best = (0..4).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(best, y);
        }
    }

    #[test]
    fn trained_linear_probe_reaches_full_accuracy() {
        let ds: Dataset<f64> = make_blobs(&mut Rng::new(1), 2, 50, 2, 0.1).unwrap();
        let mut model = Model::from_parts(vec![], vec![], Dense::zeros(2, 2, true), 2).unwrap();
        let mut state = AdamState::new(&model, 0.05);
        for _ in 0..100 {
            let (logits, cache) = forward(&model, ds.features()).unwrap();
            let g = backward(&model, &cache, &logits, ds.labels(), None).unwrap();
            adam_step(&mut model, &mut state, &g).unwrap();
        }
        let logits = model.logits(ds.features()).unwrap();
        let correct = logits
            .iter_rows()
            .zip(ds.labels())
            .filter(|(r, &y)| (r[1] > r[0]) == (y == 1))
            .count();
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn binary_fixture_round_trips() {
        let ds: Dataset<f64> = make_blobs(&mut Rng::new(2), 3, 4, 3, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("blobs.bin");
        write_blobs(&p, &ds).unwrap();
        assert_eq!(read_blobs::<f64>(&p).unwrap(), ds);
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_blobs::<f64>(&p), Err(Error::Format { .. })));
    }
}
