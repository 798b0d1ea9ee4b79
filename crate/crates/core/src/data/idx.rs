use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

/// Raw contents of an IDX3 unsigned-byte image file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format {
            field,
            detail: "file truncated inside the header".into(),
        })
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format {
            field: "magic",
            detail: format!("expected {IMAGE_MAGIC:#010x} for images, found {magic:#010x}"),
        });
    }
    let count = be_u32(&bytes, 4, "image count")? as usize;
    let rows = be_u32(&bytes, 8, "rows")? as usize;
    let cols = be_u32(&bytes, 12, "cols")? as usize;
    let expected = count * rows * cols;
    let pixels = &bytes[16..];
    if pixels.len() != expected {
        return Err(Error::Format {
            field: "pixel data",
            detail: format!("expected {expected} bytes, found {}", pixels.len()),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: pixels.to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format {
            field: "magic",
            detail: format!("expected {LABEL_MAGIC:#010x} for labels, found {magic:#010x}"),
        });
    }
    let count = be_u32(&bytes, 4, "label count")? as usize;
    let labels = &bytes[8..];
    if labels.len() != count {
        return Err(Error::Format {
            field: "label data",
            detail: format!("expected {count} bytes, found {}", labels.len()),
        });
    }
    Ok(labels.to_vec())
}

pub fn write_idx_images(path: &Path, images: &IdxImages) -> Result<()> {
    if images.pixels.len() != images.count * images.rows * images.cols {
        return Err(Error::InvalidInput("pixel buffer does not match dimensions".into()));
    }
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads an MNIST image/label file pair, scaling pixels to `[0, 1]`.
pub fn load_mnist<T: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if labels.len() != images.count {
        return Err(Error::Format {
            field: "label count",
            detail: format!("{} labels for {} images", labels.len(), images.count),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= MNIST_CLASSES) {
        return Err(Error::Format {
            field: "label data",
            detail: format!("label {bad} is not a digit"),
        });
    }
    let scale = T::of(1.0 / 255.0);
    let data: Vec<T> = images.pixels.iter().map(|&p| T::of(p as f64) * scale).collect();
    let features = Matrix::new(images.count, images.rows * images.cols, data).map_err(|_| {
        Error::Format {
            field: "image count",
            detail: "file holds no images".into(),
        }
    })?;
    Dataset::new(
        features,
        labels.into_iter().map(usize::from).collect(),
        MNIST_CLASSES,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (IdxImages, Vec<u8>) {
        let images = IdxImages {
            count: 3,
            rows: 2,
            cols: 3,
            pixels: vec![0, 255, 17, 3, 128, 9, 200, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255],
        };
        (images, vec![7, 0, 3])
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        write_idx_images(&ip, &images).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        assert_eq!(read_idx_images(&ip).unwrap(), images);
        assert_eq!(read_idx_labels(&lp).unwrap(), labels);

        let ds: Dataset<f64> = load_mnist(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.feature_dim(), 6);
        assert_eq!(ds.class_count(), 10);
        assert_eq!(ds.labels(), &[7, 0, 3]);
        for (&p, &x) in images.pixels.iter().zip(ds.features().as_slice()) {
            assert!((0.0..=1.0).contains(&x));
            assert_eq!((x * 255.0).round() as u8, p);
        }
    }

    #[test]
    fn truncated_and_mismatched_files_fail() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        write_idx_images(&ip, &images).unwrap();
        write_idx_labels(&lp, &labels).unwrap();

        let mut bytes = fs::read(&ip).unwrap();
        bytes.truncate(bytes.len() - 1);
        let cut = dir.path().join("cut");
        fs::write(&cut, &bytes).unwrap();
        let err = load_mnist::<f64>(&cut, &lp).unwrap_err();
        assert!(matches!(err, Error::Format { field: "pixel data", .. }), "{err}");

        fs::write(&cut, &bytes[..10]).unwrap();
        assert!(matches!(
            read_idx_images(&cut),
            Err(Error::Format { field: "rows", .. })
        ));

        // Labels file passed where images are expected.
        assert!(matches!(
            load_mnist::<f64>(&lp, &lp),
            Err(Error::Format { field: "magic", .. })
        ));

        let short = dir.path().join("short");
        write_idx_labels(&short, &labels[..2]).unwrap();
        assert!(matches!(
            load_mnist::<f64>(&ip, &short),
            Err(Error::Format { field: "label count", .. })
        ));
    }

    #[test]
    fn missing_file_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nope");
        assert!(matches!(load_mnist::<f64>(&p, &p), Err(Error::NotFound(_))));
    }
}
