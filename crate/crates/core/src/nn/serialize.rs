use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Dense, Layer, Model};
use crate::scalar::Scalar;

pub const MANIFEST_VERSION: u32 = 1;

/// JSON shape manifest accompanying the flat little-endian parameter file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    /// Always `"f64-le"`: parameters are written as 64-bit floats whatever
    /// the in-memory scalar type.
    pub encoding: String,
    pub class_count: usize,
    pub param_count: usize,
    pub layers: Vec<LayerManifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerManifest {
    Dense {
        section: Section,
        input: usize,
        output: usize,
        bias: bool,
    },
    Relu {
        section: Section,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Feature,
    Mapping,
    Classifier,
}

impl<T: Scalar> Model<T> {
    pub fn manifest(&self) -> ModelManifest {
        let describe = |section: Section, layer: &Layer<T>| match layer {
            Layer::Dense(d) => LayerManifest::Dense {
                section,
                input: d.input_dim(),
                output: d.output_dim(),
                bias: d.has_bias(),
            },
            Layer::Relu => LayerManifest::Relu { section },
        };
        let mut layers: Vec<LayerManifest> = self
            .feature_extractor
            .iter()
            .map(|l| describe(Section::Feature, l))
            .collect();
        layers.extend(self.mapping.iter().map(|l| describe(Section::Mapping, l)));
        layers.push(describe(Section::Classifier, &Layer::Dense(self.classifier.clone())));
        ModelManifest {
            format_version: MANIFEST_VERSION,
            encoding: "f64-le".into(),
            class_count: self.class_count(),
            param_count: self.param_count(),
            layers,
        }
    }

    /// Parameters as consecutive little-endian `f64` values.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.to_flat()
            .into_iter()
            .flat_map(|x| x.to_f64_lossy().to_le_bytes())
            .collect()
    }

    /// Rebuilds a model from its manifest and parameter bytes.
    pub fn from_manifest(manifest: &ModelManifest, bytes: &[u8]) -> Result<Self> {
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::Format {
                field: "format_version",
                detail: format!("unsupported version {}", manifest.format_version),
            });
        }
        if bytes.len() != manifest.param_count * 8 {
            return Err(Error::Format {
                field: "parameter bytes",
                detail: format!(
                    "expected {} bytes for {} parameters, found {}",
                    manifest.param_count * 8,
                    manifest.param_count,
                    bytes.len()
                ),
            });
        }
        let mut feature = Vec::new();
        let mut mapping = Vec::new();
        let mut classifier = None;
        for layer in &manifest.layers {
            let (section, built) = match *layer {
                LayerManifest::Dense {
                    section,
                    input,
                    output,
                    bias,
                } => {
                    if input == 0 || output == 0 {
                        return Err(Error::Format {
                            field: "layers",
                            detail: "dense layer with zero width".into(),
                        });
                    }
                    (section, Layer::Dense(Dense::zeros(input, output, bias)))
                }
                LayerManifest::Relu { section } => (section, Layer::Relu),
            };
            match (section, built) {
                (Section::Feature, l) => feature.push(l),
                (Section::Mapping, l) => mapping.push(l),
                (Section::Classifier, Layer::Dense(d)) if classifier.is_none() => classifier = Some(d),
                _ => {
                    return Err(Error::Format {
                        field: "layers",
                        detail: "classifier section must hold exactly one dense layer".into(),
                    })
                }
            }
        }
        let classifier = classifier.ok_or(Error::Format {
            field: "layers",
            detail: "missing classification layer".into(),
        })?;
        let mut model = Model::from_parts(feature, mapping, classifier, manifest.class_count)?;
        if model.param_count() != manifest.param_count {
            return Err(Error::Format {
                field: "param_count",
                detail: format!(
                    "layers imply {} parameters, manifest says {}",
                    model.param_count(),
                    manifest.param_count
                ),
            });
        }
        let flat: Vec<T> = bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect();
        model.load_flat(&flat)?;
        Ok(model)
    }
}

/// Writes `<stem>.bin` (parameters) and `<stem>.json` (manifest).
pub fn write_model<T: Scalar>(model: &Model<T>, dir: &Path, stem: &str) -> Result<()> {
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&bin, model.to_le_bytes()).map_err(|e| Error::io(&bin, e))?;
    let text = serde_json::to_string_pretty(&model.manifest())?;
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

pub fn read_model<T: Scalar>(dir: &Path, stem: &str) -> Result<Model<T>> {
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    for p in [&bin, &json] {
        if !p.exists() {
            return Err(Error::NotFound(p.clone()));
        }
    }
    let manifest: ModelManifest =
        serde_json::from_str(&fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?)?;
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    Model::from_manifest(&manifest, &bytes)
}
