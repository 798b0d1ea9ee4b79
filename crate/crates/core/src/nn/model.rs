use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layer::{relu, relu_backward, Dense, DenseGrad, Layer};
use crate::nn::loss::softmax_cross_entropy;
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

/// Layer widths for an MLP model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Hidden widths of the feature extractor (each Dense is followed by ReLU).
    pub feature_hidden: Vec<usize>,
    /// Width of both mapping layers, i.e. the classification layer's input.
    pub mapping_width: usize,
    pub classifier_bias: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            feature_hidden: vec![128],
            mapping_width: 128,
            classifier_bias: true,
        }
    }
}

/// `f_φ ∘ f_π ∘ f_ω`: feature extractor, two mapping layers, classification layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub(crate) feature_extractor: Vec<Layer<T>>,
    pub(crate) mapping: Vec<Layer<T>>,
    pub(crate) classifier: Dense<T>,
    class_count: usize,
}

impl<T: Scalar> Model<T> {
    /// Kaiming-initialized model; each dense layer draws from its own child stream.
    pub fn new(spec: &ModelSpec, input_dim: usize, class_count: usize, rng: &Rng) -> Result<Self> {
        if input_dim == 0 || spec.mapping_width == 0 || spec.feature_hidden.contains(&0) {
            return Err(Error::InvalidInput("layer widths must be positive".into()));
        }
        if class_count < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two classes, got {class_count}"
            )));
        }
        let mut index = 0u64;
        let mut dense = |i: usize, o: usize, bias: bool| {
            let layer = Dense::kaiming(i, o, bias, &mut rng.derive("init", &[index]));
            index += 1;
            layer
        };
        let mut feature_extractor = Vec::new();
        let mut width = input_dim;
        for &h in &spec.feature_hidden {
            feature_extractor.push(Layer::Dense(dense(width, h, true)));
            feature_extractor.push(Layer::Relu);
            width = h;
        }
        let m = spec.mapping_width;
        let mapping = vec![
            Layer::Dense(dense(width, m, true)),
            Layer::Relu,
            Layer::Dense(dense(m, m, true)),
            Layer::Relu,
        ];
        let classifier = dense(m, class_count, spec.classifier_bias);
        Self::from_parts(feature_extractor, mapping, classifier, class_count)
    }

    /// Assembles a model from explicit layers, checking that widths chain.
    pub fn from_parts(
        feature_extractor: Vec<Layer<T>>,
        mapping: Vec<Layer<T>>,
        classifier: Dense<T>,
        class_count: usize,
    ) -> Result<Self> {
        if classifier.output_dim() != class_count {
            return Err(Error::shape(
                "classification layer outputs",
                class_count,
                classifier.output_dim(),
            ));
        }
        let model = Self {
            feature_extractor,
            mapping,
            classifier,
            class_count,
        };
        let mut width: Option<usize> = None;
        for layer in model.stack() {
            if let Layer::Dense(d) = layer {
                if let Some(w) = width {
                    if w != d.input_dim() {
                        return Err(Error::shape("layer chaining", w, d.input_dim()));
                    }
                }
                width = Some(d.output_dim());
            }
        }
        if let Some(w) = width {
            if w != model.classifier.input_dim() {
                return Err(Error::shape("classification layer input", w, model.classifier.input_dim()));
            }
        }
        Ok(model)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.stack()
            .find_map(|l| match l {
                Layer::Dense(d) => Some(d.input_dim()),
                Layer::Relu => None,
            })
            .unwrap_or(self.classifier.input_dim())
    }

    pub fn feature_extractor(&self) -> &[Layer<T>] {
        &self.feature_extractor
    }

    pub fn mapping(&self) -> &[Layer<T>] {
        &self.mapping
    }

    pub fn classifier(&self) -> &Dense<T> {
        &self.classifier
    }

    /// ω, the `|C| × k` classification-layer weight matrix.
    pub fn classifier_weights(&self) -> &Matrix<T> {
        &self.classifier.weight
    }

    /// Layers before the classification layer, in evaluation order.
    fn stack(&self) -> impl Iterator<Item = &Layer<T>> {
        self.feature_extractor.iter().chain(&self.mapping)
    }

    /// Dense layers in parameter order (classification layer last).
    pub fn dense_layers(&self) -> Vec<&Dense<T>> {
        let mut out: Vec<&Dense<T>> = self
            .stack()
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d),
                Layer::Relu => None,
            })
            .collect();
        out.push(&self.classifier);
        out
    }

    pub fn dense_layers_mut(&mut self) -> Vec<&mut Dense<T>> {
        let mut out: Vec<&mut Dense<T>> = self
            .feature_extractor
            .iter_mut()
            .chain(self.mapping.iter_mut())
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d),
                Layer::Relu => None,
            })
            .collect();
        out.push(&mut self.classifier);
        out
    }

    /// Parameter slices in canonical order: each dense layer's weights, then its bias.
    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for d in self.dense_layers() {
            out.push(d.weight.as_slice());
            if let Some(b) = &d.bias {
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for d in self.dense_layers_mut() {
            out.push(d.weight.as_mut_slice());
            if let Some(b) = &mut d.bias {
                out.push(b.as_mut_slice());
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.dense_layers().iter().map(|d| d.param_count()).sum()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.param_slices().concat()
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        let expected = self.param_count();
        if flat.len() != expected {
            return Err(Error::shape("Model::load_flat", expected, flat.len()));
        }
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            slice.copy_from_slice(&flat[offset..offset + slice.len()]);
            offset += slice.len();
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Logits only; keeps no activations.
    pub fn logits(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let mut x = batch.clone();
        for layer in self.stack() {
            x = match layer {
                Layer::Dense(d) => d.forward(&x)?,
                Layer::Relu => relu(&x),
            };
        }
        self.classifier.forward(&x)
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::shape("forward input", self.input_dim(), batch.cols()));
        }
        Ok(())
    }
}

/// Activations retained by [`forward`]: the input of every layer, classifier last.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    inputs: Vec<Matrix<T>>,
}

/// Forward pass keeping the activations needed for exact backprop.
pub fn forward<T: Scalar>(model: &Model<T>, batch: &Matrix<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
    model.check_input(batch)?;
    let mut inputs = Vec::with_capacity(model.feature_extractor.len() + model.mapping.len() + 1);
    let mut x = batch.clone();
    for layer in model.stack() {
        let y = match layer {
            Layer::Dense(d) => d.forward(&x)?,
            Layer::Relu => relu(&x),
        };
        inputs.push(x);
        x = y;
    }
    let logits = model.classifier.forward(&x)?;
    inputs.push(x);
    Ok((logits, ForwardCache { inputs }))
}

/// Per-dense-layer gradients in [`Model::dense_layers`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<DenseGrad<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn classifier(&self) -> &DenseGrad<T> {
        self.layers.last().expect("model always has a classification layer")
    }

    pub fn classifier_mut(&mut self) -> &mut DenseGrad<T> {
        self.layers.last_mut().expect("model always has a classification layer")
    }

    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.push(g.weight.as_slice());
            if let Some(b) = &g.bias {
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for g in &mut self.layers {
            out.push(g.weight.as_mut_slice());
            if let Some(b) = &mut g.bias {
                out.push(b.as_mut_slice());
            }
        }
        out
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.slices().concat()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseGrad::is_finite)
    }

    /// `g += s · (θ − θ_ref)` for every parameter.
    pub fn add_proximal(&mut self, s: T, current: &Model<T>, reference: &Model<T>) -> Result<()> {
        let cur = current.param_slices();
        let refs = reference.param_slices();
        let mut grads = self.slices_mut();
        if cur.len() != refs.len() || cur.len() != grads.len() {
            return Err(Error::shape("proximal term", cur.len(), refs.len()));
        }
        for ((g, c), r) in grads.iter_mut().zip(&cur).zip(&refs) {
            if g.len() != c.len() || c.len() != r.len() {
                return Err(Error::shape("proximal term slice", c.len(), r.len()));
            }
            for ((gi, &ci), &ri) in g.iter_mut().zip(c.iter()).zip(r.iter()) {
                *gi += s * (ci - ri);
            }
        }
        Ok(())
    }
}

/// Exact gradient of the batch-mean cross-entropy, plus `extra_classifier_grad`
/// added to the classification-layer weights when given.
pub fn backward<T: Scalar>(
    model: &Model<T>,
    cache: &ForwardCache<T>,
    logits: &Matrix<T>,
    labels: &[usize],
    extra_classifier_grad: Option<&Matrix<T>>,
) -> Result<Gradients<T>> {
    let stack: Vec<&Layer<T>> = model.stack().collect();
    if cache.inputs.len() != stack.len() + 1 {
        return Err(Error::shape("backward cache", stack.len() + 1, cache.inputs.len()));
    }
    if let Some(extra) = extra_classifier_grad {
        model.classifier.weight.check_same_shape(extra, "extra classifier gradient")?;
    }
    let (_, mut grad) = softmax_cross_entropy(logits, labels)?;

    let mut dense_grads = Vec::new();
    let (mut cls_grad, dx) =
        model
            .classifier
            .backward(&cache.inputs[stack.len()], &grad, !stack.is_empty())?;
    if let Some(extra) = extra_classifier_grad {
        cls_grad.weight.axpy(T::one(), extra)?;
    }
    if let Some(dx) = dx {
        grad = dx;
    }
    for (i, layer) in stack.iter().enumerate().rev() {
        match layer {
            Layer::Dense(d) => {
                let (g, dx) = d.backward(&cache.inputs[i], &grad, i > 0)?;
                dense_grads.push(g);
                if let Some(dx) = dx {
                    grad = dx;
                }
            }
            Layer::Relu => {
                // The next layer's input is this ReLU's output.
                grad = relu_backward(&cache.inputs[i + 1], &grad);
            }
        }
    }
    dense_grads.reverse();
    dense_grads.push(cls_grad);
    Ok(Gradients { layers: dense_grads })
}
