//! Minimal feed-forward engine: dense + ReLU layers arranged as feature
//! extractor, mapping layers and a final classification layer, with exact
//! backpropagation, softmax cross-entropy and Adam.

mod adam;
mod layer;
mod loss;
mod model;
mod serialize;

pub use adam::{adam_step, AdamState};
pub use layer::{Dense, DenseGrad, Layer};
pub use loss::{cross_entropy_loss, softmax_cross_entropy};
pub use model::{backward, forward, ForwardCache, Gradients, Model, ModelSpec};
pub use serialize::{read_model, write_model, LayerManifest, ModelManifest};
