use crate::error::{Error, Result};
use crate::nn::{Gradients, Model};
use crate::scalar::Scalar;

/// Adam moment accumulators for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(model: &Model<T>, learning_rate: T) -> Self {
        let zeros: Vec<Vec<T>> = model
            .param_slices()
            .iter()
            .map(|s| vec![T::zero(); s.len()])
            .collect();
        Self {
            learning_rate,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. A non-finite gradient leaves both the model
/// and the state untouched.
pub fn adam_step<T: Scalar>(
    model: &mut Model<T>,
    state: &mut AdamState<T>,
    grads: &Gradients<T>,
) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::TrainingDiverged("non-finite gradient".into()));
    }
    let g = grads.slices();
    let mut params = model.param_slices_mut();
    if g.len() != params.len() || g.len() != state.first.len() {
        return Err(Error::shape("adam_step", params.len(), g.len()));
    }
    for ((p, gi), m) in params.iter().zip(&g).zip(&state.first) {
        if p.len() != gi.len() || p.len() != m.len() {
            return Err(Error::shape("adam_step slice", p.len(), gi.len()));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (((p, gi), m), v) in params
        .iter_mut()
        .zip(&g)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        for (((pj, &gj), mj), vj) in p.iter_mut().zip(gi.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mj = b1 * *mj + (T::one() - b1) * gj;
            *vj = b2 * *vj + (T::one() - b2) * gj * gj;
            let m_hat = *mj / c1;
            let v_hat = *vj / c2;
            *pj -= state.learning_rate * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}
