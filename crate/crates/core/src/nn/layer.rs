use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

/// Fully connected layer computing `x·Wᵀ + b` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Option<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Dense(Dense<T>),
    Relu,
}

impl<T: Scalar> Dense<T> {
    pub fn new(weight: Matrix<T>, bias: Option<Vec<T>>) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weight.rows() {
                return Err(Error::shape("Dense::new bias", weight.rows(), b.len()));
            }
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(input: usize, output: usize, has_bias: bool) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: has_bias.then(|| vec![T::zero(); output]),
        }
    }

    /// Kaiming-uniform weights, `U(−√(6/fan_in), √(6/fan_in))`; zero bias.
    pub fn kaiming(input: usize, output: usize, has_bias: bool, rng: &mut Rng) -> Self {
        let bound = (6.0 / input as f64).sqrt();
        Self {
            weight: Matrix::from_fn(output, input, |_, _| T::of(rng.uniform_range(-bound, bound))),
            bias: has_bias.then(|| vec![T::zero(); output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn has_bias(&self) -> bool {
        self.bias.is_some()
    }

    pub fn param_count(&self) -> usize {
        self.weight.as_slice().len() + self.bias.as_ref().map_or(0, Vec::len)
    }

    pub(crate) fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("Dense::forward", self.input_dim(), x.cols()));
        }
        let mut y = x.matmul_t(&self.weight)?;
        if let Some(b) = &self.bias {
            for row in y.as_mut_slice().chunks_exact_mut(b.len()) {
                for (v, &bj) in row.iter_mut().zip(b) {
                    *v += bj;
                }
            }
        }
        Ok(y)
    }

    /// Returns the parameter gradient and, when requested, the input gradient.
    pub(crate) fn backward(
        &self,
        input: &Matrix<T>,
        grad_out: &Matrix<T>,
        need_input_grad: bool,
    ) -> Result<(DenseGrad<T>, Option<Matrix<T>>)> {
        let weight = grad_out.t_matmul(input)?;
        let bias = self.bias.as_ref().map(|_| {
            let mut db = vec![T::zero(); grad_out.cols()];
            for row in grad_out.iter_rows() {
                for (d, &g) in db.iter_mut().zip(row) {
                    *d += g;
                }
            }
            db
        });
        let dx = if need_input_grad {
            Some(grad_out.matmul(&self.weight)?)
        } else {
            None
        };
        Ok((DenseGrad { weight, bias }, dx))
    }
}

/// Gradient of one dense layer; mirrors [`Dense`]'s parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrad<T> {
    pub weight: Matrix<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Scalar> DenseGrad<T> {
    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().flatten().all(|x| x.is_finite())
    }
}

pub(crate) fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Backprop through ReLU given its forward output.
pub(crate) fn relu_backward<T: Scalar>(output: &Matrix<T>, grad_out: &Matrix<T>) -> Matrix<T> {
    let mut g = grad_out.clone();
    for (d, &y) in g.as_mut_slice().iter_mut().zip(output.as_slice()) {
        if y <= T::zero() {
            *d = T::zero();
        }
    }
    g
}
