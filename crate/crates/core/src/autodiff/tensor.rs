//! Dense row-major tensors.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

use super::GraphError;

/// Dense numeric array in row-major order. Rank 0 (shape `[]`) holds a
/// single scalar; losses are rank-0 tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    /// Builds from shape and row-major values; the value count must equal
    /// the shape product and all values must be finite.
    pub fn from_vec(shape: Vec<usize>, data: Vec<S>) -> Result<Self, GraphError> {
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(GraphError::Shape {
                op: "from_vec",
                detail: format!("{} values for shape {:?}", data.len(), shape),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite { op: "from_vec" });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); numel],
        }
    }

    pub fn filled(shape: &[usize], value: S) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: S) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Gaussian init with the given standard deviation.
    pub fn randn<R: Rng>(shape: &[usize], std: S, rng: &mut R) -> Self {
        let numel: usize = shape.iter().product();
        let data = (0..numel)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                S::from_f64_lossy(z) * std
            })
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.iter().product::<usize>() == 1
    }

    /// The single value of a rank-0/one-element tensor.
    pub fn item(&self) -> S {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// Number of rows of a rank-2 tensor.
    pub fn n_rows(&self) -> usize {
        self.shape[0]
    }

    /// Number of columns of a rank-2 tensor.
    pub fn n_cols(&self) -> usize {
        self.shape[1]
    }

    pub fn at2(&self, i: usize, j: usize) -> S {
        self.data[i * self.shape[1] + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    /// Stacks equal-width rank-1/rank-2 tensors vertically into one matrix.
    pub fn vstack(parts: &[&Tensor<S>]) -> Result<Self, GraphError> {
        let cols = match parts.first() {
            Some(t) => *t.shape().last().unwrap_or(&0),
            None => {
                return Err(GraphError::Shape {
                    op: "vstack",
                    detail: "no tensors".to_string(),
                })
            }
        };
        let mut data = Vec::new();
        let mut rows = 0usize;
        for t in parts {
            let (r, c) = match t.shape() {
                [c] => (1, *c),
                [r, c] => (*r, *c),
                other => {
                    return Err(GraphError::Shape {
                        op: "vstack",
                        detail: format!("rank {} tensor", other.len()),
                    })
                }
            };
            if c != cols {
                return Err(GraphError::Shape {
                    op: "vstack",
                    detail: format!("width {c} vs {cols}"),
                });
            }
            rows += r;
            data.extend_from_slice(t.data());
        }
        Ok(Tensor {
            shape: vec![rows, cols],
            data,
        })
    }

    /// Rows of a rank-2 tensor selected by index, as a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let cols = self.shape[1];
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Tensor {
            shape: vec![indices.len(), cols],
            data,
        }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
