//! Dense N-way tensors in colexicographic layout.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A dense real tensor with explicit shape. Entries are stored
/// colexicographically: the first index varies fastest, so the linear offset
/// of `(i_1, ..., i_N)` is `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidParameter(
                "tensor must have order >= 1 with all extents >= 1",
            ));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                context: "tensor data length",
                expected: len,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    /// Tensor order N.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Linear offset of a multi-index (0-based).
    #[inline]
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut off = 0;
        for (&i, &extent) in index.iter().zip(&self.shape).rev() {
            debug_assert!(i < extent);
            off = off * extent + i;
        }
        off
    }

    #[inline]
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    #[inline]
    pub fn set(&mut self, index: &[usize], v: f64) {
        let off = self.offset(index);
        self.data[off] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Mode-n matricization (1-based mode): rows index `i_n`, columns are the
    /// mode-n fibres with the remaining indices colexicographically ordered.
    /// For `n = 1` the colex layout makes this a pure reshape.
    pub fn matricize(&self, n: usize) -> Result<Matrix> {
        let order = self.order();
        if n == 0 || n > order {
            return Err(Error::ModeOutOfRange { mode: n, order });
        }
        let mode = n - 1;
        let rows = self.shape[mode];
        let cols = self.data.len() / rows;
        if mode == 0 {
            return Matrix::new(rows, cols, self.data.clone());
        }

        // stride between consecutive i_n at fixed remaining indices
        let inner: usize = self.shape[..mode].iter().product();
        let outer: usize = self.shape[mode + 1..].iter().product();
        let mut out = Matrix::zeros(rows, cols);
        // walk the tensor once: offset = lo + inner * (i_n + rows * hi)
        for hi in 0..outer {
            for i in 0..rows {
                let base = inner * (i + rows * hi);
                for lo in 0..inner {
                    out.set(i, lo + inner * hi, self.data[base + lo]);
                }
            }
        }
        Ok(out)
    }
}

/// Frobenius inner product of two tensors of identical shape.
pub fn inner_product(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            expected: x.shape().to_vec(),
            got: y.shape().to_vec(),
        });
    }
    Ok(x.data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| a * b)
        .sum())
}
