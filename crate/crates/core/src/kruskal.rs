//! Weighted rank-one sum representation of a tensor (the Kruskal form).

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

/// Weights `lambda` together with one factor matrix per mode; column `r` of
/// each factor is the mode-wise direction of the `r`-th rank-one component.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel {
    weights: Vec<f64>,
    factors: Vec<Matrix>,
}

impl KruskalModel {
    pub fn new(weights: Vec<f64>, factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one mode"));
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one component"));
        }
        for f in &factors {
            if f.cols() != weights.len() {
                return Err(Error::DimensionMismatch {
                    context: "factor column count",
                    expected: weights.len(),
                    got: f.cols(),
                });
            }
        }
        Ok(Self { weights, factors })
    }

    /// Number of components R.
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    pub fn factor_mut(&mut self, mode: usize) -> &mut Matrix {
        &mut self.factors[mode]
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) {
        debug_assert_eq!(weights.len(), self.rank());
        self.weights = weights;
    }

    /// The tensor shape this model reconstructs.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Largest deviation of any factor column from unit 2-norm.
    pub fn max_column_norm_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in &self.factors {
            for r in 0..f.cols() {
                let norm = crate::matrix::norm2(f.col(r));
                worst = worst.max((norm - 1.0).abs());
            }
        }
        worst
    }

    /// Evaluate the weighted sum of rank-one outer products.
    ///
    /// The rank-one block for component `r` is accumulated by successive
    /// expansion over modes, which lays entries out in exactly the tensor's
    /// colexicographic order.
    pub fn reconstruct(&self) -> DenseTensor {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        let mut data = vec![0.0; total];
        let mut block = Vec::with_capacity(total);
        for r in 0..self.rank() {
            block.clear();
            block.push(self.weights[r]);
            for factor in &self.factors {
                let col = factor.col(r);
                let prev_len = block.len();
                let mut expanded = Vec::with_capacity(prev_len * col.len());
                for &a in col {
                    expanded.extend(block.iter().map(|&v| v * a));
                }
                block = expanded;
            }
            for (acc, v) in data.iter_mut().zip(&block) {
                *acc += v;
            }
        }
        DenseTensor::new(shape, data).expect("factor shapes are validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::inner_product;

    fn unit_column(len: usize, which: usize) -> Matrix {
        let mut m = Matrix::zeros(len, 1);
        m.set(which, 0, 1.0);
        m
    }

    #[test]
    fn rank_one_basis_model() {
        let model = KruskalModel::new(
            vec![1.0],
            vec![unit_column(2, 0), unit_column(3, 0), unit_column(2, 0)],
        )
        .unwrap();
        let x = model.reconstruct();
        assert_eq!(x.get(&[0, 0, 0]), 1.0);
        assert_eq!(inner_product(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn zero_weights_give_zero_tensor() {
        let f = Matrix::from_rows(&[&[0.6, 0.0], &[0.8, 1.0]]);
        let model = KruskalModel::new(vec![0.0, 0.0], vec![f.clone(), f.clone(), f]).unwrap();
        let x = model.reconstruct();
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruct_matches_triple_loop_oracle() {
        // fixed R=2, N=3 model; oracle sums the outer products element by element
        let a = Matrix::from_rows(&[&[0.3, -1.2], &[0.7, 0.4], &[-0.2, 0.9]]);
        let b = Matrix::from_rows(&[&[1.1, 0.2], &[-0.5, 0.8]]);
        let c = Matrix::from_rows(&[&[0.9, -0.3], &[0.1, 0.6], &[0.4, 0.5], &[-0.7, 0.2]]);
        let weights = vec![2.5, -1.3];
        let model = KruskalModel::new(weights.clone(), vec![a.clone(), b.clone(), c.clone()])
            .unwrap();
        let x = model.reconstruct();

        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..4 {
                    let mut expected = 0.0;
                    for r in 0..2 {
                        expected += weights[r] * a.get(i, r) * b.get(j, r) * c.get(k, r);
                    }
                    let rel = (x.get(&[i, j, k]) - expected).abs()
                        / expected.abs().max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                }
            }
        }
        assert!(worst < 1e-13, "worst relative deviation {worst}");
    }

    #[test]
    fn rejects_inconsistent_rank() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(KruskalModel::new(vec![1.0, 1.0], vec![a, b]).is_err());
    }
}
