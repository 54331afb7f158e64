//! Dense column-major matrices and the multilinear products the solvers use.

use crate::error::{Error, Result};

/// A dense real matrix stored column-major: element `(i, j)` lives at
/// `data[i + rows * j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row-major nested slice; handy in tests and parsers.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j] = v;
    }

    /// The `j`-th column as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dimension",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        // jki order: stream down columns of the output
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b_kj = other.get(k, j);
                if b_kj == 0.0 {
                    continue;
                }
                let a_col = self.col(k);
                let out_col = out.col_mut(j);
                for i in 0..self.rows {
                    out_col[i] += a_col[i] * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// The Gram matrix `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for i in 0..=j {
                let dot = dot(self.col(i), self.col(j));
                g.set(i, j, dot);
                g.set(j, i, dot);
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum-norm: the largest absolute entry (the (1, ∞)-norm).
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
    }

    /// (1, 2)-norm: the largest column 2-norm.
    pub fn norm_one_two(&self) -> f64 {
        (0..self.cols)
            .map(|j| dot(self.col(j), self.col(j)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Entrywise sum of `self + other`.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "matrix addition")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "matrix subtraction")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    fn check_same_shape(&self, other: &Matrix, context: &'static str) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.rows,
                got: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.cols,
                got: other.cols,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Khatri–Rao product: column `k` of the result is the Kronecker product of
/// column `k` of `a` with column `k` of `b`; element `((i-1)J + j, k)` is
/// `a[i,k] * b[j,k]`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "khatri-rao column count",
            expected: a.cols(),
            got: b.cols(),
        });
    }
    let (i_dim, j_dim, k_dim) = (a.rows(), b.rows(), a.cols());
    let mut out = Matrix::zeros(i_dim * j_dim, k_dim);
    for k in 0..k_dim {
        let a_col = a.col(k);
        let b_col = b.col(k);
        let out_col = out.col_mut(k);
        for (i, &av) in a_col.iter().enumerate() {
            let base = i * j_dim;
            for (j, &bv) in b_col.iter().enumerate() {
                out_col[base + j] = av * bv;
            }
        }
    }
    Ok(out)
}

/// Khatri–Rao product over a list of matrices in the given order, evaluated
/// right-to-left pairwise. An empty list yields the `1 x cols` all-ones row
/// (the empty-product convention).
pub fn khatri_rao_list(matrices: &[&Matrix], cols: usize) -> Result<Matrix> {
    match matrices.split_last() {
        None => Matrix::new(1, cols, vec![1.0; cols]),
        Some((last, rest)) => {
            let mut acc = (*last).clone();
            for m in rest.iter().rev() {
                acc = khatri_rao(m, &acc)?;
            }
            Ok(acc)
        }
    }
}

/// Kronecker product: element `((i-1)K + k, (j-1)L + l)` is `a[i,j] * b[k,l]`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for j in 0..a.cols() {
        for l in 0..b.cols() {
            let out_j = j * b.cols() + l;
            for i in 0..a.rows() {
                let a_ij = a.get(i, j);
                for k in 0..b.rows() {
                    out.set(i * b.rows() + k, out_j, a_ij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Hadamard (entrywise) product of equally shaped matrices.
pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "hadamard product")?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x * y)
        .collect();
    Matrix::new(a.rows(), a.cols(), data)
}

/// Hadamard product over a list. An empty list yields the all-ones matrix of
/// the given square size.
pub fn hadamard_list(matrices: &[&Matrix], size: usize) -> Result<Matrix> {
    match matrices.split_first() {
        None => Matrix::new(size, size, vec![1.0; size * size]),
        Some((first, rest)) => {
            let mut acc = (*first).clone();
            for m in rest {
                acc = hadamard(&acc, m)?;
            }
            Ok(acc)
        }
    }
}

/// The diagonal part of a square matrix (off-diagonal entries zeroed).
pub fn diag_part(a: &Matrix) -> Result<Matrix> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        out.set(i, i, a.get(i, i));
    }
    Ok(out)
}

/// The off-diagonal part of a square matrix (diagonal zeroed), so that
/// `diag_part(a) + offdiag_part(a) == a`.
pub fn offdiag_part(a: &Matrix) -> Result<Matrix> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        out.set(i, i, 0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn khatri_rao_of_identities() {
        let i2 = Matrix::identity(2);
        let kr = khatri_rao(&i2, &i2).unwrap();
        assert_eq!(kr.rows(), 4);
        assert_eq!(kr.cols(), 2);
        // columns are e1 and e4
        assert_eq!(kr.col(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(kr.col(1), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn khatri_rao_elementwise_formula() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let kr = khatri_rao(&a, &b).unwrap();
        let expected = Matrix::from_rows(&[&[0.0, 2.0], &[1.0, 0.0], &[0.0, 4.0], &[3.0, 0.0]]);
        assert_eq!(kr, expected);
    }

    #[test]
    fn khatri_rao_with_ones_row_is_identity_op() {
        let a = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0], &[2.0, 0.0]]);
        let ones = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(khatri_rao(&a, &ones).unwrap(), a);
    }

    #[test]
    fn khatri_rao_rejects_column_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        assert!(matches!(
            khatri_rao(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn khatri_rao_column_is_kronecker_of_columns() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let b = Matrix::from_rows(&[&[7.0, 8.0], &[9.0, 10.0]]);
        let kr = khatri_rao(&a, &b).unwrap();
        for k in 0..2 {
            let a_col = Matrix::new(3, 1, a.col(k).to_vec()).unwrap();
            let b_col = Matrix::new(2, 1, b.col(k).to_vec()).unwrap();
            let kron = kronecker(&a_col, &b_col);
            assert_eq!(kr.col(k), kron.col(0));
        }
    }

    #[test]
    fn kronecker_scalar_scales() {
        let c = Matrix::new(1, 1, vec![3.0]).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(kronecker(&c, &b), b.scale(3.0));
    }

    #[test]
    fn kronecker_of_identities() {
        let i2 = Matrix::identity(2);
        assert_eq!(kronecker(&i2, &i2), Matrix::identity(4));
    }

    #[test]
    fn kronecker_direct_formula() {
        let a = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Matrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let k = kronecker(&a, &b);
        let expected = Matrix::from_rows(&[&[3.0, 6.0], &[4.0, 8.0]]);
        assert_eq!(k, expected);
    }

    #[test]
    fn hadamard_with_ones_and_zeros() {
        let a = Matrix::from_rows(&[&[1.0, -2.0], &[3.0, 4.0]]);
        let ones = Matrix::new(2, 2, vec![1.0; 4]).unwrap();
        let zero = Matrix::zeros(2, 2);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
        assert_eq!(hadamard(&a, &zero).unwrap(), zero);
    }

    #[test]
    fn hadamard_elementwise() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let expected = Matrix::from_rows(&[&[5.0, 12.0], &[21.0, 32.0]]);
        assert_eq!(hadamard(&a, &b).unwrap(), expected);
    }

    #[test]
    fn hadamard_rejects_shape_mismatch() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(hadamard(&a, &b).is_err());
    }

    #[test]
    fn diag_offdiag_split() {
        let i2 = Matrix::identity(2);
        assert_eq!(diag_part(&i2).unwrap(), i2);
        assert_eq!(offdiag_part(&i2).unwrap(), Matrix::zeros(2, 2));

        let ones = Matrix::new(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(diag_part(&ones).unwrap(), Matrix::identity(2));
        let expected = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(offdiag_part(&ones).unwrap(), expected);
    }

    #[test]
    fn diag_part_rejects_non_square() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(diag_part(&a), Err(Error::NotSquare { .. })));
        assert!(matches!(offdiag_part(&a), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn norms() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.norm_max(), 1.0);
        assert_eq!(i2.norm_one_two(), 1.0);

        let a = Matrix::from_rows(&[&[3.0, 0.0], &[4.0, 0.0]]);
        assert_eq!(a.norm_one_two(), 5.0);

        let z = Matrix::zeros(3, 3);
        assert_eq!(z.norm_max(), 0.0);
        assert_eq!(z.norm_one_two(), 0.0);
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, Matrix::from_rows(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn gram_matches_transpose_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let g = a.gram();
        let g2 = a.transpose().matmul(&a).unwrap();
        for (x, y) in g.data().iter().zip(g2.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn khatri_rao_list_empty_is_ones_row() {
        let kr = khatri_rao_list(&[], 3).unwrap();
        assert_eq!(kr, Matrix::new(1, 3, vec![1.0; 3]).unwrap());
    }
}
