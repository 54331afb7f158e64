//! Property tests for the multilinear kernels and their algebraic identities.

use proptest::prelude::*;

use cp_altls::diagnostics::sin_angle;
use cp_altls::matrix::{diag_part, hadamard, khatri_rao, khatri_rao_list, kronecker, offdiag_part};
use cp_altls::tensor::inner_product;
use cp_altls::{DenseTensor, KruskalModel, Matrix};

fn entry() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(r, c)| {
        proptest::collection::vec(entry(), r * c)
            .prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

fn tensor() -> impl Strategy<Value = DenseTensor> {
    (1usize..=4)
        .prop_flat_map(|order| proptest::collection::vec(2usize..=4, order))
        .prop_flat_map(|shape| {
            let len: usize = shape.iter().product();
            proptest::collection::vec(entry(), len)
                .prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
        })
}

fn model() -> impl Strategy<Value = KruskalModel> {
    (2usize..=3, 1usize..=3)
        .prop_flat_map(|(order, rank)| {
            (
                proptest::collection::vec(2usize..=5, order),
                Just(rank),
                proptest::collection::vec(-2.0..2.0f64, rank),
            )
        })
        .prop_flat_map(|(shape, rank, weights)| {
            let total: usize = shape.iter().map(|&e| e * rank).sum();
            proptest::collection::vec(entry(), total).prop_map(move |data| {
                let mut offset = 0;
                let factors = shape
                    .iter()
                    .map(|&extent| {
                        let m = Matrix::new(
                            extent,
                            rank,
                            data[offset..offset + extent * rank].to_vec(),
                        )
                        .unwrap();
                        offset += extent * rank;
                        m
                    })
                    .collect();
                KruskalModel::new(weights.clone(), factors).unwrap()
            })
        })
}

fn rel_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_squared_equals_self_inner_product(x in tensor()) {
        let norm = x.frobenius_norm();
        let inner = inner_product(&x, &x).unwrap();
        prop_assert!(rel_close(norm * norm, inner, 1e-13, inner.abs()));
    }

    #[test]
    fn khatri_rao_gram_is_hadamard_of_grams(
        a in matrix(1..=5, 1..=4),
        b in matrix(1..=5, 1..=4),
    ) {
        // align the column counts; this is the identity the solver uses for H
        let cols = a.cols().min(b.cols());
        let trim = |m: &Matrix| {
            let mut t = Matrix::zeros(m.rows(), cols);
            for j in 0..cols {
                for i in 0..m.rows() {
                    t.set(i, j, m.get(i, j));
                }
            }
            t
        };
        let a = trim(&a);
        let b = trim(&b);
        let lhs = khatri_rao(&a, &b).unwrap().gram();
        let rhs = hadamard(&a.gram(), &b.gram()).unwrap();
        let scale = lhs.norm_max().max(rhs.norm_max());
        prop_assert!(lhs.sub(&rhs).unwrap().norm_max() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn khatri_rao_columns_are_kronecker_products(
        a in matrix(1..=4, 1..=3),
        b in matrix(1..=4, 1..=3),
    ) {
        let cols = a.cols().min(b.cols());
        prop_assume!(a.cols() == b.cols() || cols >= 1);
        if a.cols() != b.cols() {
            return Ok(());
        }
        let kr = khatri_rao(&a, &b).unwrap();
        for k in 0..cols {
            let a_col = Matrix::new(a.rows(), 1, a.col(k).to_vec()).unwrap();
            let b_col = Matrix::new(b.rows(), 1, b.col(k).to_vec()).unwrap();
            let kron = kronecker(&a_col, &b_col);
            prop_assert_eq!(kr.col(k), kron.col(0));
        }
    }

    #[test]
    fn matricization_of_kruskal_model_factors(m in model()) {
        // X_(n) == A^(n) Lambda (khatri-rao of the others, decreasing order)^T
        let x = m.reconstruct();
        let rank = m.rank();
        for n in 0..m.order() {
            let unfolded = x.matricize(n + 1).unwrap();
            let others: Vec<&Matrix> = (0..m.order())
                .rev()
                .filter(|&mode| mode != n)
                .map(|mode| m.factor(mode))
                .collect();
            let k = khatri_rao_list(&others, rank).unwrap();
            let mut a_lambda = m.factor(n).clone();
            for r in 0..rank {
                let w = m.weights()[r];
                for v in a_lambda.col_mut(r) {
                    *v *= w;
                }
            }
            let rhs = a_lambda.matmul(&k.transpose()).unwrap();
            let scale = unfolded.norm_max().max(1.0);
            prop_assert!(
                unfolded.sub(&rhs).unwrap().norm_max() <= 1e-12 * scale,
                "mode {} mismatch", n
            );
        }
    }

    #[test]
    fn diag_offdiag_decomposition(a in matrix(1..=6, 1..=6)) {
        if a.rows() != a.cols() {
            return Ok(());
        }
        let back = diag_part(&a).unwrap().add(&offdiag_part(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn norms_match_brute_force(a in matrix(1..=5, 1..=5)) {
        let brute_max = a.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        prop_assert_eq!(a.norm_max(), brute_max);
        let brute_col = (0..a.cols())
            .map(|j| a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        prop_assert!((a.norm_one_two() - brute_col).abs() <= 1e-15 * brute_col.max(1.0));
    }

    #[test]
    fn sin_angle_is_symmetric_and_sign_invariant(
        u in proptest::collection::vec(entry(), 2..8),
        v in proptest::collection::vec(entry(), 2..8),
    ) {
        let len = u.len().min(v.len());
        let u = &u[..len];
        let v = &v[..len];
        prop_assume!(u.iter().any(|&x| x.abs() > 1e-3));
        prop_assume!(v.iter().any(|&x| x.abs() > 1e-3));
        let s = sin_angle(u, v).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, sin_angle(v, u).unwrap());
        let neg_u: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert_eq!(s, sin_angle(&neg_u, v).unwrap());
    }

    #[test]
    fn tensor_file_round_trips(x in tensor()) {
        let mut text = Vec::new();
        cp_altls::io::write_tensor_text(&x, &mut text).unwrap();
        let back = cp_altls::io::read_tensor_text(std::io::BufReader::new(&text[..])).unwrap();
        prop_assert_eq!(&back, &x);

        let mut binary = Vec::new();
        cp_altls::io::write_tensor_binary(&x, &mut binary).unwrap();
        let back = cp_altls::io::read_tensor_binary(&mut &binary[..]).unwrap();
        prop_assert_eq!(&back, &x);
    }
}
