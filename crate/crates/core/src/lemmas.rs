//! Executable numeric oracles for the technical inequalities underpinning
//! the convergence proofs. Each oracle measures every quantity appearing in
//! its inequality directly from the inputs, evaluates the hypotheses, and
//! reports the two sides; inequalities whose hypotheses fail are reported
//! unverified rather than asserted.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{diag_part, dot, norm2, offdiag_part, Matrix};
use crate::rng::StreamRng;

/// The eight verified statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaId {
    /// Gram-matrix entries of two nearby normalized-column matrices.
    InnerProdIncoherent,
    /// Off-diagonal (1,2)-norm of the cross Gram against an orthonormal basis.
    InnerProdOrthogonal,
    /// Inverses of two unit-diagonal matrices stay entrywise close.
    Inverse,
    /// Inverse of one unit-diagonal matrix stays close to the identity.
    InverseCorollary,
    /// Diagonal/off-diagonal structure of a product near the identity.
    ProductOrthogonal,
    /// Column angles after normalizing against an orthonormal basis.
    NormalizationOrthogonal,
    /// Entrywise perturbation bounds for a product of perturbed matrices.
    ProductIncoherent,
    /// Column angles after normalizing against a normalized-column basis.
    NormalizationIncoherent,
}

impl LemmaId {
    pub const ALL: [LemmaId; 8] = [
        LemmaId::InnerProdIncoherent,
        LemmaId::InnerProdOrthogonal,
        LemmaId::Inverse,
        LemmaId::InverseCorollary,
        LemmaId::ProductOrthogonal,
        LemmaId::NormalizationOrthogonal,
        LemmaId::ProductIncoherent,
        LemmaId::NormalizationIncoherent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::InnerProdIncoherent => "A1-innerprod-i",
            LemmaId::InnerProdOrthogonal => "A2-innerprod-o",
            LemmaId::Inverse => "A3-inverse",
            LemmaId::InverseCorollary => "A3c-corollary",
            LemmaId::ProductOrthogonal => "A4-product-o",
            LemmaId::NormalizationOrthogonal => "A5-normalization-o",
            LemmaId::ProductIncoherent => "A6-product-i",
            LemmaId::NormalizationIncoherent => "A7-normalization-i",
        }
    }
}

/// Inputs for one oracle evaluation, shaped per lemma.
#[derive(Debug, Clone)]
pub enum LemmaInputs {
    /// Two `m x n` matrices with normalized columns and nonnegative paired
    /// inner products (the second orthonormal where the lemma requires it).
    MatrixPair { a: Matrix, b: Matrix },
    /// Two square matrices with unit diagonals.
    SquarePair { a: Matrix, b: Matrix },
    /// One square matrix with unit diagonal.
    Square { a: Matrix },
    /// A factored-column triple: `basis`, weights, and the mixing matrix
    /// (the analyzed matrix is `basis * v`).
    Normalization {
        basis: Matrix,
        lambda: Vec<f64>,
        v: Matrix,
    },
    /// Two matrices and their perturbed copies.
    PerturbedPair {
        a: Matrix,
        a_tilde: Matrix,
        b: Matrix,
        b_tilde: Matrix,
    },
}

/// One verified (or skipped) inequality.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    /// Lettered part for multi-inequality lemmas, empty otherwise.
    pub part: &'static str,
    pub hypotheses_hold: bool,
    pub lhs: f64,
    pub bound: f64,
    /// `bound - lhs`; meaningful only when the hypotheses hold.
    pub margin: f64,
}

impl LemmaReport {
    fn new(lemma: LemmaId, part: &'static str, hypotheses_hold: bool, lhs: f64, bound: f64) -> Self {
        Self {
            lemma,
            part,
            hypotheses_hold,
            lhs,
            bound,
            margin: bound - lhs,
        }
    }

    /// Margin tolerance from the suite contract: a verified inequality may
    /// undershoot by at most `1e-10 * max(1, bound)` of rounding slack.
    pub fn violates(&self) -> bool {
        self.hypotheses_hold && self.margin < -1e-10 * self.bound.abs().max(1.0)
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn sin_angle_cols(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.cols() {
        let cos = (dot(a.col(j), b.col(j)) / (norm2(a.col(j)) * norm2(b.col(j))))
            .clamp(-1.0, 1.0);
        worst = worst.max((1.0 - cos * cos).max(0.0).sqrt());
    }
    worst
}

fn columns_normalized(m: &Matrix, tol: f64) -> bool {
    (0..m.cols()).all(|j| (norm2(m.col(j)) - 1.0).abs() <= tol)
}

fn columns_orthonormal(m: &Matrix, tol: f64) -> bool {
    m.gram()
        .sub(&Matrix::identity(m.cols()))
        .map(|d| d.norm_max() <= tol)
        .unwrap_or(false)
}

fn paired_inner_products_nonnegative(a: &Matrix, b: &Matrix) -> bool {
    (0..a.cols()).all(|j| dot(a.col(j), b.col(j)) >= 0.0)
}

fn unit_diagonal(m: &Matrix, tol: f64) -> bool {
    m.rows() == m.cols() && (0..m.rows()).all(|i| (m.get(i, i) - 1.0).abs() <= tol)
}

fn expect_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "lemma input shapes",
            expected: a.rows() * a.cols(),
            got: b.rows() * b.cols(),
        });
    }
    Ok(())
}

/// Evaluate every inequality of the identified lemma on the given inputs.
pub fn lemma_oracle(id: LemmaId, inputs: &LemmaInputs) -> Result<Vec<LemmaReport>> {
    match (id, inputs) {
        (LemmaId::InnerProdIncoherent, LemmaInputs::MatrixPair { a, b }) => {
            expect_same_shape(a, b)?;
            let hypotheses = columns_normalized(a, 1e-8)
                && columns_normalized(b, 1e-8)
                && paired_inner_products_nonnegative(a, b);
            let eps = sin_angle_cols(a, b);
            let bt = b.transpose();
            let bta = bt.matmul(a)?;
            let btb = bt.matmul(b)?;
            let ata = a.gram();
            Ok(vec![
                LemmaReport::new(
                    id,
                    "a",
                    hypotheses,
                    bta.sub(&btb)?.norm_max(),
                    SQRT2 * eps,
                ),
                LemmaReport::new(
                    id,
                    "b",
                    hypotheses,
                    ata.sub(&btb)?.norm_max(),
                    2.0 * SQRT2 * eps,
                ),
            ])
        }
        (LemmaId::InnerProdOrthogonal, LemmaInputs::MatrixPair { a, b }) => {
            expect_same_shape(a, b)?;
            let hypotheses = columns_normalized(a, 1e-8)
                && columns_orthonormal(b, 1e-8)
                && paired_inner_products_nonnegative(a, b);
            let eps = sin_angle_cols(a, b);
            let lhs = offdiag_part(&b.transpose().matmul(a)?)?.norm_one_two();
            Ok(vec![LemmaReport::new(id, "", hypotheses, lhs, eps)])
        }
        (LemmaId::Inverse, LemmaInputs::SquarePair { a, b }) => {
            expect_same_shape(a, b)?;
            let n = a.rows() as f64;
            let eps = offdiag_part(&a.sub(b)?)?.norm_max();
            let eps_prime = offdiag_part(b)?.norm_max();
            let denom = 1.0 - (n - 1.0) * (eps + eps_prime);
            let denom_b = 1.0 - (n - 1.0) * eps_prime;
            let hypotheses =
                unit_diagonal(a, 1e-12) && unit_diagonal(b, 1e-12) && denom > 0.0;
            if !hypotheses {
                return Ok(vec![LemmaReport::new(id, "a", false, f64::NAN, f64::NAN)]);
            }
            let a_inv = linalg::invert(a)?;
            let b_inv = linalg::invert(b)?;
            Ok(vec![
                LemmaReport::new(
                    id,
                    "a",
                    hypotheses,
                    a_inv.sub(&b_inv)?.norm_max(),
                    eps / (denom * denom_b),
                ),
                LemmaReport::new(
                    id,
                    "b",
                    hypotheses,
                    b_inv.norm_max(),
                    1.0 / denom_b,
                ),
                LemmaReport::new(
                    id,
                    "c",
                    hypotheses,
                    offdiag_part(&b_inv)?.norm_max(),
                    (n - 1.0) * eps_prime / denom_b,
                ),
            ])
        }
        (LemmaId::InverseCorollary, LemmaInputs::Square { a }) => {
            let n = a.rows() as f64;
            let eps = offdiag_part(a)?.norm_max();
            let denom = 1.0 - (n - 1.0) * eps;
            let hypotheses = unit_diagonal(a, 1e-12) && denom > 0.0;
            if !hypotheses {
                return Ok(vec![LemmaReport::new(id, "", false, f64::NAN, f64::NAN)]);
            }
            let a_inv = linalg::invert(a)?;
            let lhs = a_inv.sub(&Matrix::identity(a.rows()))?.norm_max();
            Ok(vec![LemmaReport::new(id, "", hypotheses, lhs, eps / denom)])
        }
        (LemmaId::ProductOrthogonal, LemmaInputs::SquarePair { a, b }) => {
            expect_same_shape(a, b)?;
            let n = a.rows() as f64;
            let diag_a = diag_part(a)?;
            let eps_a = diag_a.sub(&Matrix::identity(a.rows()))?.norm_max();
            let eps_a_prime = offdiag_part(a)?.norm_one_two();
            let eps_b = b.sub(&Matrix::identity(b.rows()))?.norm_max();
            let hypotheses = diag_a.norm_max() <= 1.0 + 1e-12 && eps_a <= 1.0 && eps_b <= 1.0;
            let ab = a.matmul(b)?;
            let lhs_a = diag_part(&ab)?
                .sub(&Matrix::identity(ab.rows()))?
                .norm_max();
            let lhs_b = offdiag_part(&ab)?.norm_one_two();
            Ok(vec![
                LemmaReport::new(
                    id,
                    "a",
                    hypotheses,
                    lhs_a,
                    1.0 - (1.0 - eps_a) * (1.0 - eps_b) + (n - 1.0) * eps_a_prime * eps_b,
                ),
                LemmaReport::new(
                    id,
                    "b",
                    hypotheses,
                    lhs_b,
                    (n - 1.0).sqrt() * eps_b
                        + eps_a_prime * (1.0 + eps_b)
                        + (n - 1.0) * eps_a_prime * eps_b,
                ),
            ])
        }
        (LemmaId::NormalizationOrthogonal, LemmaInputs::Normalization { basis, lambda, v }) => {
            let n = basis.rows();
            let (w, kappa) = mixing_ratio(lambda, v, n)?;
            let eps = diag_part(&w)?.sub(&Matrix::identity(n))?.norm_max();
            let eps_prime = offdiag_part(&w)?.norm_one_two();
            let hypotheses = columns_orthonormal(basis, 1e-8) && eps < 1.0;
            let analyzed = basis.matmul(v)?;
            let lhs = sin_angle_cols(&analyzed, basis);
            let bound = kappa * eps_prime / (1.0 - eps);
            Ok(vec![LemmaReport::new(id, "", hypotheses, lhs, bound)])
        }
        (
            LemmaId::ProductIncoherent,
            LemmaInputs::PerturbedPair {
                a,
                a_tilde,
                b,
                b_tilde,
            },
        ) => {
            expect_same_shape(a, a_tilde)?;
            expect_same_shape(b, b_tilde)?;
            expect_same_shape(a, b)?;
            let n = a.rows() as f64;
            let da = a_tilde.sub(a)?;
            let db = b_tilde.sub(b)?;
            let eps_a = diag_part(&da)?.norm_max();
            let eps_a_prime = offdiag_part(&da)?.norm_max();
            let eps_b = diag_part(&db)?.norm_max();
            let eps_b_prime = offdiag_part(&db)?.norm_max();
            let product_diff = a_tilde.matmul(b_tilde)?.sub(&a.matmul(b)?)?;
            let lhs_a = diag_part(&product_diff)?.norm_max();
            let lhs_b = offdiag_part(&product_diff)?.norm_max();
            let bound_a = (n - 1.0) * offdiag_part(a_tilde)?.norm_max() * eps_b_prime
                + diag_part(a_tilde)?.norm_max() * eps_b
                + (n - 1.0) * offdiag_part(b)?.norm_max() * eps_a_prime
                + diag_part(b)?.norm_max() * eps_a;
            let bound_b = (n - 1.0) * a_tilde.norm_max() * eps_b_prime
                + offdiag_part(a_tilde)?.norm_max() * eps_b
                + (n - 1.0) * b.norm_max() * eps_a_prime
                + offdiag_part(b)?.norm_max() * eps_a;
            Ok(vec![
                LemmaReport::new(id, "a", true, lhs_a, bound_a),
                LemmaReport::new(id, "b", true, lhs_b, bound_b),
            ])
        }
        (LemmaId::NormalizationIncoherent, LemmaInputs::Normalization { basis, lambda, v }) => {
            let n = basis.rows();
            let (w, kappa) = mixing_ratio(lambda, v, n)?;
            let eps = diag_part(&w)?.sub(&Matrix::identity(n))?.norm_max();
            let eps_prime = offdiag_part(&w)?.norm_max();
            let c = (n as f64 - 1.0) * kappa * eps_prime;
            let gap = (1.0 - eps) * (1.0 - eps) - 4.0 * c - c * c;
            let hypotheses = columns_normalized(basis, 1e-8) && eps < 1.0 && gap > 0.0;
            let analyzed = basis.matmul(v)?;
            let lhs = sin_angle_cols(&analyzed, basis);
            let bound = if gap > 0.0 {
                (2.0 / gap).sqrt() * c
            } else {
                f64::NAN
            };
            Ok(vec![LemmaReport::new(id, "", hypotheses, lhs, bound)])
        }
        _ => Err(Error::InvalidParameter("inputs do not match the lemma id")),
    }
}

/// `W = diag(lambda)^{-1} V` together with the weight ratio kappa.
fn mixing_ratio(lambda: &[f64], v: &Matrix, n: usize) -> Result<(Matrix, f64)> {
    if lambda.len() != n || v.rows() != n || v.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "normalization lemma inputs",
            expected: n,
            got: lambda.len(),
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &l in lambda {
        if l.abs() == 0.0 {
            return Err(Error::DegenerateInput("zero weight in lemma inputs"));
        }
        lo = lo.min(l.abs());
        hi = hi.max(l.abs());
    }
    let mut w = v.clone();
    for i in 0..n {
        for j in 0..n {
            w.set(i, j, v.get(i, j) / lambda[i]);
        }
    }
    Ok((w, hi / lo))
}

// ---------------------------------------------------------------------------
// hypothesis-satisfying random instances
// ---------------------------------------------------------------------------

fn gaussian(rows: usize, cols: usize, rng: &mut StreamRng) -> Matrix {
    Matrix::new(rows, cols, rng.normal_vec(rows * cols)).expect("consistent shape")
}

fn normalized_columns(mut m: Matrix) -> Matrix {
    for j in 0..m.cols() {
        let norm = norm2(m.col(j));
        for v in m.col_mut(j) {
            *v /= norm;
        }
    }
    m
}

/// Flip columns of `a` so every paired inner product with `b` is nonnegative
/// (sign flips preserve the angle quantities the lemmas measure).
fn align_signs(mut a: Matrix, b: &Matrix) -> Matrix {
    for j in 0..a.cols() {
        if dot(a.col(j), b.col(j)) < 0.0 {
            for v in a.col_mut(j) {
                *v = -*v;
            }
        }
    }
    a
}

fn unit_diag_with_offdiag(n: usize, scale: f64, rng: &mut StreamRng) -> Matrix {
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m.set(i, j, scale * (2.0 * rng.uniform() - 1.0));
            }
        }
    }
    m
}

/// A random instance of the lemma's inputs with the hypotheses satisfied by
/// construction, for a base dimension `n >= 2`.
pub fn random_instance(id: LemmaId, n: usize, rng: &mut StreamRng) -> LemmaInputs {
    match id {
        LemmaId::InnerProdIncoherent => {
            let m = n + 1 + (rng.next_u64() % 4) as usize;
            let b = normalized_columns(gaussian(m, n, rng));
            let scale = 0.5 * rng.uniform();
            let a = normalized_columns(
                b.add(&gaussian(m, n, rng).scale(scale)).expect("same shape"),
            );
            LemmaInputs::MatrixPair {
                a: align_signs(a, &b),
                b,
            }
        }
        LemmaId::InnerProdOrthogonal => {
            let m = n + 1 + (rng.next_u64() % 4) as usize;
            let b = linalg::qr_orthonormal(&gaussian(m, m, rng), n);
            let scale = 0.5 * rng.uniform();
            let a = normalized_columns(
                b.add(&gaussian(m, n, rng).scale(scale)).expect("same shape"),
            );
            LemmaInputs::MatrixPair {
                a: align_signs(a, &b),
                b,
            }
        }
        LemmaId::Inverse => {
            // (n-1)(eps + eps') <= 0.9 by scaling the off-diagonal draws
            let budget = 0.9 / (n as f64 - 1.0);
            let split = rng.uniform();
            let b = unit_diag_with_offdiag(n, budget * split * 0.5, rng);
            let mut a = b.clone();
            let delta = budget * (1.0 - split) * 0.5;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        a.set(i, j, a.get(i, j) + delta * (2.0 * rng.uniform() - 1.0));
                    }
                }
            }
            LemmaInputs::SquarePair { a, b }
        }
        LemmaId::InverseCorollary => {
            let scale = 0.9 * rng.uniform() / (n as f64 - 1.0);
            LemmaInputs::Square {
                a: unit_diag_with_offdiag(n, scale, rng),
            }
        }
        LemmaId::ProductOrthogonal => {
            let eps_a = rng.uniform();
            let mut a = unit_diag_with_offdiag(n, 0.5 * rng.uniform(), rng);
            for i in 0..n {
                a.set(i, i, 1.0 - eps_a * rng.uniform());
            }
            let eps_b = rng.uniform();
            let mut b = Matrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    let base = if i == j { 1.0 } else { 0.0 };
                    b.set(i, j, base + eps_b * (2.0 * rng.uniform() - 1.0));
                }
            }
            LemmaInputs::SquarePair { a, b }
        }
        LemmaId::NormalizationOrthogonal => {
            let basis = linalg::qr_orthonormal(&gaussian(n, n, rng), n);
            let (lambda, v) = mixing_inputs(n, 0.3, rng);
            LemmaInputs::Normalization { basis, lambda, v }
        }
        LemmaId::ProductIncoherent => {
            let a = gaussian(n, n, rng).scale(0.5);
            let b = gaussian(n, n, rng).scale(0.5);
            let a_tilde = a.add(&gaussian(n, n, rng).scale(0.1)).expect("same shape");
            let b_tilde = b.add(&gaussian(n, n, rng).scale(0.1)).expect("same shape");
            LemmaInputs::PerturbedPair {
                a,
                a_tilde,
                b,
                b_tilde,
            }
        }
        LemmaId::NormalizationIncoherent => {
            let basis = normalized_columns(gaussian(n, n, rng));
            // choose the off-diagonal scale so that
            // 4c + c^2 < (1 - eps)^2 with c = (n-1) kappa eps'
            let eps_target = 0.3 * rng.uniform();
            let (lambda, kappa) = signed_weights(n, rng);
            let t = 0.8 * rng.uniform();
            let target = t * (1.0 - eps_target) * (1.0 - eps_target);
            let c = -2.0 + (4.0 + target).sqrt();
            let eps_prime = c / ((n as f64 - 1.0) * kappa);
            let mut w = Matrix::identity(n);
            for i in 0..n {
                w.set(i, i, 1.0 + eps_target * (2.0 * rng.uniform() - 1.0));
                for j in 0..n {
                    if i != j {
                        w.set(i, j, eps_prime * (2.0 * rng.uniform() - 1.0));
                    }
                }
            }
            let mut v = w;
            for i in 0..n {
                for j in 0..n {
                    v.set(i, j, v.get(i, j) * lambda[i]);
                }
            }
            LemmaInputs::Normalization { basis, lambda, v }
        }
    }
}

fn signed_weights(n: usize, rng: &mut StreamRng) -> (Vec<f64>, f64) {
    let lambda: Vec<f64> = (0..n)
        .map(|_| {
            let magnitude = 0.5 + 1.5 * rng.uniform();
            if rng.uniform() < 0.5 {
                -magnitude
            } else {
                magnitude
            }
        })
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &l in &lambda {
        lo = lo.min(l.abs());
        hi = hi.max(l.abs());
    }
    (lambda, hi / lo)
}

fn mixing_inputs(n: usize, eps_scale: f64, rng: &mut StreamRng) -> (Vec<f64>, Matrix) {
    let (lambda, _) = signed_weights(n, rng);
    let mut w = Matrix::identity(n);
    let offdiag = 0.3 * rng.uniform() / (n as f64 - 1.0).sqrt();
    for i in 0..n {
        w.set(i, i, 1.0 + eps_scale * (2.0 * rng.uniform() - 1.0));
        for j in 0..n {
            if i != j {
                w.set(i, j, offdiag * (2.0 * rng.uniform() - 1.0));
            }
        }
    }
    let mut v = w;
    for i in 0..n {
        for j in 0..n {
            v.set(i, j, v.get(i, j) * lambda[i]);
        }
    }
    (lambda, v)
}

// ---------------------------------------------------------------------------
// suite driver
// ---------------------------------------------------------------------------

/// One aggregated suite row: the binding (smallest-margin) inequality of a
/// lemma evaluation on one random instance.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub report: LemmaReport,
    pub instance_seed: u64,
}

impl SuiteRow {
    pub fn csv_header() -> &'static str {
        "lemma_id,seed,hypotheses_hold,lhs,bound,margin"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e}",
            self.report.lemma.as_str(),
            self.instance_seed,
            self.report.hypotheses_hold,
            self.report.lhs,
            self.report.bound,
            self.report.margin
        )
    }
}

/// Run every lemma oracle on `instances_per_lemma` random instances spanning
/// dimensions 2 through 10, one row per (lemma, instance).
pub fn run_suite(instances_per_lemma: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::with_capacity(8 * instances_per_lemma);
    for (lemma_index, id) in LemmaId::ALL.into_iter().enumerate() {
        for i in 0..instances_per_lemma {
            let instance_seed = seed
                .wrapping_mul(0x1000)
                .wrapping_add(i as u64)
                .wrapping_add((lemma_index as u64 + 1) << 56);
            let mut rng = StreamRng::new(instance_seed, crate::rng::Stream::Factors);
            let n = 2 + i % 9;
            let inputs = random_instance(id, n, &mut rng);
            let reports = lemma_oracle(id, &inputs)?;
            let binding = reports
                .into_iter()
                .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap())
                .expect("every lemma has at least one inequality");
            rows.push(SuiteRow {
                report: binding,
                instance_seed,
            });
        }
    }
    Ok(rows)
}
