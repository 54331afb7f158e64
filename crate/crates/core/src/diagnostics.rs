//! Convergence metrics: the per-iteration angle error, coherence, weight
//! conditioning, empirical order-of-convergence fits, and the polynomial
//! convergence bound check.

use crate::error::{Error, Result};
use crate::kruskal::KruskalModel;
use crate::matrix::{dot, norm2, Matrix};

/// Saturation floor for order fits: entries at or below this are treated as
/// floating-point noise.
pub const SATURATION_FLOOR: f64 = 1e-13;

/// Which sweep produced a trace record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// The k = 0 record describing the initialization.
    Init,
    /// A standard AltLS sweep.
    Regular,
    /// A coherence-reduced sweep.
    Reduced,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Regular => "regular",
            Phase::Reduced => "reduced",
        }
    }
}

/// One per-iteration measurement row.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Max |sin| angle to the ground truth, when a truth model is available.
    pub epsilon: Option<f64>,
    /// `|X - X_k| / |X|`.
    pub relative_error: f64,
    /// `max_r |lambda_r^2 - (lambda_r^(k))^2|`, when truth is available.
    pub weight_error: Option<f64>,
    pub phase: Phase,
    pub wall_seconds: f64,
}

/// Iteration history of a solver run. Iterations are strictly increasing
/// from 0, where k = 0 describes the initial model.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        match self.records.last() {
            None => assert_eq!(record.iteration, 0, "trace must start at iteration 0"),
            Some(prev) => assert!(
                record.iteration > prev.iteration,
                "iterations must be strictly increasing"
            ),
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// The epsilon column as a dense sequence indexed by iteration; `None`
    /// if any record lacks an epsilon value.
    pub fn epsilon_sequence(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.epsilon).collect()
    }

    /// Iteration at which the phase flips away from `Reduced`, if it does.
    pub fn phase_boundary(&self) -> Option<usize> {
        let mut seen_reduced = false;
        for r in &self.records {
            match r.phase {
                Phase::Reduced => seen_reduced = true,
                Phase::Regular if seen_reduced => return Some(r.iteration),
                _ => {}
            }
        }
        None
    }
}

/// |sin| of the angle between the spans of two nonzero vectors.
///
/// Evaluated as `|u - v| * |u + v| / 2` on the normalized vectors, which
/// equals `sqrt(1 - cos^2)` exactly but stays accurate to machine epsilon
/// for nearly parallel inputs (the naive form loses half the digits to
/// cancellation and floors near 1e-8). Exactly symmetric in its arguments
/// and under sign flips: negating either argument just swaps the two
/// factors.
pub fn sin_angle(u: &[f64], v: &[f64]) -> Result<f64> {
    let nu = norm2(u);
    let nv = norm2(v);
    if nu < 1e-300 || nv < 1e-300 {
        return Err(Error::DegenerateInput("zero vector in sin_angle"));
    }
    let mut diff_sq = 0.0;
    let mut sum_sq = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        let x = a / nu;
        let y = b / nv;
        diff_sq += (x - y) * (x - y);
        sum_sq += (x + y) * (x + y);
    }
    Ok((diff_sq.sqrt() * sum_sq.sqrt() / 2.0).clamp(0.0, 1.0))
}

/// Component pairing strategy for comparing a model against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Component r of the model corresponds to component r of the truth
    /// (appropriate when the run was initialized from a perturbation).
    #[default]
    Identity,
    /// Greedily match the largest mode-averaged |cosine| pairs.
    GreedyCosine,
}

/// Resolve the component pairing: `sigma[r]` is the model component matched
/// to truth component `r`.
pub fn pair_components(
    model: &KruskalModel,
    truth: &KruskalModel,
    pairing: Pairing,
) -> Result<Vec<usize>> {
    check_compatible(model, truth)?;
    let r = truth.rank();
    match pairing {
        Pairing::Identity => Ok((0..r).collect()),
        Pairing::GreedyCosine => {
            // mode-averaged |cos| between model component i and truth component j
            let n_modes = model.order() as f64;
            let mut cosines = Matrix::zeros(r, r);
            for mode in 0..model.order() {
                let mf = model.factor(mode);
                let tf = truth.factor(mode);
                for i in 0..r {
                    let mi = mf.col(i);
                    let ni = norm2(mi);
                    for j in 0..r {
                        let tj = tf.col(j);
                        let nj = norm2(tj);
                        if ni < 1e-300 || nj < 1e-300 {
                            return Err(Error::DegenerateInput(
                                "zero factor column in pairing",
                            ));
                        }
                        let c = (dot(mi, tj) / (ni * nj)).abs();
                        cosines.set(i, j, cosines.get(i, j) + c / n_modes);
                    }
                }
            }
            let mut sigma = vec![usize::MAX; r];
            let mut model_used = vec![false; r];
            let mut truth_used = vec![false; r];
            for _ in 0..r {
                let mut best = (0usize, 0usize, -1.0f64);
                for i in 0..r {
                    if model_used[i] {
                        continue;
                    }
                    for j in 0..r {
                        if truth_used[j] {
                            continue;
                        }
                        if cosines.get(i, j) > best.2 {
                            best = (i, j, cosines.get(i, j));
                        }
                    }
                }
                sigma[best.1] = best.0;
                model_used[best.0] = true;
                truth_used[best.1] = true;
            }
            Ok(sigma)
        }
    }
}

/// Max over modes and components of the |sin| angle between the paired model
/// and truth factor columns.
pub fn epsilon_metric(
    model: &KruskalModel,
    truth: &KruskalModel,
    pairing: Pairing,
) -> Result<f64> {
    let sigma = pair_components(model, truth, pairing)?;
    epsilon_metric_paired(model, truth, &sigma)
}

/// As [`epsilon_metric`] with a precomputed pairing.
pub fn epsilon_metric_paired(
    model: &KruskalModel,
    truth: &KruskalModel,
    sigma: &[usize],
) -> Result<f64> {
    check_compatible(model, truth)?;
    let mut worst = 0.0f64;
    for mode in 0..model.order() {
        let mf = model.factor(mode);
        let tf = truth.factor(mode);
        for (r, &m_r) in sigma.iter().enumerate() {
            worst = worst.max(sin_angle(mf.col(m_r), tf.col(r))?);
        }
    }
    Ok(worst)
}

/// `max_r |(lambda_sigma(r))^2 - (lambda*_r)^2|` under a pairing.
pub fn squared_weight_error(
    model: &KruskalModel,
    truth: &KruskalModel,
    sigma: &[usize],
) -> f64 {
    let mw = model.weights();
    let tw = truth.weights();
    sigma
        .iter()
        .enumerate()
        .map(|(r, &m_r)| (mw[m_r] * mw[m_r] - tw[r] * tw[r]).abs())
        .fold(0.0, f64::max)
}

fn check_compatible(model: &KruskalModel, truth: &KruskalModel) -> Result<()> {
    if model.order() != truth.order() {
        return Err(Error::DimensionMismatch {
            context: "model order",
            expected: truth.order(),
            got: model.order(),
        });
    }
    if model.rank() != truth.rank() {
        return Err(Error::DimensionMismatch {
            context: "model rank",
            expected: truth.rank(),
            got: model.rank(),
        });
    }
    if model.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            expected: truth.shape(),
            got: model.shape(),
        });
    }
    Ok(())
}

/// Coherence of a matrix with unit-normalized columns: the largest absolute
/// inner product between distinct columns.
pub fn coherence(a: &Matrix) -> Result<f64> {
    for j in 0..a.cols() {
        let norm = norm2(a.col(j));
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::UnnormalizedColumns { column: j, norm });
        }
    }
    let mut mu = 0.0f64;
    for i in 0..a.cols() {
        for j in (i + 1)..a.cols() {
            mu = mu.max(dot(a.col(i), a.col(j)).abs());
        }
    }
    Ok(mu)
}

/// Weight conditioning `max |lambda_r| / min |lambda_r|`.
pub fn kappa(lambda: &[f64]) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &l in lambda {
        let a = l.abs();
        if a == 0.0 {
            return Err(Error::DegenerateInput("zero weight in kappa"));
        }
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lambda.is_empty() {
        return Err(Error::DegenerateInput("empty weight vector in kappa"));
    }
    Ok(hi / lo)
}

/// Least-squares slope of `ys` against `xs` (both already in log space).
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len().min(ys.len()),
        });
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("zero variance in slope fit"));
    }
    Ok(sxy / sxx)
}

/// Empirical convergence order: the least-squares slope of `log e_k` against
/// `log e_{k-1}`. The k = 0 entry and the floating-point-saturated tail
/// (entries at or below `floor`) are excluded from the fit.
pub fn estimate_order_with_floor(epsilons: &[f64], floor: f64) -> Result<f64> {
    // keep iterations k >= 1 up to the first saturated entry
    let mut retained: Vec<usize> = Vec::new();
    for (k, &e) in epsilons.iter().enumerate().skip(1) {
        if e <= floor || !e.is_finite() {
            break;
        }
        retained.push(k);
    }
    if retained.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: retained.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in retained.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        xs.push(epsilons[prev].ln());
        ys.push(epsilons[cur].ln());
    }
    least_squares_slope(&xs, &ys)
}

/// [`estimate_order_with_floor`] at the default saturation floor.
pub fn estimate_order(epsilons: &[f64]) -> Result<f64> {
    estimate_order_with_floor(epsilons, SATURATION_FLOOR)
}

/// Per-iteration result of checking the polynomial convergence inequality
/// `e_k <= 9 kappa sqrt(R) (4 sqrt(2) e_{k-1})^(N-1)`, gated on the
/// hypothesis `R (2 sqrt(2) e_{k-1})^(N-1) <= 1/3`.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub iteration: usize,
    pub hypothesis_holds: bool,
    pub epsilon: f64,
    pub bound: f64,
    /// `bound - epsilon`; only asserted when the hypothesis holds.
    pub margin: f64,
    /// `Some(eps_k <= bound)` when in hypothesis, `None` when skipped.
    pub satisfied: Option<bool>,
}

pub fn theorem_bound_check(
    epsilons: &[f64],
    kappa: f64,
    rank: usize,
    order: usize,
) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let pow = (order - 1) as i32;
    for k in 1..epsilons.len() {
        let prev = epsilons[k - 1];
        let cur = epsilons[k];
        let hypothesis = rank as f64 * (2.0 * 2f64.sqrt() * prev).powi(pow) <= 1.0 / 3.0;
        let bound = 9.0 * kappa * (rank as f64).sqrt() * (4.0 * 2f64.sqrt() * prev).powi(pow);
        out.push(BoundCheck {
            iteration: k,
            hypothesis_holds: hypothesis,
            epsilon: cur,
            bound,
            margin: bound - cur,
            satisfied: if hypothesis { Some(cur <= bound) } else { None },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    #[test]
    fn sin_angle_cases() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let neg_e1 = [-1.0, 0.0];
        let diag = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        assert_eq!(sin_angle(&e1, &e1).unwrap(), 0.0);
        assert_eq!(sin_angle(&e1, &neg_e1).unwrap(), 0.0);
        assert_eq!(sin_angle(&e1, &e2).unwrap(), 1.0);
        let s = sin_angle(&e1, &diag).unwrap();
        assert!((s - 2f64.sqrt() / 2.0).abs() < 1e-14, "got {s}");
    }

    #[test]
    fn sin_angle_symmetry_is_exact() {
        let u = [0.3, -0.4, 1.2];
        let v = [1.0, 0.5, -0.2];
        let neg_u = [-0.3, 0.4, -1.2];
        assert_eq!(sin_angle(&u, &v).unwrap(), sin_angle(&v, &u).unwrap());
        assert_eq!(sin_angle(&u, &v).unwrap(), sin_angle(&neg_u, &v).unwrap());
    }

    #[test]
    fn sin_angle_rejects_zero() {
        let z = [0.0, 0.0];
        let u = [1.0, 0.0];
        assert!(sin_angle(&z, &u).is_err());
    }

    #[test]
    fn kappa_analytic() {
        assert_eq!(kappa(&[2.0, -1.0, 0.5]).unwrap(), 4.0);
        assert!(kappa(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn coherence_cases() {
        let id = Matrix::identity(3);
        assert_eq!(coherence(&id).unwrap(), 0.0);

        let mut repeated = Matrix::zeros(3, 2);
        repeated.set(0, 0, 1.0);
        repeated.set(0, 1, 1.0);
        assert_eq!(coherence(&repeated).unwrap(), 1.0);

        let unnormalized = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            coherence(&unnormalized),
            Err(Error::UnnormalizedColumns { column: 0, .. })
        ));
    }

    #[test]
    fn estimate_order_quadratic_sequence() {
        // e_k = 0.1^(2^k)
        let eps: Vec<f64> = (0..5).map(|k| 0.1f64.powi(1 << k)).collect();
        let slope = estimate_order(&eps).unwrap();
        assert!((slope - 2.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn estimate_order_linear_sequence() {
        let eps: Vec<f64> = (0..12).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        let slope = estimate_order(&eps).unwrap();
        assert!((slope - 1.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn estimate_order_requires_enough_points() {
        assert!(matches!(
            estimate_order(&e(&[1e-1, 1e-2, 1e-3])),
            Err(Error::InsufficientData { .. })
        ));
        // saturated tail trimmed below the minimum
        assert!(estimate_order(&e(&[1e-1, 1e-2, 1e-14, 1e-15, 1e-15])).is_err());
    }

    #[test]
    fn bound_check_zero_epsilon() {
        let checks = theorem_bound_check(&[0.0, 0.0], 2.0, 10, 3);
        assert_eq!(checks.len(), 1);
        assert!(checks[0].hypothesis_holds);
        assert_eq!(checks[0].bound, 0.0);
        assert_eq!(checks[0].satisfied, Some(true));
    }

    #[test]
    fn bound_check_gates_on_hypothesis() {
        // large epsilon: hypothesis false, never asserted
        let checks = theorem_bound_check(&[0.9, 0.5], 1.0, 10, 3);
        assert!(!checks[0].hypothesis_holds);
        assert_eq!(checks[0].satisfied, None);
    }

    #[test]
    fn trace_phase_boundary() {
        let mut t = ConvergenceTrace::new();
        for k in 0..4 {
            t.push(TraceRecord {
                iteration: k,
                epsilon: None,
                relative_error: 1.0,
                weight_error: None,
                phase: match k {
                    0 => Phase::Init,
                    1 | 2 => Phase::Reduced,
                    _ => Phase::Regular,
                },
                wall_seconds: 0.0,
            });
        }
        assert_eq!(t.phase_boundary(), Some(3));
    }

    #[test]
    #[should_panic(expected = "strictly increasing")]
    fn trace_rejects_non_increasing() {
        let mut t = ConvergenceTrace::new();
        let rec = TraceRecord {
            iteration: 0,
            epsilon: None,
            relative_error: 1.0,
            weight_error: None,
            phase: Phase::Init,
            wall_seconds: 0.0,
        };
        t.push(rec.clone());
        t.push(rec);
    }
}
