//! Alternating least squares for CP decomposition: the serial variant updates
//! each mode with the freshest factors available inside the sweep, while the
//! parallel variant freezes all Gram and Khatri-Rao matrices first so the N
//! mode updates depend only on the previous iterate.

use std::time::Instant;

use crate::diagnostics::{
    self, ConvergenceTrace, Pairing, Phase, TraceRecord,
};
use crate::error::{Error, Result};
use crate::kruskal::KruskalModel;
use crate::linalg;
use crate::matrix::{dot, hadamard_list, khatri_rao_list, norm2, Matrix};
use crate::tensor::DenseTensor;

/// Condition estimate above which the normal-equations solve falls back to
/// the eigendecomposition pseudoinverse.
const CONDITION_LIMIT: f64 = 1e12;

/// Which update schedule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Mode n sees modes m < n from the current iteration.
    Serial,
    /// All N updates use only the previous iteration's factors.
    Parallel,
}

/// Loop termination: an iteration cap, a relative-change threshold on the
/// fast error, and (for ground-truth runs) a floor on the angle error.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    pub max_iterations: usize,
    /// Stop when `|e_k - e_{k-1}| / e_{k-1}` drops below this (0 disables).
    pub error_change_tol: f64,
    /// Stop when the angle error drops below this (0 disables; requires a
    /// ground-truth hook).
    pub epsilon_floor: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            error_change_tol: 1e-10,
            epsilon_floor: 0.0,
        }
    }
}

impl StoppingRule {
    pub fn max_iterations(n: usize) -> Self {
        Self {
            max_iterations: n,
            ..Self::default()
        }
    }
}

/// Optional per-run instrumentation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunHooks<'a> {
    /// Ground truth; enables the epsilon and weight-error trace columns.
    pub truth: Option<&'a KruskalModel>,
    pub pairing: Pairing,
    /// Record the relative error from a full reconstruction instead of the
    /// cancellation-limited fast error.
    pub direct_error: bool,
}

/// The tensor being decomposed together with its mode unfoldings and squared
/// norm, formed once per run.
#[derive(Debug, Clone)]
pub struct AltLsProblem {
    tensor: DenseTensor,
    unfoldings: Vec<Matrix>,
    norm_sq: f64,
}

impl AltLsProblem {
    pub fn new(tensor: DenseTensor) -> Result<Self> {
        let unfoldings = (1..=tensor.order())
            .map(|n| tensor.matricize(n))
            .collect::<Result<Vec<_>>>()?;
        let norm_sq = tensor.data().iter().map(|x| x * x).sum();
        Ok(Self {
            tensor,
            unfoldings,
            norm_sq,
        })
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    /// `X_(n)` for a 0-based mode index.
    pub fn unfolding(&self, mode: usize) -> &Matrix {
        &self.unfoldings[mode]
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }

    pub fn shape(&self) -> &[usize] {
        self.tensor.shape()
    }
}

/// The mode whose column norms define the weights (and whose matrices feed
/// the fast error): the cheapest Gram, i.e. the smallest extent.
pub fn designated_mode(shape: &[usize]) -> usize {
    shape
        .iter()
        .enumerate()
        .min_by_key(|&(_, &extent)| extent)
        .map(|(n, _)| n)
        .expect("tensor order >= 1")
}

/// Per-iteration workspace: Gram matrices `G`, Khatri-Rao products `K`,
/// their Hadamard products `H`, and the MTTKRP results `M`.
#[derive(Debug, Clone)]
pub struct AltLsState {
    grams: Vec<Matrix>,
    khatri_rao: Vec<Option<Matrix>>,
    hadamard: Vec<Option<Matrix>>,
    mttkrp: Vec<Option<Matrix>>,
    iteration: usize,
}

impl AltLsState {
    /// Workspace initialized from a model's factors (Grams formed, products
    /// not yet).
    pub fn new(model: &KruskalModel) -> Self {
        let order = model.order();
        Self {
            grams: model.factors().iter().map(Matrix::gram).collect(),
            khatri_rao: vec![None; order],
            hadamard: vec![None; order],
            mttkrp: vec![None; order],
            iteration: 0,
        }
    }

    /// Workspace ready for [`fast_error`] against `model`: Grams for all
    /// modes plus `K`, `H`, `M` at the designated mode.
    pub fn for_error(problem: &AltLsProblem, model: &KruskalModel) -> Result<Self> {
        let mut state = Self::new(model);
        state.refresh_for_error(problem, model)?;
        Ok(state)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn gram(&self, mode: usize) -> &Matrix {
        &self.grams[mode]
    }

    pub fn khatri_rao(&self, mode: usize) -> Option<&Matrix> {
        self.khatri_rao[mode].as_ref()
    }

    pub fn hadamard(&self, mode: usize) -> Option<&Matrix> {
        self.hadamard[mode].as_ref()
    }

    pub fn mttkrp(&self, mode: usize) -> Option<&Matrix> {
        self.mttkrp[mode].as_ref()
    }

    pub(crate) fn set_khatri_rao(&mut self, mode: usize, k: Matrix) {
        self.khatri_rao[mode] = Some(k);
    }

    pub(crate) fn set_hadamard(&mut self, mode: usize, h: Matrix) {
        self.hadamard[mode] = Some(h);
    }

    pub(crate) fn set_gram(&mut self, mode: usize, g: Matrix) {
        self.grams[mode] = g;
    }

    pub(crate) fn bump_iteration(&mut self) {
        self.iteration += 1;
    }

    /// Rebuild the designated mode's `K`, `H`, `M` (and all Grams) from
    /// `model`, so the fast error evaluates the model as stored.
    pub fn refresh_for_error(
        &mut self,
        problem: &AltLsProblem,
        model: &KruskalModel,
    ) -> Result<()> {
        for n in 0..model.order() {
            self.grams[n] = model.factor(n).gram();
        }
        let n = designated_mode(problem.shape());
        let k = khatri_rao_for_mode(model.factors(), n, model.rank())?;
        self.hadamard[n] = Some(hadamard_excluding(&self.grams, n, model.rank())?);
        self.mttkrp[n] = Some(problem.unfolding(n).matmul(&k)?);
        self.khatri_rao[n] = Some(k);
        Ok(())
    }
}

/// Khatri-Rao product over all factors except `skip`, in decreasing mode
/// order (N, ..., skip+1, skip-1, ..., 1).
pub(crate) fn khatri_rao_for_mode(
    factors: &[Matrix],
    skip: usize,
    rank: usize,
) -> Result<Matrix> {
    let mats: Vec<&Matrix> = (0..factors.len())
        .rev()
        .filter(|&m| m != skip)
        .map(|m| &factors[m])
        .collect();
    khatri_rao_list(&mats, rank)
}

/// Hadamard product over all Grams except `skip`, in decreasing mode order.
pub(crate) fn hadamard_excluding(
    grams: &[Matrix],
    skip: usize,
    rank: usize,
) -> Result<Matrix> {
    let mats: Vec<&Matrix> = (0..grams.len())
        .rev()
        .filter(|&m| m != skip)
        .map(|m| &grams[m])
        .collect();
    hadamard_list(&mats, rank)
}

/// `M * H^+`: Cholesky-solve against the Hadamard-of-Grams when it is
/// numerically positive definite, otherwise the eigendecomposition
/// pseudoinverse with a relative cutoff. Never aborts on rank deficiency.
pub(crate) fn solve_against_hadamard(m: &Matrix, h: &Matrix) -> Result<Matrix> {
    if let Some(l) = linalg::cholesky(h) {
        if linalg::cholesky_condition_estimate(&l) <= CONDITION_LIMIT {
            return Ok(linalg::cholesky_solve(&l, &m.transpose()).transpose());
        }
    }
    let pinv = linalg::pinv_symmetric(h, h.rows() as f64)?;
    m.matmul(&pinv)
}

/// Least-squares update for one mode: `A_hat = M^(n) (H^(n))^+` with
/// `M^(n) = X_(n) K^(n)`. The state must hold `K` and `H` for this mode;
/// the freshly formed `M` is stored back for the fast error.
pub fn mode_update(
    problem: &AltLsProblem,
    state: &mut AltLsState,
    mode: usize,
) -> Result<Matrix> {
    let k = state.khatri_rao[mode]
        .as_ref()
        .ok_or(Error::InvalidParameter("khatri-rao product not formed"))?;
    let h = state.hadamard[mode]
        .as_ref()
        .ok_or(Error::InvalidParameter("hadamard product not formed"))?;
    let m = problem.unfolding(mode).matmul(k)?;
    let a_hat = solve_against_hadamard(&m, h)?;
    state.mttkrp[mode] = Some(m);
    Ok(a_hat)
}

/// Normalize each column to unit 2-norm and return the norms as weights.
/// A zero column means a component has collapsed (rank overestimated).
pub fn normalize_columns(a_hat: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let mut a = a_hat.clone();
    let mut lambda = Vec::with_capacity(a.cols());
    for r in 0..a.cols() {
        let norm = norm2(a.col(r));
        if norm.is_nan() || norm <= 1e-300 {
            return Err(Error::DegenerateComponent {
                column: r,
                iteration: None,
            });
        }
        for v in a.col_mut(r) {
            *v /= norm;
        }
        lambda.push(norm);
    }
    Ok((a, lambda))
}

/// One parallel sweep: freeze `G` and `K` for every mode from the incoming
/// model, then update all modes from the frozen state. The weights are taken
/// from the designated mode's column norms.
pub fn step_parallel(
    problem: &AltLsProblem,
    model: &KruskalModel,
    state: &AltLsState,
) -> Result<(KruskalModel, AltLsState)> {
    let order: Vec<usize> = (0..model.order()).collect();
    step_parallel_ordered(problem, model, state, &order)
}

/// The mode updates are independent given the frozen state, so any
/// processing order produces the same model; the natural order is used by
/// [`step_parallel`].
pub(crate) fn step_parallel_ordered(
    problem: &AltLsProblem,
    model: &KruskalModel,
    state: &AltLsState,
    mode_order: &[usize],
) -> Result<(KruskalModel, AltLsState)> {
    let rank = model.rank();
    let mut next = state.clone();
    for n in 0..model.order() {
        next.grams[n] = model.factor(n).gram();
        next.khatri_rao[n] = Some(khatri_rao_for_mode(model.factors(), n, rank)?);
    }
    let lambda_mode = designated_mode(problem.shape());
    let mut factors: Vec<Option<Matrix>> = vec![None; model.order()];
    let mut lambda = model.weights().to_vec();
    for &n in mode_order {
        next.hadamard[n] = Some(hadamard_excluding(&next.grams, n, rank)?);
        let a_hat = mode_update(problem, &mut next, n)?;
        let (a, norms) = normalize_columns(&a_hat)?;
        if n == lambda_mode {
            lambda = norms;
        }
        factors[n] = Some(a);
    }
    let factors: Vec<Matrix> = factors.into_iter().map(Option::unwrap).collect();
    let new_model = KruskalModel::new(lambda, factors)?;
    for n in 0..new_model.order() {
        next.grams[n] = new_model.factor(n).gram();
    }
    next.iteration += 1;
    Ok((new_model, next))
}

/// One serial sweep (the standard algorithm): mode n's update uses modes
/// m < n from the current iteration and m > n from the previous one, and
/// each Gram is refreshed immediately after its mode.
pub fn step_serial(
    problem: &AltLsProblem,
    model: &KruskalModel,
    state: &AltLsState,
) -> Result<(KruskalModel, AltLsState)> {
    let rank = model.rank();
    let mut next = state.clone();
    let mut work = model.clone();
    for n in 0..model.order() {
        next.grams[n] = work.factor(n).gram();
    }
    let lambda_mode = designated_mode(problem.shape());
    let mut lambda = model.weights().to_vec();
    for n in 0..model.order() {
        next.khatri_rao[n] = Some(khatri_rao_for_mode(work.factors(), n, rank)?);
        next.hadamard[n] = Some(hadamard_excluding(&next.grams, n, rank)?);
        let a_hat = mode_update(problem, &mut next, n)?;
        let (a, norms) = normalize_columns(&a_hat)?;
        if n == lambda_mode {
            lambda = norms;
        }
        *work.factor_mut(n) = a;
        next.grams[n] = work.factor(n).gram();
    }
    work.set_weights(lambda);
    next.iteration += 1;
    Ok((work, next))
}

/// Residual norm `|X - X_k|` from matrices already on hand, per
/// `|X|^2 - 2 <X, X_k> + |X_k|^2` with `<X, X_k> = <M, A Lambda>` and
/// `|X_k|^2 = <H, Lambda G Lambda>`. Clamped at zero to absorb cancellation;
/// less accurate than a direct computation since it squares the error.
pub fn fast_error(
    x_norm_sq: f64,
    state: &AltLsState,
    model: &KruskalModel,
) -> Result<f64> {
    let n = designated_mode(&model.shape());
    let m = state.mttkrp[n]
        .as_ref()
        .ok_or(Error::InvalidParameter("mttkrp not formed for fast error"))?;
    let h = state.hadamard[n]
        .as_ref()
        .ok_or(Error::InvalidParameter("hadamard not formed for fast error"))?;
    let g = &state.grams[n];
    let a = model.factor(n);
    let lambda = model.weights();
    let rank = model.rank();

    let mut cross = 0.0;
    for r in 0..rank {
        cross += lambda[r] * dot(m.col(r), a.col(r));
    }
    let mut model_norm_sq = 0.0;
    for s in 0..rank {
        for r in 0..rank {
            model_norm_sq += h.get(r, s) * g.get(r, s) * lambda[r] * lambda[s];
        }
    }
    Ok((x_norm_sq - 2.0 * cross + model_norm_sq).max(0.0).sqrt())
}

/// `|X - reconstruct(model)| / |X|`.
pub fn direct_relative_error(problem: &AltLsProblem, model: &KruskalModel) -> f64 {
    let approx = model.reconstruct();
    let mut err_sq = 0.0;
    for (x, y) in problem.tensor().data().iter().zip(approx.data()) {
        let d = x - y;
        err_sq += d * d;
    }
    err_sq.sqrt() / problem.norm()
}

fn attach_iteration(err: Error, iteration: usize) -> Error {
    match err {
        Error::DegenerateComponent {
            column,
            iteration: None,
        } => Error::DegenerateComponent {
            column,
            iteration: Some(iteration),
        },
        other => other,
    }
}

fn truth_metrics(
    model: &KruskalModel,
    hooks: &RunHooks,
) -> Result<(Option<f64>, Option<f64>)> {
    match hooks.truth {
        None => Ok((None, None)),
        Some(truth) => {
            let sigma = diagnostics::pair_components(model, truth, hooks.pairing)?;
            let eps = diagnostics::epsilon_metric_paired(model, truth, &sigma)?;
            let werr = diagnostics::squared_weight_error(model, truth, &sigma);
            Ok((Some(eps), Some(werr)))
        }
    }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev > 0.0 {
        (prev - cur).abs() / prev
    } else if cur == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Iterate the chosen variant until the stopping rule fires. The fast error
/// drives the stopping decision; the trace records either the fast-error or
/// a direct relative error per the hooks.
pub fn run(
    problem: &AltLsProblem,
    model0: &KruskalModel,
    variant: Variant,
    rule: &StoppingRule,
    hooks: &RunHooks,
) -> Result<(KruskalModel, ConvergenceTrace)> {
    if rule.max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be >= 1"));
    }
    if model0.shape() != problem.shape() {
        return Err(Error::ShapeMismatch {
            expected: problem.shape().to_vec(),
            got: model0.shape(),
        });
    }
    let column_dev = model0.max_column_norm_deviation();
    if column_dev > 1e-8 {
        return Err(Error::InvalidParameter(
            "initial factor columns must be normalized",
        ));
    }

    let mut model = model0.clone();
    let mut state = AltLsState::for_error(problem, &model)?;
    let mut trace = ConvergenceTrace::new();
    let norm_x = problem.norm();

    let record = |model: &KruskalModel,
                  state: &AltLsState,
                  k: usize,
                  phase: Phase,
                  wall: f64,
                  trace: &mut ConvergenceTrace|
     -> Result<f64> {
        let fast = fast_error(problem.norm_sq(), state, model)?;
        let rel = if hooks.direct_error {
            direct_relative_error(problem, model)
        } else {
            fast / norm_x
        };
        let (epsilon, weight_error) = truth_metrics(model, hooks)?;
        trace.push(TraceRecord {
            iteration: k,
            epsilon,
            relative_error: rel,
            weight_error,
            phase,
            wall_seconds: wall,
        });
        Ok(fast)
    };

    let mut prev_fast = record(&model, &state, 0, Phase::Init, 0.0, &mut trace)?;

    for k in 1..=rule.max_iterations {
        let started = Instant::now();
        let (next_model, next_state) = match variant {
            Variant::Parallel => step_parallel(problem, &model, &state),
            Variant::Serial => step_serial(problem, &model, &state),
        }
        .map_err(|e| attach_iteration(e, k))?;
        model = next_model;
        state = next_state;
        state.refresh_for_error(problem, &model)?;
        let wall = started.elapsed().as_secs_f64();

        let fast = record(&model, &state, k, Phase::Regular, wall, &mut trace)?;

        if rule.epsilon_floor > 0.0 {
            if let Some(eps) = trace.last().and_then(|r| r.epsilon) {
                if eps < rule.epsilon_floor {
                    break;
                }
            }
        }
        if rule.error_change_tol > 0.0
            && relative_change(prev_fast, fast) < rule.error_change_tol
        {
            break;
        }
        prev_fast = fast;
    }

    Ok((model, trace))
}
