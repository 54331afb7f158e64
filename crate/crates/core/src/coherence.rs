//! SVD-based coherence reduction and the hybrid (reduced-then-regular)
//! schedule.
//!
//! Raising the singular values of the unnormalized mode update to a power
//! `omega` in [0, 1] interpolates between leaving the factor unchanged
//! (omega = 1) and replacing it by an orthonormal basis of its column space
//! (omega = 0), which steers early iterations toward low-coherence factors.

use std::time::Instant;

use crate::diagnostics::{ConvergenceTrace, Phase, TraceRecord};
use crate::error::{Error, Result};
use crate::kruskal::KruskalModel;
use crate::linalg;
use crate::matrix::Matrix;
use crate::solver::{
    self, designated_mode, fast_error, hadamard_excluding, khatri_rao_for_mode, mode_update,
    normalize_columns, AltLsProblem, AltLsState, RunHooks, StoppingRule,
};

/// Relative singular-value cutoff below which directions count as null.
const RANK_TOL: f64 = 1e-12;

/// Result of a coherence reduction: the transformed matrix plus a flag noting
/// whether null directions were dropped by the 0^0 := 0 convention.
#[derive(Debug, Clone)]
pub struct ReducedMatrix {
    pub matrix: Matrix,
    pub rank_deficient: bool,
}

/// Replace `a_hat` by `U sigma^omega Vᵀ` where `U sigma Vᵀ` is its thin SVD.
/// Singular values at the noise floor are treated as exact zeros (so their
/// power is zero for every omega including omega = 0).
pub fn coherence_reduce(a_hat: &Matrix, omega: f64) -> Result<ReducedMatrix> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidParameter("omega must lie in [0, 1]"));
    }
    let svd = linalg::thin_svd(a_hat);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let cutoff = sigma_max * RANK_TOL;
    let mut rank_deficient = false;
    // scale U's columns by sigma^omega, then multiply by Vᵀ
    let mut scaled_u = svd.u.clone();
    for (j, &sigma) in svd.sigma.iter().enumerate() {
        let powered = if sigma <= cutoff {
            rank_deficient = true;
            0.0
        } else {
            sigma.powf(omega)
        };
        for i in 0..scaled_u.rows() {
            scaled_u.set(i, j, scaled_u.get(i, j) * powered);
        }
    }
    let matrix = scaled_u.matmul(&svd.v.transpose())?;
    Ok(ReducedMatrix {
        matrix,
        rank_deficient,
    })
}

/// A fixed number of coherence-reduced sweeps followed by regular sweeps.
#[derive(Debug, Clone)]
pub struct HybridSchedule {
    pub omega: f64,
    pub reduced_iterations: usize,
    pub regular_iterations: usize,
    /// Normalize all factor matrices once at the end of each reduced
    /// iteration instead of after each mode update.
    pub defer_normalization: bool,
}

impl HybridSchedule {
    pub fn new(omega: f64, reduced_iterations: usize, regular_iterations: usize) -> Self {
        Self {
            omega,
            reduced_iterations,
            regular_iterations,
            defer_normalization: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::InvalidParameter("omega must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One serial sweep in which every unnormalized mode update passes through
/// [`coherence_reduce`] before use. With deferred normalization the factors
/// stay unnormalized within the sweep; the end-of-iteration normalization
/// collects each component's total weight as the product of its per-mode
/// column norms, which leaves the represented tensor unchanged.
fn step_reduced(
    problem: &AltLsProblem,
    model: &KruskalModel,
    state: &AltLsState,
    schedule: &HybridSchedule,
) -> Result<(KruskalModel, AltLsState)> {
    let rank = model.rank();
    let order = model.order();
    let mut next = state.clone();
    let mut work = model.clone();
    let lambda_mode = designated_mode(problem.shape());
    let mut lambda = model.weights().to_vec();
    let mut grams: Vec<Matrix> = work.factors().iter().map(Matrix::gram).collect();

    for n in 0..order {
        next.set_khatri_rao(n, khatri_rao_for_mode(work.factors(), n, rank)?);
        next.set_hadamard(n, hadamard_excluding(&grams, n, rank)?);
        let a_hat = mode_update(problem, &mut next, n)?;
        let reduced = coherence_reduce(&a_hat, schedule.omega)?.matrix;
        let factor = if schedule.defer_normalization {
            reduced
        } else {
            let (a, norms) = normalize_columns(&reduced)?;
            if n == lambda_mode {
                lambda = norms;
            }
            a
        };
        grams[n] = factor.gram();
        *work.factor_mut(n) = factor;
    }

    if schedule.defer_normalization {
        let mut total_norms = vec![1.0f64; rank];
        for n in 0..order {
            let (a, norms) = normalize_columns(work.factor(n))?;
            for (total, norm) in total_norms.iter_mut().zip(&norms) {
                *total *= norm;
            }
            *work.factor_mut(n) = a;
        }
        lambda = total_norms;
    }
    work.set_weights(lambda);
    for n in 0..order {
        next.set_gram(n, work.factor(n).gram());
    }
    next.bump_iteration();
    Ok((work, next))
}

/// Run `reduced_iterations` coherence-reduced serial sweeps followed by
/// `regular_iterations` standard serial sweeps. The trace tags each record
/// with its phase; the stopping rule's error-change and epsilon-floor checks
/// stay active throughout (its iteration cap is superseded by the schedule).
pub fn run_hybrid(
    problem: &AltLsProblem,
    model0: &KruskalModel,
    schedule: &HybridSchedule,
    rule: &StoppingRule,
    hooks: &RunHooks,
) -> Result<(KruskalModel, ConvergenceTrace)> {
    schedule.validate()?;
    if model0.shape() != problem.shape() {
        return Err(Error::ShapeMismatch {
            expected: problem.shape().to_vec(),
            got: model0.shape(),
        });
    }
    if model0.max_column_norm_deviation() > 1e-8 {
        return Err(Error::InvalidParameter(
            "initial factor columns must be normalized",
        ));
    }

    let mut model = model0.clone();
    let mut state = AltLsState::for_error(problem, &model)?;
    let mut trace = ConvergenceTrace::new();
    let mut prev_fast = record_hybrid(problem, &model, &state, 0, Phase::Init, 0.0, hooks, &mut trace)?;

    let mut k = 0usize;
    'phases: for (phase, count) in [
        (Phase::Reduced, schedule.reduced_iterations),
        (Phase::Regular, schedule.regular_iterations),
    ] {
        for _ in 0..count {
            k += 1;
            let started = Instant::now();
            let (next_model, next_state) = match phase {
                Phase::Reduced => step_reduced(problem, &model, &state, schedule)?,
                _ => solver::step_serial(problem, &model, &state)?,
            };
            model = next_model;
            state = next_state;
            state.refresh_for_error(problem, &model)?;
            let wall = started.elapsed().as_secs_f64();
            let fast = record_hybrid(problem, &model, &state, k, phase, wall, hooks, &mut trace)?;

            if rule.epsilon_floor > 0.0 {
                if let Some(eps) = trace.last().and_then(|r| r.epsilon) {
                    if eps < rule.epsilon_floor {
                        break 'phases;
                    }
                }
            }
            if rule.error_change_tol > 0.0 && prev_fast > 0.0 {
                let change = (prev_fast - fast).abs() / prev_fast;
                if change < rule.error_change_tol {
                    break 'phases;
                }
            }
            prev_fast = fast;
        }
    }
    Ok((model, trace))
}

#[allow(clippy::too_many_arguments)]
fn record_hybrid(
    problem: &AltLsProblem,
    model: &KruskalModel,
    state: &AltLsState,
    iteration: usize,
    phase: Phase,
    wall: f64,
    hooks: &RunHooks,
    trace: &mut ConvergenceTrace,
) -> Result<f64> {
    let fast = fast_error(problem.norm_sq(), state, model)?;
    let relative_error = if hooks.direct_error {
        solver::direct_relative_error(problem, model)
    } else {
        fast / problem.norm()
    };
    let (epsilon, weight_error) = match hooks.truth {
        None => (None, None),
        Some(truth) => {
            let sigma = crate::diagnostics::pair_components(model, truth, hooks.pairing)?;
            (
                Some(crate::diagnostics::epsilon_metric_paired(model, truth, &sigma)?),
                Some(crate::diagnostics::squared_weight_error(model, truth, &sigma)),
            )
        }
    };
    trace.push(TraceRecord {
        iteration,
        epsilon,
        relative_error,
        weight_error,
        phase,
        wall_seconds: wall,
    });
    Ok(fast)
}
