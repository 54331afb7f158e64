//! Ground-truth instance generators for the convergence experiments, plus
//! the random-restart wrapper.
//!
//! Every generator is a pure function of (spec, seed): identical inputs give
//! bit-identical outputs. Draws for weights, factors, and perturbations come
//! from separate substreams so changing one scale never shifts the others.

use crate::diagnostics::{self, ConvergenceTrace};
use crate::error::{Error, Result};
use crate::kruskal::KruskalModel;
use crate::linalg;
use crate::matrix::{norm2, Matrix};
use crate::rng::{Stream, StreamRng};
use crate::solver::{self, AltLsProblem, RunHooks, StoppingRule, Variant};
use crate::tensor::DenseTensor;

/// Instance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Orthonormal factor columns.
    Odeco,
    /// Orthonormal columns nudged by an incoherence perturbation.
    Ideco,
    /// The three-term cyclic rank-3 tensor.
    Cyclic,
    /// The order-2 identity-matrix counterexample.
    IdentityMatrix,
}

/// Parameters of a synthesized instance.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub extents: Vec<usize>,
    pub rank: usize,
    /// Scale of the truth-factor perturbation (ideco only).
    pub incoherence_scale: f64,
    /// Scale of the perturbation that forms the initial guess.
    pub init_perturbation_scale: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn odeco(extents: Vec<usize>, rank: usize, init_perturbation_scale: f64, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Odeco,
            extents,
            rank,
            incoherence_scale: 0.0,
            init_perturbation_scale,
            seed,
        }
    }

    pub fn ideco(
        extents: Vec<usize>,
        rank: usize,
        incoherence_scale: f64,
        init_perturbation_scale: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind: GeneratorKind::Ideco,
            incoherence_scale,
            ..Self::odeco(extents, rank, init_perturbation_scale, seed)
        }
    }

    pub fn order(&self) -> usize {
        self.extents.len()
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("rank must be >= 1"));
        }
        if self.extents.is_empty() {
            return Err(Error::InvalidParameter("generator needs at least one mode"));
        }
        let min_extent = *self.extents.iter().min().unwrap();
        if self.rank > min_extent {
            return Err(Error::InvalidParameter(
                "rank must not exceed the smallest extent for orthonormal factors",
            ));
        }
        if self.incoherence_scale < 0.0 || self.init_perturbation_scale < 0.0 {
            return Err(Error::InvalidParameter("scales must be nonnegative"));
        }
        Ok(())
    }
}

/// A generated ground truth with its perturbed initial guess and the
/// measured instance diagnostics.
#[derive(Debug, Clone)]
pub struct SynthesizedInstance {
    pub truth: KruskalModel,
    pub init: KruskalModel,
    /// Largest factor-matrix coherence across modes.
    pub coherence: f64,
    /// Weight conditioning of the truth.
    pub kappa: f64,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut StreamRng) -> Matrix {
    Matrix::new(rows, cols, rng.normal_vec(rows * cols)).expect("shape is consistent")
}

fn normalize_in_place(m: &mut Matrix) -> Result<()> {
    for r in 0..m.cols() {
        let norm = norm2(m.col(r));
        if norm.is_nan() || norm <= 1e-300 {
            return Err(Error::DegenerateComponent {
                column: r,
                iteration: None,
            });
        }
        for v in m.col_mut(r) {
            *v /= norm;
        }
    }
    Ok(())
}

fn perturbed_normalized(base: &[Matrix], scale: f64, rng: &mut StreamRng) -> Result<Vec<Matrix>> {
    if scale == 0.0 {
        return Ok(base.to_vec());
    }
    base.iter()
        .map(|factor| {
            let noise = gaussian_matrix(factor.rows(), factor.cols(), rng);
            let mut out = factor.add(&noise.scale(scale))?;
            normalize_in_place(&mut out)?;
            Ok(out)
        })
        .collect()
}

fn measured_instance(truth: KruskalModel, init: KruskalModel) -> Result<SynthesizedInstance> {
    let coherence = truth
        .factors()
        .iter()
        .map(diagnostics::coherence)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let kappa = diagnostics::kappa(truth.weights())?;
    Ok(SynthesizedInstance {
        truth,
        init,
        coherence,
        kappa,
    })
}

/// Orthogonally decomposable truth: standard-normal weights and factors taken
/// from the orthogonal factor of a QR of a Gaussian square matrix, with a
/// scaled Gaussian perturbation (then column normalization) as the initial
/// guess.
pub fn gen_odeco(spec: &GeneratorSpec) -> Result<SynthesizedInstance> {
    spec.validate()?;
    let mut weight_rng = StreamRng::new(spec.seed, Stream::Weights);
    let weights = weight_rng.normal_vec(spec.rank);

    let mut factor_rng = StreamRng::new(spec.seed, Stream::Factors);
    let factors: Vec<Matrix> = spec
        .extents
        .iter()
        .map(|&extent| {
            let square = gaussian_matrix(extent, extent, &mut factor_rng);
            linalg::qr_orthonormal(&square, spec.rank)
        })
        .collect();

    let mut init_rng = StreamRng::new(spec.seed, Stream::InitPerturbation);
    let init_factors =
        perturbed_normalized(&factors, spec.init_perturbation_scale, &mut init_rng)?;

    let truth = KruskalModel::new(weights.clone(), factors)?;
    let init = KruskalModel::new(weights, init_factors)?;
    measured_instance(truth, init)
}

/// Incoherently decomposable truth: as [`gen_odeco`] but the orthonormal
/// factors are themselves perturbed (and renormalized) at the incoherence
/// scale before the initial guess is formed on top.
pub fn gen_ideco(spec: &GeneratorSpec) -> Result<SynthesizedInstance> {
    spec.validate()?;
    let mut weight_rng = StreamRng::new(spec.seed, Stream::Weights);
    let weights = weight_rng.normal_vec(spec.rank);

    let mut factor_rng = StreamRng::new(spec.seed, Stream::Factors);
    let orthonormal: Vec<Matrix> = spec
        .extents
        .iter()
        .map(|&extent| {
            let square = gaussian_matrix(extent, extent, &mut factor_rng);
            linalg::qr_orthonormal(&square, spec.rank)
        })
        .collect();

    let mut incoherence_rng = StreamRng::new(spec.seed, Stream::Incoherence);
    let factors = perturbed_normalized(&orthonormal, spec.incoherence_scale, &mut incoherence_rng)?;

    let mut init_rng = StreamRng::new(spec.seed, Stream::InitPerturbation);
    let init_factors =
        perturbed_normalized(&factors, spec.init_perturbation_scale, &mut init_rng)?;

    let truth = KruskalModel::new(weights.clone(), factors)?;
    let init = KruskalModel::new(weights, init_factors)?;
    measured_instance(truth, init)
}

/// The cyclic tensor `a1 o a2 o a3 + a2 o a3 o a1 + a3 o a1 o a2` with
/// uniform-[0,1) vectors in R^10, returned together with its rank-3 Kruskal
/// reference.
pub fn gen_cyclic(seed: u64) -> (DenseTensor, KruskalModel) {
    let mut rng = StreamRng::new(seed, Stream::Cyclic);
    let dim = 10;
    let a: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..dim).map(|_| rng.uniform()).collect())
        .collect();

    let stack = |order: [usize; 3]| -> Matrix {
        let mut m = Matrix::zeros(dim, 3);
        for (col, &which) in order.iter().enumerate() {
            for i in 0..dim {
                m.set(i, col, a[which][i]);
            }
        }
        m
    };
    let reference = KruskalModel::new(
        vec![1.0, 1.0, 1.0],
        vec![stack([0, 1, 2]), stack([1, 2, 0]), stack([2, 0, 1])],
    )
    .expect("consistent shapes");
    (reference.reconstruct(), reference)
}

/// The order-2 counterexample: the identity matrix as a tensor, with a random
/// invertible column-normalized factor pair as the initial guess.
pub fn gen_identity_counterexample(rank: usize, seed: u64) -> Result<(DenseTensor, KruskalModel)> {
    if rank < 2 {
        return Err(Error::InvalidParameter("counterexample needs rank >= 2"));
    }
    let mut data = vec![0.0; rank * rank];
    for i in 0..rank {
        data[i + rank * i] = 1.0;
    }
    let tensor = DenseTensor::new(vec![rank, rank], data)?;

    let mut rng = StreamRng::new(seed, Stream::InitFactors);
    let mut factors = Vec::with_capacity(2);
    for _ in 0..2 {
        // redraw in the (measure-zero) event of near-singularity
        let factor = loop {
            let mut candidate = gaussian_matrix(rank, rank, &mut rng);
            normalize_in_place(&mut candidate)?;
            let svd = linalg::thin_svd(&candidate);
            if svd.rank(1e-6) == rank {
                break candidate;
            }
        };
        factors.push(factor);
    }
    let init = KruskalModel::new(vec![1.0; rank], factors)?;
    Ok((tensor, init))
}

/// Outcome of [`restart_until_converged`].
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    /// The last attempt's model and trace (`None` when no attempt ran).
    pub result: Option<(KruskalModel, ConvergenceTrace)>,
    /// Number of initializations performed.
    pub restarts_used: usize,
    pub converged: bool,
}

/// Default convergence check: the traced error drops by 10x within the first
/// 10 iterations.
pub fn default_radius_test(trace: &ConvergenceTrace) -> bool {
    let records = trace.records();
    let Some(first) = records.first() else {
        return false;
    };
    let target = first.relative_error / 10.0;
    records
        .iter()
        .take(11)
        .any(|r| r.iteration >= 1 && r.relative_error <= target)
}

/// Rerun the solver from fresh random initializations until `radius_test`
/// accepts a trace or `max_restarts` attempts are exhausted. Exhaustion is
/// reported, not raised; a collapsed component simply fails that attempt.
pub fn restart_until_converged(
    problem: &AltLsProblem,
    variant: Variant,
    rule: &StoppingRule,
    mut gen_init: impl FnMut(u64) -> Result<KruskalModel>,
    mut radius_test: impl FnMut(&ConvergenceTrace) -> bool,
    max_restarts: usize,
    seed: u64,
) -> Result<RestartOutcome> {
    let mut last = None;
    for attempt in 0..max_restarts {
        let mut attempt_rng = StreamRng::new(seed, Stream::Restart(attempt as u64));
        let attempt_seed = attempt_rng.next_u64();
        let init = gen_init(attempt_seed)?;
        match solver::run(problem, &init, variant, rule, &RunHooks::default()) {
            Ok((model, trace)) => {
                let converged = radius_test(&trace);
                last = Some((model, trace));
                if converged {
                    return Ok(RestartOutcome {
                        result: last,
                        restarts_used: attempt + 1,
                        converged: true,
                    });
                }
            }
            Err(Error::DegenerateComponent { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    Ok(RestartOutcome {
        result: last,
        restarts_used: max_restarts,
        converged: false,
    })
}

/// Column-normalized factors with every column drawn uniformly from the unit
/// sphere; the standard random initialization for restarts.
pub fn random_sphere_init(shape: &[usize], rank: usize, seed: u64) -> KruskalModel {
    let mut rng = StreamRng::new(seed, Stream::InitFactors);
    let factors = shape
        .iter()
        .map(|&extent| {
            let mut m = Matrix::zeros(extent, rank);
            for r in 0..rank {
                let col = rng.unit_sphere(extent);
                for (i, v) in col.into_iter().enumerate() {
                    m.set(i, r, v);
                }
            }
            m
        })
        .collect();
    KruskalModel::new(vec![1.0; rank], factors).expect("consistent shapes")
}
