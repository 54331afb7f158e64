//! CP tensor decomposition by alternating least squares.
//!
//! The solver comes in two variants: the standard serial sweep, where each
//! mode update sees the freshest factors, and a parallel formulation whose N
//! per-iteration updates depend only on the previous iterate. Around them:
//! dense colexicographic tensors and their multilinear kernels, an SVD-based
//! coherence-reduction schedule for hard instances, convergence diagnostics
//! (angle errors against a ground truth, empirical order fits, a polynomial
//! bound check), numeric oracles for the supporting matrix inequalities, and
//! deterministic instance generators.

// index-based loops mirror the subscript structure of the kernels
#![allow(clippy::needless_range_loop)]

pub mod coherence;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kruskal;
pub mod lemmas;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod solver;
pub mod synthesis;
pub mod tensor;

pub use error::{Error, Result};
pub use kruskal::KruskalModel;
pub use matrix::Matrix;
pub use tensor::DenseTensor;
