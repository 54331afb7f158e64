//! Shared helpers for the integration tests.

use std::path::Path;

use cp_altls::rng::{Stream, StreamRng};
use cp_altls::{KruskalModel, Matrix};

/// Synthesize a low-rank model with unit-sphere columns and integer weights,
/// then write its reconstruction in the text tensor format.
pub fn write_synthetic_tensor(path: &Path, shape: &[usize], rank: usize, seed: u64) {
    let mut rng = StreamRng::new(seed, Stream::Factors);
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
    let weights = (0..rank).map(|r| 1.0 + r as f64).collect();
    let model = KruskalModel::new(weights, factors).expect("consistent shapes");
    let tensor = model.reconstruct();
    let mut buf = Vec::new();
    cp_altls::io::write_tensor_text(&tensor, &mut buf).expect("serializable");
    std::fs::write(path, buf).expect("writable test directory");
}
