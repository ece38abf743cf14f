#![allow(dead_code)]

use formation_core::rigidity::Framework;
use formation_core::{builtin_law, FormationGraph, TargetLengths, VectorFieldBundle};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn squared_bundle(d: Vec<f64>) -> VectorFieldBundle<f64> {
    VectorFieldBundle::with_builtin(
        FormationGraph::two_cycles(),
        TargetLengths::squared(d).unwrap(),
        builtin_law("gradient_squared", 1.0, None).unwrap(),
    )
    .unwrap()
}

pub fn random_positions(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..2 * n).map(|_| rng.gen_range(-half..half)).collect()
}

pub fn random_framework(rng: &mut ChaCha8Rng) -> Framework<f64> {
    Framework::from_flat(FormationGraph::two_cycles(), &random_positions(rng, 4, 2.0)).unwrap()
}

/// Squared lengths of a random, well-spread framework: always feasible and,
/// with probability one, away from the singular set.
pub fn random_feasible_lengths(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let f = random_framework(rng);
        let z = f.edge_vectors().z;
        let spread = |a: usize, b: usize| z[a].cross(z[b]).abs() > 0.1 * z[a].norm() * z[b].norm();
        // Both triangles non-degenerate and z₁ clearly not parallel to z₅.
        let ok = z.iter().all(|v| v.norm() > 0.5) && spread(0, 2) && spread(2, 4) && spread(0, 4);
        if ok {
            return z.iter().map(|v| v.norm_sq()).collect();
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
