//! Seeded mock trials: a predicted pose plus marker noise that accumulates
//! from base to tip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tale_core::tail::TailPose;

use crate::io::Trial;

/// Marker noise per joint and axis (mm).
pub const DEFAULT_NOISE: f64 = 1.5;
pub const DEFAULT_TRIALS: usize = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` noisy copies of the bone centroids of `pose`. Each joint adds an
/// independent `N(0, σ²)` offset per axis on top of the offsets of the
/// joints before it.
pub fn noisy_trials<R: Rng>(pose: &TailPose, n: usize, sigma: f64, rng: &mut R) -> Vec<Trial> {
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and >= 0");
    (0..n)
        .map(|t| {
            let mut drift = [0.0; 3];
            let joints = pose
                .bone_centroids
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    for d in &mut drift {
                        *d += noise.sample(rng);
                    }
                    (j as u32 + 1, [c[0] + drift[0], c[1] + drift[1], c[2] + drift[2]])
                })
                .collect();
            Trial {
                trial_id: t as u32 + 1,
                joints,
            }
        })
        .collect()
}
