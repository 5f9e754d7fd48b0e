//! Shared inputs for the criterion benchmarks.

use floss_core::ImageTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded uniform image with values in `[0, 1)`.
pub fn test_image(height: usize, width: usize, channels: usize, seed: u64) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageTensor::from_fn(height, width, channels, |_, _, _| rng.random::<f64>())
}
