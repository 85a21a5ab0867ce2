//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed
//! with `SeedableRng::seed_from_u64(seed)`. Standard normals come from the
//! ziggurat sampler of `rand_distr::StandardNormal` and are generated in
//! row-major order, so a `(rows, cols)` matrix consumes the stream one row at
//! a time. ChaCha output is platform independent, which makes every fixture
//! reproducible from its seed alone.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` matrix of independent N(0, 1) draws.
pub fn standard_normal(rng: &mut Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}
