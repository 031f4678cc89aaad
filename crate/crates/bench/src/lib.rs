//! Benchmark fixtures; see `benches/`.

use curvlab::{find_model, CurvatureFrame, ModelSpec, ScalarField, TensorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A model with a frame at a fixed random point and seeded test fields.
pub struct Fixture {
    pub model: ModelSpec,
    pub point: Vec<f64>,
    pub frame: CurvatureFrame,
    pub f: ScalarField,
    pub h: TensorField,
}

pub fn fixture(name: &str, order: usize) -> Fixture {
    let model = find_model(name).expect("catalog model");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let point = model.sample_point(&mut rng);
    let frame = model.frame(&point, order).expect("frame");
    let f = model.random_scalar(&mut rng);
    let h = model.random_sym2(&mut rng);
    Fixture { model, point, frame, f, h }
}
