use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Photon-shot-noise limited readout averaged over `n_shots` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub n_shots: u64,
    pub readout_c: f64,
    pub seed: u64,
}

/// `1 / (2 C sqrt(N))`.
pub fn shot_noise_sigma(readout_c: f64, n_shots: u64) -> f64 {
    1.0 / (2.0 * readout_c * (n_shots as f64).sqrt())
}

/// Noisy population estimate and its standard error.
///
/// The draw depends only on `(seed, draw_index)`, so results do not change
/// with evaluation order or thread count.
pub fn sample_readout(p: f64, model: &ReadoutModel, draw_index: u64) -> (f64, f64) {
    let sigma = shot_noise_sigma(model.readout_c, model.n_shots.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(draw_index);
    let noise = Normal::new(0.0, sigma)
        .expect("finite sigma")
        .sample(&mut rng);
    ((p + noise).clamp(0.0, 1.0), sigma)
}
