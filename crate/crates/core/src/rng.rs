//! Random-number plumbing: reproducible streams and complex Gaussians.
//!
//! Every stochastic entry point takes a `u64` seed. Parallel work splits
//! the seed into independent ChaCha streams keyed by the work index, so
//! results do not depend on thread count or scheduling order.

use nalgebra::DVector;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic RNG for the `index`-th independent unit of work.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One sample of a circularly-symmetric complex Gaussian, unit variance
/// (variance 1/2 per real dimension).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Vector of iid unit-variance complex Gaussians.
pub fn complex_gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<Complex<f64>> {
    DVector::from_fn(n, |_, _| complex_gaussian(rng))
}
