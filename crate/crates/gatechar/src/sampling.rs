//! Seeded, order-independent shot sampling.
//!
//! Every circuit gets its own RNG stream derived from `(master seed,
//! circuit id)`, so datasets are reproducible no matter which order (or on
//! how many threads) the circuits are simulated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("shot count must be at least 1")]
    ZeroShots,
}

/// FNV-1a, fixed here so stream ids never depend on `std` hasher internals.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// An independent RNG stream for one circuit's shots.
#[derive(Debug, Clone)]
pub struct ShotStream {
    rng: ChaCha8Rng,
}

impl ShotStream {
    /// Stream keyed by the master seed and the circuit's stable id.
    pub fn new(master_seed: u64, circuit_id: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(fnv1a(circuit_id.as_bytes()));
        Self { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draws `Binomial(n, p)` and returns the number of successes, i.e. the
/// count of outcome 0 when `p = Pr(outcome 0)`.
pub fn sample_shots(p: f64, n: u64, stream: &mut ShotStream) -> Result<u64, SamplingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SamplingError::InvalidProbability(p));
    }
    if n == 0 {
        return Err(SamplingError::ZeroShots);
    }
    let dist = Binomial::new(n, p).expect("checked p and n above");
    Ok(dist.sample(stream.rng()))
}

/// Draws one multinomial sample over `probs` (which must sum to 1 within
/// tolerance) by chained binomials; used for joint two-qubit outcomes.
pub fn sample_multinomial(
    probs: &[f64],
    n: u64,
    stream: &mut ShotStream,
) -> Result<Vec<u64>, SamplingError> {
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
        return Err(SamplingError::InvalidProbability(total));
    }
    if n == 0 {
        return Err(SamplingError::ZeroShots);
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() || remaining_n == 0 {
            counts[i] = remaining_n;
            break;
        }
        let cond = (p / remaining_p).clamp(0.0, 1.0);
        let k = Binomial::new(remaining_n, cond)
            .expect("conditional probability in range")
            .sample(stream.rng());
        counts[i] = k;
        remaining_n -= k;
        remaining_p = (remaining_p - p).max(0.0);
        if remaining_p <= 0.0 {
            break;
        }
    }
    Ok(counts)
}
