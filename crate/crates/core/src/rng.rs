//! Reproducible randomness: every trial draws from its own stream derived
//! from the master seed and the trial index, so results do not depend on how
//! trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_2013;

/// z-score of the two-sided 99% normal interval.
pub const Z99: f64 = 2.58;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// Bernoulli proportion `hits / trials`.
    pub fn proportion(hits: usize, trials: usize) -> Self {
        if trials == 0 {
            return MeanEstimate::default();
        }
        let p = hits as f64 / trials as f64;
        MeanEstimate {
            mean: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            samples: trials,
        }
    }

    /// Half-width of the 99% normal interval.
    pub fn radius(&self) -> f64 {
        Z99 * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, 3).gen();
        let b: u64 = trial_rng(7, 3).gen();
        let c: u64 = trial_rng(7, 4).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let est = MeanEstimate::from_values(&[2.0; 10]);
        assert_eq!(est.mean, 2.0);
        assert_eq!(est.std_error, 0.0);
    }
}
