//! Per-key randomness. Every random decision about a key is drawn from a
//! ChaCha stream seeded by `(seed, purpose, hash(key))`, so results do not
//! depend on iteration order or on how keys are split across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    Sampling = 1,
    KeySanitizer = 2,
    FrequencySanitizer = 3,
    LaplaceNoise = 4,
}

// FNV-1a; only needs to be stable across platforms and releases.
fn key_hash(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub(crate) fn key_stream(seed: u64, purpose: Purpose, key: &str) -> ChaCha8Rng {
    let mut material = [0u8; 32];
    material[..8].copy_from_slice(&seed.to_le_bytes());
    material[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    material[16..24].copy_from_slice(&key_hash(key).to_le_bytes());
    material[24..].copy_from_slice(&(key.len() as u64).to_le_bytes());
    ChaCha8Rng::from_seed(material)
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Laplace(0, scale) by inverse CDF.
pub(crate) fn laplace<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let u = open_unit(rng) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = key_stream(7, Purpose::Sampling, "x").gen();
        let b: u64 = key_stream(7, Purpose::Sampling, "x").gen();
        let c: u64 = key_stream(7, Purpose::KeySanitizer, "x").gen();
        let d: u64 = key_stream(8, Purpose::Sampling, "x").gen();
        let e: u64 = key_stream(7, Purpose::Sampling, "y").gen();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }

    #[test]
    fn laplace_moments() {
        let mut rng = key_stream(1, Purpose::LaplaceNoise, "moments");
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| laplace(&mut rng, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // Var = 2b² = 8; sd of the mean = sqrt(8 / n)
        assert!(mean.abs() < 4.0 * (8.0 / n as f64).sqrt());
        assert!((var - 8.0).abs() < 0.2);
    }
}
