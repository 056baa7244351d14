//! Seeded random streams.
//!
//! Every consumer derives its own SplitMix64 stream from `(seed, purpose, index)`,
//! so sample `i` of a dataset draws the same numbers no matter which thread or
//! in which order it is generated.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
pub use rand_xoshiro::SplitMix64;

/// Independent stream purposes; keeps weight init, shuffling and data draws uncorrelated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 1,
    Split = 2,
    Init = 3,
    Shuffle = 4,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> SplitMix64 {
    let key = mix(seed ^ mix((purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        ^ mix(index.wrapping_add(0xD1B5_4A32_D192_ED03));
    SplitMix64::seed_from_u64(key)
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T, R: Rng + ?Sized>(rng: &mut R, items: &mut [T]) {
    items.shuffle(rng);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, Stream::Data, 3).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut s1 = stream(7, Stream::Data, 3);
        let mut s2 = stream(7, Stream::Data, 4);
        let mut s3 = stream(7, Stream::Init, 3);
        let x: u64 = s1.random();
        assert_ne!(x, s2.random::<u64>());
        assert_ne!(x, s3.random::<u64>());
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = stream(1, Stream::Data, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = stream(3, Stream::Shuffle, 0);
        let mut v: Vec<usize> = (0..100).collect();
        shuffle(&mut rng, &mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
