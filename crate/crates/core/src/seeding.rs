//! Derivation of independent RNG seeds from a base seed and a counter, so
//! that repetitions and sub-streams (design, test set, chain) never share
//! state. SplitMix64 finalizer; consecutive counters give well-separated
//! seeds.

pub fn counter_rng_seed(base_seed: u64, counter: u64) -> u64 {
    let mut z = base_seed.wrapping_add(counter.wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
