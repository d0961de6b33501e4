use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) type SolverRng = ChaCha8Rng;

/// SplitMix64 finaliser; used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a child stream identified by `coords` under `seed`.
pub(crate) fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix(seed), |acc, &c| {
        mix(acc ^ mix(c.wrapping_add(0x5851_f42d_4c95_7f2d)))
    })
}

pub(crate) fn rng_from(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}
