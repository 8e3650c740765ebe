use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives a per-item seed from a run seed and a stable item key.
///
/// Every random stream in the crate is keyed this way, so results do not
/// depend on the order in which items are processed.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let hash = fnv1a_extend(FNV_OFFSET, &seed.to_le_bytes());
    let hash = fnv1a_extend(hash, &[0xff]);
    fnv1a_extend(hash, key.as_bytes())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    rng(derive_seed(seed, key))
}
