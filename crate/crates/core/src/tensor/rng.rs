use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Value-like seed for the counter-based ChaCha8 generator.
///
/// A state never mutates; callers derive independent child states with
/// [`RngState::split`] and open a generator with [`RngState::generator`].
/// The same seed yields the same stream regardless of thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    seed: u64,
}

pub const RNG_ALGORITHM: &str = "chacha8";

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child state for stream `id`, decorrelated from the parent and siblings.
    pub fn split(&self, id: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(id.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
