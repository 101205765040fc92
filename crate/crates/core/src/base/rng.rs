use rand::rngs::OsRng;
use rand::{Rng, RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded pseudo-random generator owned by a single worker.
///
/// Equal seeds give equal streams. Independent sub-streams are obtained with
/// [`RandomSource::fork`].
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seeds from the operating system's entropy source.
    pub fn from_entropy() -> Self {
        let seed = OsRng
            .try_next_u64()
            .unwrap_or_else(|_| rand::rng().next_u64());
        Self::from_seed(seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A new source whose stream is independent of this one and of forks
    /// with other tags.
    pub fn fork(&self, tag: u64) -> Self {
        Self::from_seed(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(1))))
    }

    /// Uniform integer in `0..n`.
    pub fn uniform_int(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform_real(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
