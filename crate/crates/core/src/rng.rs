//! Seeded random streams.
//!
//! A campaign owns one root seed. Every consumer of randomness draws from its
//! own named ChaCha stream derived from that seed, so adding or removing draws
//! in one consumer never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams used by the campaign loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    InitSampling = 1,
    BaseSelection = 2,
    Perturbation = 3,
    Exploration = 4,
    Baseline = 5,
    NoveltyInit = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Independent handles for every stream of one campaign.
#[derive(Debug, Clone)]
pub struct CampaignRng {
    pub init: ChaCha8Rng,
    pub base: ChaCha8Rng,
    pub perturb: ChaCha8Rng,
    pub explore: ChaCha8Rng,
    pub baseline: ChaCha8Rng,
    pub novelty: ChaCha8Rng,
}

impl CampaignRng {
    pub fn new(seed: u64) -> Self {
        Self {
            init: stream(seed, Stream::InitSampling),
            base: stream(seed, Stream::BaseSelection),
            perturb: stream(seed, Stream::Perturbation),
            explore: stream(seed, Stream::Exploration),
            baseline: stream(seed, Stream::Baseline),
            novelty: stream(seed, Stream::NoveltyInit),
        }
    }
}
