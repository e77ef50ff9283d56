//! Counter-based random streams.
//!
//! Every mini-batch is addressed by a [`StreamKey`] (master seed, role,
//! oracle index, iteration). A key expands into per-sample identifiers by
//! mixing in the draw index, so the same batch can be replayed at a second
//! point without re-drawing it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for. Distinct roles never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Setting-I objective samples ζ.
    Objective,
    /// Outer block B ⊂ {1..n} in Setting II.
    OuterBlock,
    /// Inner samples B_{1,i} for FCCO inner function i.
    Inner,
    /// Constraint block B_c ⊂ {1..m}.
    ConstraintBlock,
    /// Samples B_{2,k} for tracked constraint quantity k.
    Constraint,
    /// Output-iterate selection.
    Output,
    /// Free-standing draws (tests, oracle checks).
    Ad,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Objective => 1,
            Role::OuterBlock => 2,
            Role::Inner => 3,
            Role::ConstraintBlock => 4,
            Role::Constraint => 5,
            Role::Output => 6,
            Role::Ad => 7,
        }
    }
}

/// Iteration index reserved for tracker initialisation draws.
pub const INIT_ITERATION: u64 = u64::MAX;

/// Address of one mini-batch draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub role: Role,
    pub index: u64,
    pub iteration: u64,
}

impl StreamKey {
    pub fn new(seed: u64, role: Role, index: u64, iteration: u64) -> Self {
        Self {
            seed,
            role,
            index,
            iteration,
        }
    }

    /// Collapses the key to a single 64-bit stream id.
    pub fn id(&self) -> u64 {
        let mut h = splitmix64(self.seed ^ 0x6a09_e667_f3bc_c908);
        h = splitmix64(h ^ self.role.tag());
        h = splitmix64(h ^ self.index);
        splitmix64(h ^ self.iteration)
    }

    /// Identifier of the `draw`-th sample in this batch.
    pub fn sample(&self, draw: u64) -> SampleId {
        SampleId(splitmix64(self.id() ^ splitmix64(draw.wrapping_add(0x9e37_79b9))))
    }

    /// Generator for structural draws (block selection, output index).
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.id())
    }
}

/// Identifier of a single stochastic sample ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleId(pub u64);

impl SampleId {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// A materialised mini-batch: its key and the sample identifiers drawn from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub key: StreamKey,
    pub samples: Vec<SampleId>,
}

impl Batch {
    pub fn draw(key: StreamKey, size: usize) -> Self {
        Self {
            key,
            samples: (0..size as u64).map(|j| key.sample(j)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform subset of `{0..total}` of size `block`, sorted. Returns the full
/// range when `block == total` without consuming randomness.
pub fn sample_block(key: StreamKey, total: usize, block: usize) -> Vec<usize> {
    if block >= total {
        return (0..total).collect();
    }
    let mut rng = key.rng();
    let mut picked = rand::seq::index::sample(&mut rng, total, block).into_vec();
    picked.sort_unstable();
    picked
}
