//! Seeded random streams keyed by `(seed, agent, iteration)`.
//!
//! Each key maps to its own ChaCha20 stream: the run seed selects the key and
//! `(agent << 32) | iteration` selects the 64-bit stream id, so draws for one
//! agent at one iteration never overlap with any other pair.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Reserved agent ids for setup draws that are not tied to a single agent
/// step. They sit at the top of the 32-bit agent range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupPurpose {
    Graph,
    Suite,
    InitialPoints,
    PowerIteration,
    Verification,
}

impl SetupPurpose {
    fn agent_id(self) -> u32 {
        match self {
            SetupPurpose::Graph => u32::MAX,
            SetupPurpose::Suite => u32::MAX - 1,
            SetupPurpose::InitialPoints => u32::MAX - 2,
            SetupPurpose::PowerIteration => u32::MAX - 3,
            SetupPurpose::Verification => u32::MAX - 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub agent: u32,
    pub iteration: u32,
}

impl RngStream {
    pub fn new(seed: u64, agent: usize, iteration: u64) -> Self {
        Self {
            seed,
            agent: u32::try_from(agent).expect("agent index exceeds 32 bits"),
            iteration: u32::try_from(iteration).expect("iteration exceeds 32 bits"),
        }
    }

    pub fn setup(seed: u64, purpose: SetupPurpose) -> Self {
        Self {
            seed,
            agent: purpose.agent_id(),
            iteration: 0,
        }
    }

    /// Same purpose, different sub-stream (e.g. one per retry attempt).
    pub fn with_iteration(self, iteration: u32) -> Self {
        Self { iteration, ..self }
    }

    pub fn stream_id(&self) -> u64 {
        (u64::from(self.agent) << 32) | u64::from(self.iteration)
    }

    pub fn generator(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id());
        rng
    }
}
