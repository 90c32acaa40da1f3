//! Seeding discipline.
//!
//! Every stochastic component draws from its own ChaCha stream derived from a
//! single experiment seed, so adding or removing one source of randomness
//! (say, dropout) never perturbs another (say, batch shuffling).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stochastic components that consume randomness during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Stratified split assignment.
    Split,
    /// Parameter initialization.
    Init,
    /// Per-epoch batch shuffling.
    Shuffle,
    /// Dropout masks.
    Dropout,
    /// Generator noise.
    Noise,
    /// Bootstrap resampling (forests).
    Bootstrap,
    /// Synthetic data generation in tests and fixtures.
    Data,
}

impl Component {
    fn stream(self) -> u64 {
        match self {
            Component::Split => 1,
            Component::Init => 2,
            Component::Shuffle => 3,
            Component::Dropout => 4,
            Component::Noise => 5,
            Component::Bootstrap => 6,
            Component::Data => 7,
        }
    }
}

/// Deterministic RNG for one component under one experiment seed.
pub fn stream(seed: u64, component: Component) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component.stream());
    rng
}
