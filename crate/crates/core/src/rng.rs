//! Seeded random streams.
//!
//! Every study derives one ChaCha8 stream per trial from `(seed, trial)`, so a trial's
//! draws do not depend on which thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StudyRng = ChaCha8Rng;

/// Name recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), stream = trial index";

pub fn trial_rng(seed: u64, trial: u64) -> StudyRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
