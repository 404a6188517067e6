use hyperlock_core::cipher::{run_protocol, ProtocolLimits, ProtocolSession, Stage};
use hyperlock_core::config::{sample_system, SystemConfig};
use hyperlock_core::dynamics::ChannelDelay;
use hyperlock_core::rng::trial_rng;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Screened {
    pub config: SystemConfig,
    /// Attempts consumed, including the accepted one.
    pub attempts: usize,
    /// The admitting session with its transcript dropped; batch studies keep
    /// thousands of these.
    pub session: ProtocolSession,
}

/// Exchange and hyperchaos stages of the protocol, without the free run.
pub fn screening_limits() -> ProtocolLimits {
    ProtocolLimits {
        free_run_steps: 0,
        ..ProtocolLimits::default()
    }
}

/// Whether a session got through synchronization and the hyperchaos check.
pub fn admitted(session: &ProtocolSession) -> bool {
    session.history.contains(&Stage::FreeRunning)
}

/// Screens one session with the protocol's own synchronization and hyperchaos
/// stages.
pub fn screen(config: &SystemConfig, limits: &ProtocolLimits) -> ProtocolSession {
    run_protocol(config, config, config.channel_delay(), limits)
}

/// Rejection-samples random sessions until one synchronizes and is hyperchaotic.
/// Attempt `k` draws from stream `k` of `seed`.
pub fn random_hyperchaotic_config(seed: u64, max_attempts: usize) -> Result<Screened> {
    random_admitted(seed, max_attempts, &screening_limits(), sample_system)
}

/// [`random_hyperchaotic_config`] with a custom sampler.
pub fn random_admitted<F>(
    seed: u64,
    max_attempts: usize,
    limits: &ProtocolLimits,
    mut sample: F,
) -> Result<Screened>
where
    F: FnMut(&mut hyperlock_core::rng::StudyRng) -> SystemConfig,
{
    if max_attempts == 0 {
        return Err(HarnessError::Usage("max_attempts must be at least 1".into()));
    }
    for k in 0..max_attempts {
        let mut config = sample(&mut trial_rng(seed, k as u64));
        config.seed = seed;
        let mut session = run_protocol(&config, &config, ChannelDelay::NONE, limits);
        if admitted(&session) {
            session.drop_transcript();
            return Ok(Screened {
                config,
                attempts: k + 1,
                session,
            });
        }
    }
    Err(HarnessError::ExhaustedAttempts {
        attempts: max_attempts,
    })
}
