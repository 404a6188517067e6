#![allow(dead_code)]

use hyperlock_core::config::SystemConfig;
use hyperlock_core::dynamics::{ControlParams, CouplingParams, NodeState};

/// Fig. 4 session with the couplings of Fig. 6.
pub fn fig4() -> SystemConfig {
    SystemConfig::new(
        ControlParams::new(-0.815215556019668, 0.724394324457102, 0.697158139176817).unwrap(),
        CouplingParams::new(0.797694334249407, 0.840527637336788).unwrap(),
        NodeState::new(-0.45779369216014, -0.170731117605469, 0.312585918469052, -0.0302306179511633),
        NodeState::new(-0.164151025323075, -0.324330970324339, -0.291053326006865, 0.405153559004464),
    )
}

/// Fig. 7 session.
pub fn fig7() -> SystemConfig {
    SystemConfig::new(
        ControlParams::new(-0.905791937075619, 0.126986816293506, 0.814723686393179).unwrap(),
        CouplingParams::new(0.913375856139019, 0.63235924622541).unwrap(),
        NodeState::new(-0.40245959500059, -0.221501781132952, 0.0468815192049838, 0.457506835434298),
        NodeState::new(0.00595705166514238, -0.244904884540731, 0.00595705166514238, 0.199076722656686),
    )
}

/// Fig. 2 / Fig. 3(a) session. The couplings are not captioned; these synchronize
/// the Fig. 3(a) initial conditions.
pub fn fig2() -> SystemConfig {
    SystemConfig::new(
        ControlParams::new(-0.924402423687748, 0.438971098170411, 0.711718876046661).unwrap(),
        CouplingParams::new(0.7, 0.4).unwrap(),
        NodeState::new(0.162590738289674, -0.442583550778422, 0.141686475255563, -0.194570102178438),
        NodeState::new(0.0601842136547941, 0.148286931043714, -0.307154096319608, 0.313998502860319),
    )
}

/// Fig. 3(b): the Fig. 2 session with Bob's alternative initial conditions.
pub fn fig3b() -> SystemConfig {
    let mut s = fig2();
    s.bob = NodeState::new(0.47301962178438, 0.47301962178488, 0.143698049421405, 0.360098876854161);
    s
}
