//! Named configurations from the figure captions and the two published
//! hyperchaotic parameter sets.

use hyperlock_core::config::SystemConfig;
use hyperlock_core::dynamics::{ControlParams, CouplingParams, NodeState};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigPreset {
    pub name: &'static str,
    pub params: ControlParams,
    pub notes: &'static str,
    /// Full session, when the caption pins couplings and initial conditions.
    pub system: Option<SystemConfig>,
}

fn params(a: f64, b: f64, mu: f64) -> ControlParams {
    ControlParams { a, b, mu }
}

fn node(x: f64, y: f64, z: f64, w: f64) -> NodeState {
    NodeState { x, y, z, w }
}

const FIG2_PARAMS: (f64, f64, f64) = (-0.924402423687748, 0.438971098170411, 0.711718876046661);
const FIG4_PARAMS: (f64, f64, f64) = (-0.815215556019668, 0.724394324457102, 0.697158139176817);

fn fig2() -> SystemConfig {
    let (a, b, mu) = FIG2_PARAMS;
    SystemConfig::new(
        params(a, b, mu),
        CouplingParams { eps_x: 0.7, eps_z: 0.4 },
        node(0.162590738289674, -0.442583550778422, 0.141686475255563, -0.194570102178438),
        node(0.0601842136547941, 0.148286931043714, -0.307154096319608, 0.313998502860319),
    )
}

fn fig4() -> SystemConfig {
    let (a, b, mu) = FIG4_PARAMS;
    SystemConfig::new(
        params(a, b, mu),
        CouplingParams { eps_x: 0.797694334249407, eps_z: 0.840527637336788 },
        node(-0.45779369216014, -0.170731117605469, 0.312585918469052, -0.0302306179511633),
        node(-0.164151025323075, -0.324330970324339, -0.291053326006865, 0.405153559004464),
    )
}

fn with_bob(mut s: SystemConfig, bob: NodeState) -> SystemConfig {
    s.bob = bob;
    s
}

pub fn all() -> Vec<ConfigPreset> {
    let (a2, b2, m2) = FIG2_PARAMS;
    let (a4, b4, m4) = FIG4_PARAMS;
    vec![
        ConfigPreset {
            name: "vidal-a",
            params: params(-1.0, 1.1, 0.88),
            notes: "published hyperchaotic set a=-1, b=1.1, mu=0.88; not hyperchaotic for every initial condition",
            system: None,
        },
        ConfigPreset {
            name: "vidal-b",
            params: params(-1.0, 0.9, 1.25),
            notes: "published hyperchaotic set a=-1, b=0.9, mu>0 with mu=1.25",
            system: None,
        },
        ConfigPreset {
            name: "fig2",
            params: params(a2, b2, m2),
            notes: "finite-precision collapse; couplings not captioned, 0.7/0.4 chosen so the Fig. 3(a) pair synchronizes",
            system: Some(fig2()),
        },
        ConfigPreset {
            name: "fig3a",
            params: params(a2, b2, m2),
            notes: "same session as fig2; synchronizes",
            system: Some(fig2()),
        },
        ConfigPreset {
            name: "fig3b",
            params: params(a2, b2, m2),
            notes: "fig2 with the receiver initial conditions of Fig. 3(b); fails to synchronize",
            system: Some(with_bob(
                fig2(),
                node(0.47301962178438, 0.47301962178488, 0.143698049421405, 0.360098876854161),
            )),
        },
        ConfigPreset {
            name: "fig4",
            params: params(a4, b4, m4),
            notes: "synchronizing session; couplings taken from the Fig. 6 caption",
            system: Some(fig4()),
        },
        ConfigPreset {
            name: "fig6a",
            params: params(a4, b4, m4),
            notes: "fig4 with receiver initial conditions (a) of Fig. 6",
            system: Some(with_bob(
                fig4(),
                node(0.289073514938958, 0.352263890343846, 0.00563661757175615, 0.135661388861377),
            )),
        },
        ConfigPreset {
            name: "fig6b",
            params: params(a4, b4, m4),
            notes: "fig4 with receiver initial conditions (b) of Fig. 6",
            system: Some(with_bob(
                fig4(),
                node(0.238640291995402, 0.0859870358264758, -0.253265474014025, 0.166416217319468),
            )),
        },
        ConfigPreset {
            name: "fig7",
            params: params(-0.905791937075619, 0.126986816293506, 0.814723686393179),
            notes: "coupling-strength profile session",
            system: Some(SystemConfig::new(
                params(-0.905791937075619, 0.126986816293506, 0.814723686393179),
                CouplingParams { eps_x: 0.913375856139019, eps_z: 0.63235924622541 },
                node(-0.40245959500059, -0.221501781132952, 0.0468815192049838, 0.457506835434298),
                node(0.00595705166514238, -0.244904884540731, 0.00595705166514238, 0.199076722656686),
            )),
        },
        ConfigPreset {
            name: "fig8",
            params: params(-1.0, 0.9, 1.25),
            notes: "weak-key parameters of the gradient study; initial conditions and couplings drawn per setup",
            system: None,
        },
    ]
}

pub fn find(name: &str) -> Option<ConfigPreset> {
    all().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
}
