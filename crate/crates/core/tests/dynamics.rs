mod common;

use hyperlock_core::analysis::detect_synchronization;
use hyperlock_core::attacks::{nmse, NmseConfig};
use hyperlock_core::dynamics::*;
use hyperlock_core::rng::trial_rng;
use proptest::prelude::*;

fn cfg(n: usize) -> IntegratorConfig {
    IntegratorConfig::new(DEFAULT_STEP_H, n).unwrap()
}

#[test]
fn rk4_is_fourth_order() {
    let err = |n: usize| {
        let h = 1.0 / n as f64;
        let mut s = [1.0];
        for _ in 0..n {
            s = rk4_step(&s, h, |v| [-v[0]]);
        }
        (s[0] - (-1.0f64).exp()).abs()
    };
    let (e1, e2, e3) = (err(10), err(20), err(40));
    for ratio in [e1 / e2, e2 / e3] {
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}

#[test]
fn identical_nodes_stay_bit_identical() {
    let s = common::fig4();
    let init = CoupledState::new(s.alice, s.alice);
    let o = integrate(&init, &s.params, &s.coupling, &cfg(20_000), ChannelDelay::NONE, &Var::COUPLED).unwrap();
    for (a, b) in [(Var::XA, Var::XB), (Var::YA, Var::YB), (Var::ZA, Var::ZB), (Var::WA, Var::WB)] {
        assert_eq!(o.get(a).unwrap(), o.get(b).unwrap());
    }
}

#[test]
fn runs_are_deterministic_and_delay_zero_is_live() {
    let s = common::fig4();
    let c = cfg(5_000);
    let a = integrate(&s.init(), &s.params, &s.coupling, &c, ChannelDelay::NONE, &Var::COUPLED).unwrap();
    let b = integrate(&s.init(), &s.params, &s.coupling, &c, ChannelDelay::symmetric(0), &Var::COUPLED).unwrap();
    let (r, _) = integrate_recorded(&s.init(), &s.params, &s.coupling, &c, &Var::COUPLED).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, r);
    assert_eq!(a.len(), 5_001);
}

/// Independent stage-sampled delayed integration used as an oracle.
fn delayed_oracle(s: &hyperlock_core::config::SystemConfig, d: usize, n: usize) -> Vec<[f64; 8]> {
    let (p, c, h) = (s.params, s.coupling, s.step_h);
    let field = |v: &[f64; 4], ex: f64, xin: f64, ez: f64, zin: f64| {
        let (x, y, z, w) = (v[0], v[1], v[2], v[3]);
        let r2 = x * x + z * z;
        [
            y + ex * (xin - x),
            p.mu * x + x * (p.a * r2 + p.b * z * z),
            w + ez * (zin - z),
            p.mu * z + z * (p.a * r2 + p.b * x * x),
        ]
    };
    let mut a = s.alice.to_array();
    let mut b = s.bob.to_array();
    let mut sent_x: Vec<[f64; 4]> = Vec::new();
    let mut sent_z: Vec<[f64; 4]> = Vec::new();
    let mut out = Vec::new();
    for i in 0..n {
        let mut ka = [[0.0; 4]; 4];
        let mut kb = [[0.0; 4]; 4];
        let mut xs = [0.0; 4];
        let mut zs = [0.0; 4];
        for st in 0..4 {
            let cc = [0.0, 0.5, 0.5, 1.0][st];
            let mut ta = a;
            let mut tb = b;
            if st > 0 {
                for j in 0..4 {
                    ta[j] = a[j] + cc * h * ka[st - 1][j];
                    tb[j] = b[j] + cc * h * kb[st - 1][j];
                }
            }
            xs[st] = tb[0];
            zs[st] = ta[2];
            let (xin, zin) = if i < d {
                (s.bob.x, s.alice.z)
            } else {
                (sent_x[i - d][st], sent_z[i - d][st])
            };
            ka[st] = field(&ta, c.eps_x, xin, 0.0, 0.0);
            kb[st] = field(&tb, 0.0, 0.0, c.eps_z, zin);
        }
        sent_x.push(xs);
        sent_z.push(zs);
        for j in 0..4 {
            a[j] += h / 6.0 * (ka[0][j] + 2.0 * ka[1][j] + 2.0 * ka[2][j] + ka[3][j]);
            b[j] += h / 6.0 * (kb[0][j] + 2.0 * kb[1][j] + 2.0 * kb[2][j] + kb[3][j]);
        }
        out.push([a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]);
    }
    out
}

#[test]
fn delayed_channel_matches_oracle() {
    let s = common::fig4();
    for d in [1, 7] {
        let n = 3_000;
        let o = integrate(&s.init(), &s.params, &s.coupling, &cfg(n), ChannelDelay::symmetric(d), &Var::COUPLED).unwrap();
        let want = delayed_oracle(&s, d, n);
        for (k, v) in Var::COUPLED.iter().enumerate() {
            let got = o.get(*v).unwrap();
            for i in 0..n {
                assert!((got[i + 1] - want[i][k]).abs() < 1e-12, "d={d} {v} step {i}");
            }
        }
    }
}

#[test]
fn delay_line_holds_then_delivers() {
    let mut line = DelayLine::primed(2, 9.0);
    assert_eq!(line.len(), 2);
    assert_eq!(line.exchange([1.0; 4]), [9.0; 4]);
    assert_eq!(line.exchange([2.0; 4]), [9.0; 4]);
    assert_eq!(line.exchange([3.0; 4]), [1.0; 4]);
    assert_eq!(line.len(), 2);
    let mut pass = DelayLine::primed(0, 9.0);
    assert!(pass.is_passthrough());
    assert_eq!(pass.exchange([4.0; 4]), [4.0; 4]);
    assert_eq!(delay_steps_for_ms(10.0, 0.01), 1);
    assert_eq!(delay_steps_for_ms(10.0, 0.001), 10);
}

#[test]
fn fig4_synchronizes_and_stays() {
    let s = common::fig4();
    let o = integrate(&s.init(), &s.params, &s.coupling, &cfg(100_000), ChannelDelay::NONE, &Var::COUPLED).unwrap();
    let g = |v| o.get(v).unwrap();
    let verdict = detect_synchronization(g(Var::XA), g(Var::XB), g(Var::ZA), g(Var::ZB), 1e-6, 1000).unwrap();
    let start = verdict.detect_step.expect("synchronizes");
    let (xa, xb) = (g(Var::XA), g(Var::XB));
    assert!((start..xa.len()).all(|i| (xa[i] - xb[i]).abs() < 1e-6));
}

#[test]
fn divergence_returns_partial_orbit() {
    let p = ControlParams::new(1.0, 1.0, 1.0).unwrap();
    let c = CouplingParams::new(0.5, 0.5).unwrap();
    let n = NodeState::new(0.4, 0.4, 0.4, 0.4);
    let err = integrate(&CoupledState::new(n, n), &p, &c, &cfg(100_000), ChannelDelay::NONE, &[Var::XA]).unwrap_err();
    assert!(err.step > 0 && err.step < 100_000);
    assert_eq!(err.partial.len(), err.step + 1);
    assert_eq!(err.partial.diverged_at, Some(err.step));
}

#[test]
fn eve_with_truth_reproduces_z_a_exactly() {
    let s = common::fig7();
    let n = 5_000;
    let (o, drive) = integrate_recorded(&s.init(), &s.params, &s.coupling, &cfg(n), &[Var::ZA]).unwrap();
    let e = integrate_eve(&s.alice, &drive, &s.params, s.coupling.eps_x, &cfg(n)).unwrap();
    let (za, ze) = (o.get(Var::ZA).unwrap(), e.get(Var::ZE).unwrap());
    assert_eq!(za, ze);
    let c = NmseConfig::default().with_horizon(n as f64 * DEFAULT_STEP_H);
    assert!(nmse(za, ze, DEFAULT_STEP_H, &c).unwrap().value < 1e-12);
}

#[test]
fn eve_on_zero_drive_stays_at_origin() {
    let p = ControlParams::new(-1.0, 0.9, 0.88).unwrap();
    let drive = DriveSignal::from_samples(DEFAULT_STEP_H, &vec![0.0; 1000]);
    let e = integrate_eve(&NodeState::ZERO, &drive, &p, 0.5, &cfg(1000)).unwrap();
    assert!(e.get(Var::ZE).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn eve_rejects_short_recording() {
    let p = ControlParams::new(-1.0, 0.9, 0.88).unwrap();
    let drive = DriveSignal::from_samples(DEFAULT_STEP_H, &[0.0; 10]);
    assert!(integrate_eve(&NodeState::ZERO, &drive, &p, 0.5, &cfg(11)).is_err());
}

#[test]
fn nmse_grows_with_w_perturbation() {
    let s = common::fig7();
    let n = 3_200;
    let (o, drive) = integrate_recorded(&s.init(), &s.params, &s.coupling, &cfg(n), &[Var::ZA]).unwrap();
    let za = o.get(Var::ZA).unwrap();
    let c = NmseConfig::default().with_horizon(n as f64 * DEFAULT_STEP_H);
    let score = |dw: f64| {
        let mut e0 = s.alice;
        e0.w += dw;
        let e = integrate_eve(&e0, &drive, &s.params, s.coupling.eps_x, &cfg(n)).unwrap();
        nmse(za, e.get(Var::ZE).unwrap(), DEFAULT_STEP_H, &c).unwrap().value
    };
    let (a, b, d) = (score(1e-4), score(1e-3), score(2e-3));
    assert!(a > 0.0 && a < b && b < d, "{a} {b} {d}");
}

#[test]
fn random_initial_nodes() {
    let a = random_initial_node(&mut trial_rng(5, 0));
    let b = random_initial_node(&mut trial_rng(5, 0));
    assert_eq!(a, b);
    let mut rng = trial_rng(99, 1);
    let draws: Vec<[f64; 4]> = (0..10_000).map(|_| random_initial_node(&mut rng).to_array()).collect();
    for k in 0..4 {
        let col = draws.iter().map(|d| d[k]);
        assert!(col.clone().all(|v| (-0.5..=0.5).contains(&v)));
        let mean = col.sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.02);
    }
}

#[test]
fn coupling_range_enforced() {
    assert!(CouplingParams::new(0.05, 0.5).is_err());
    assert!(CouplingParams::new(0.5, 1.2).is_err());
    assert!(CouplingParams::permissive(0.0, 2.0).is_ok());
    assert!(CouplingParams::permissive(f64::NAN, 0.5).is_err());
    assert!(ControlParams::new(f64::INFINITY, 0.0, 0.0).is_err());
    assert!(IntegratorConfig::new(0.0, 10).is_err());
    assert!(IntegratorConfig::new(0.01, 0).is_err());
}

fn unit() -> impl Strategy<Value = f64> {
    -0.5f64..0.5
}

fn node() -> impl Strategy<Value = NodeState> {
    (unit(), unit(), unit(), unit()).prop_map(|(x, y, z, w)| NodeState::new(x, y, z, w))
}

fn params() -> impl Strategy<Value = ControlParams> {
    (-1.1f64..-0.4, 0.1f64..1.2, 0.5f64..1.3).prop_map(|(a, b, mu)| ControlParams::new(a, b, mu).unwrap())
}

fn coupling() -> impl Strategy<Value = CouplingParams> {
    (0.1f64..1.1, 0.1f64..1.1).prop_map(|(x, z)| CouplingParams::new(x, z).unwrap())
}

proptest! {
    #[test]
    fn origin_fixed_for_all_parameters(p in params(), c in coupling()) {
        let d = coupled_derivative(&CoupledState::default(), &p, &c, 0.0, 0.0).unwrap();
        prop_assert_eq!(d.to_array(), [0.0; 8]);
    }

    #[test]
    fn synchronization_manifold_is_invariant(n in node(), p in params(), c in coupling()) {
        let d = coupled_derivative(&CoupledState::new(n, n), &p, &c, n.x, n.z).unwrap();
        prop_assert_eq!(d.alice, d.bob);
        let free = coupled_derivative(&CoupledState::new(n, n), &p, &CouplingParams::UNCOUPLED, n.x, n.z).unwrap();
        prop_assert_eq!(d, free);
    }

    #[test]
    fn eve_is_alice_relabeled(a in node(), b in node(), p in params(), c in coupling(), xin in unit(), zin in unit()) {
        let d = coupled_derivative(&CoupledState::new(a, b), &p, &c, xin, zin).unwrap();
        let e = eve_derivative(&a, xin, &p, c.eps_x).unwrap();
        prop_assert_eq!(d.alice, e);
    }
}
