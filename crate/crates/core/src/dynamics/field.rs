use super::types::{ControlParams, CoupledState, CouplingParams, NodeState, DEFAULT_DIVERGENCE_BOUND};
use crate::error::{Error, Result};

#[inline(always)]
pub(crate) fn free_field(s: &[f64; 4], p: &ControlParams) -> [f64; 4] {
    let [x, y, z, w] = *s;
    let r2 = x * x + z * z;
    [
        y,
        p.mu * x + x * (p.a * r2 + p.b * z * z),
        w,
        p.mu * z + z * (p.a * r2 + p.b * x * x),
    ]
}

/// Alice's (and Eve's) field: coupling enters `ẋ`.
#[inline(always)]
pub(crate) fn x_driven(s: &[f64; 4], p: &ControlParams, eps: f64, x_in: f64) -> [f64; 4] {
    let mut d = free_field(s, p);
    d[0] = s[1] + eps * (x_in - s[0]);
    d
}

/// Bob's field: coupling enters `ż`.
#[inline(always)]
pub(crate) fn z_driven(s: &[f64; 4], p: &ControlParams, eps: f64, z_in: f64) -> [f64; 4] {
    let mut d = free_field(s, p);
    d[2] = s[3] + eps * (z_in - s[2]);
    d
}

fn guard(values: &[f64]) -> Result<()> {
    if values
        .iter()
        .all(|v| v.is_finite() && v.abs() <= DEFAULT_DIVERGENCE_BOUND)
    {
        Ok(())
    } else {
        Err(Error::Diverged { step: 0 })
    }
}

/// Time derivative of the coupled system, with `x_b_in` and `z_a_in` the (possibly
/// delayed) signals each party received.
pub fn coupled_derivative(
    s: &CoupledState,
    p: &ControlParams,
    c: &CouplingParams,
    x_b_in: f64,
    z_a_in: f64,
) -> Result<CoupledState> {
    guard(&s.to_array())?;
    guard(&[x_b_in, z_a_in])?;
    let da = x_driven(&s.alice.to_array(), p, c.eps_x, x_b_in);
    let db = z_driven(&s.bob.to_array(), p, c.eps_z, z_a_in);
    Ok(CoupledState::new(
        NodeState::from_array(da),
        NodeState::from_array(db),
    ))
}

/// Time derivative of Eve's copy of Alice's system.
pub fn eve_derivative(
    e: &NodeState,
    x_b_in: f64,
    p: &ControlParams,
    eps_ex: f64,
) -> Result<NodeState> {
    guard(&e.to_array())?;
    guard(&[x_b_in])?;
    Ok(NodeState::from_array(x_driven(&e.to_array(), p, eps_ex, x_b_in)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ControlParams {
        ControlParams::new(-1.0, 0.9, 0.88).unwrap()
    }

    #[test]
    fn origin_is_fixed() {
        let c = CouplingParams::new(0.5, 0.7).unwrap();
        let d = coupled_derivative(&CoupledState::default(), &p(), &c, 0.0, 0.0).unwrap();
        assert_eq!(d.to_array(), [0.0; 8]);
        let e = eve_derivative(&NodeState::ZERO, 0.0, &p(), 0.3).unwrap();
        assert_eq!(e.to_array(), [0.0; 4]);
    }

    #[test]
    fn hand_evaluated_point() {
        let a = NodeState::new(1.0, 0.0, 0.0, 0.0);
        let c = CouplingParams::new(0.5, 0.5).unwrap();
        let d = coupled_derivative(&CoupledState::new(a, a), &p(), &c, 1.0, 0.0).unwrap();
        assert_eq!(d.alice.x, 0.0);
        assert!((d.alice.y - (0.88 - 1.0)).abs() < 1e-15);
        assert_eq!(d.alice, d.bob);

        let e = eve_derivative(&a, 1.0, &p(), 0.5).unwrap();
        assert_eq!(e.x, 0.0);
        assert!((e.y + 0.12).abs() < 1e-15);
    }

    #[test]
    fn guard_trips_on_huge_state() {
        let s = CoupledState::new(NodeState::new(2e6, 0.0, 0.0, 0.0), NodeState::ZERO);
        let c = CouplingParams::new(0.5, 0.5).unwrap();
        assert!(coupled_derivative(&s, &p(), &c, 0.0, 0.0).is_err());
        assert!(eve_derivative(&NodeState::ZERO, f64::NAN, &p(), 0.5).is_err());
    }
}
