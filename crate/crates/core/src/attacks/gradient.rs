use super::objective::{finite_difference_jacobian, normal_equations, solve_damped, Objective, Param, Theta};
use super::report::{EstimationReport, EveConfig, Method, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Negative gradient.
    Steepest,
    /// Gauss–Newton direction from the same finite-difference Jacobian.
    GaussNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOptions {
    /// Central-difference step relative to `max(|θ_i|, 1)`.
    pub fd_rel_step: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub direction: Direction,
    /// Initial trial step length along the direction.
    pub step0: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            fd_rel_step: 1e-6,
            max_iters: 200,
            max_halvings: 40,
            direction: Direction::GaussNewton,
            step0: 1.0,
        }
    }
}

/// Descent on the objective with a central-difference gradient `2Jᵀr / n` and
/// backtracking: the trial step is halved until the objective decreases.
///
/// Stops when the objective reaches 0, when no halving gives a decrease, or after
/// `max_iters` iterations.
pub fn gradient_descent_attack<O: Objective + ?Sized>(
    start: &Theta,
    free: &[Param],
    obj: &O,
    opts: &GradientOptions,
) -> EstimationReport {
    let mut x = *start;
    let mut fx = obj.value(&x);
    let mut evals = 1;
    let mut trace = vec![fx];
    let mut status = Status::BudgetExhausted;
    for _ in 0..opts.max_iters {
        if fx == 0.0 {
            status = Status::Converged;
            break;
        }
        if !fx.is_finite() {
            status = Status::Diverged;
            break;
        }
        let Some((r, cols, used)) = finite_difference_jacobian(obj, &x, free, opts.fd_rel_step) else {
            status = Status::Diverged;
            break;
        };
        evals += used;
        let n = r.len() as f64;
        let (jtj, jtr) = normal_equations(&cols, &r);
        let grad: Vec<f64> = jtr.iter().map(|v| 2.0 * v / n).collect();
        let dir = match opts.direction {
            Direction::Steepest => grad.iter().map(|g| -g).collect(),
            Direction::GaussNewton => {
                let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
                match solve_damped(&jtj, &rhs, 1e-12) {
                    Some(d) => d,
                    None => grad.iter().map(|g| -g).collect(),
                }
            }
        };
        let mut t = opts.step0;
        let mut moved = false;
        for _ in 0..=opts.max_halvings {
            let mut y = x;
            for (p, d) in free.iter().zip(&dir) {
                y[p.index()] += t * d;
            }
            let fy = obj.value(&y);
            evals += 1;
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(fx);
        if !moved {
            status = Status::Converged;
            break;
        }
    }
    let mut report = EstimationReport::new(
        EveConfig::from_theta(&x, obj.pinned_z()),
        fx,
        evals,
        Method::GradientDescent,
        status,
    );
    report.trace = trace;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::objective::Quadratic;

    #[test]
    fn steepest_descent_converges_linearly() {
        let q = Quadratic::diagonal([0.3, -0.1, 0.2, 0.05], [1.0, 1.5, 0.8, 1.2]);
        let opts = GradientOptions {
            direction: Direction::Steepest,
            max_iters: 400,
            ..Default::default()
        };
        let r = gradient_descent_attack(&[0.9, 0.4, -0.3, -0.2], &Param::ALL, &q, &opts);
        for (e, c) in r.estimates.theta().iter().zip(q.center) {
            assert!((e - c).abs() < 1e-7);
        }
        let t = &r.trace;
        assert!(t.windows(2).all(|w| w[1] <= w[0]));
        let ratio = t[11] / t[10];
        assert!(ratio < 0.99 && ratio > 0.0, "ratio {ratio}");
    }

    #[test]
    fn start_at_truth_stops_immediately() {
        let c = [0.4, 0.1, -0.1, 0.2];
        let q = Quadratic::diagonal(c, [1.0; 4]);
        let r = gradient_descent_attack(&c, &Param::ALL, &q, &GradientOptions::default());
        assert_eq!(r.estimates.theta(), c);
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn gradient_at_truth_is_tiny() {
        let q = Quadratic {
            center: [0.3, 0.2, 0.1, 0.0],
            rows: vec![[1.0, 2.0, 0.0, 0.5], [0.0, 1.0, 3.0, 0.0], [1.0, 0.0, 0.0, 1.0]],
        };
        let (r, cols, _) = finite_difference_jacobian(&q, &q.center, &Param::ALL, 1e-6).unwrap();
        let (_, jtr) = normal_equations(&cols, &r);
        assert!(jtr.iter().all(|g| g.abs() < 1e-12));
    }
}
