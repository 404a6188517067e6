use super::objective::{finite_difference_jacobian, normal_equations, solve_damped, Objective, Param, Theta};
use super::report::{EstimationReport, EveConfig, Method, Status};
use crate::error::{Error, Result};

/// Optional search step tried before each poll.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStep {
    /// Plain compass search.
    None,
    /// Damped Gauss–Newton step from a finite-difference residual Jacobian.
    GaussNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternOptions {
    pub mesh0: f64,
    pub contraction: f64,
    pub expansion: f64,
    pub max_evals: usize,
    /// Stop once the mesh falls below this.
    pub tol: f64,
    pub search: SearchStep,
}

impl Default for PatternOptions {
    fn default() -> Self {
        Self {
            mesh0: 0.05,
            contraction: 0.5,
            expansion: 1.0,
            max_evals: 3000,
            tol: 1e-13,
            search: SearchStep::GaussNewton,
        }
    }
}

struct Lm {
    lambda: f64,
}

impl Lm {
    /// Up to three damped steps; returns the first that improves on `fx`.
    fn try_step<O: Objective + ?Sized>(
        &mut self,
        obj: &O,
        x: &Theta,
        fx: f64,
        free: &[Param],
        evals: &mut usize,
    ) -> Option<(Theta, f64)> {
        let (r, cols, used) = finite_difference_jacobian(obj, x, free, 1e-7)?;
        *evals += used;
        let (jtj, jtr) = normal_equations(&cols, &r);
        let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
        for _ in 0..3 {
            let step = solve_damped(&jtj, &rhs, self.lambda)?;
            let mut y = *x;
            for (p, d) in free.iter().zip(&step) {
                y[p.index()] += d;
            }
            let fy = obj.value(&y);
            *evals += 1;
            if fy < fx {
                self.lambda = (self.lambda / 10.0).max(1e-12);
                return Some((y, fy));
            }
            self.lambda = (self.lambda * 10.0).min(1e12);
        }
        None
    }
}

/// Generalized pattern search over the `free` parameters.
///
/// Each iteration optionally tries a search step, then polls `±mesh` along each free
/// axis and moves to the first improving point. A successful iteration scales the
/// mesh by `expansion`, a failed one by `contraction`. Stops when the mesh drops
/// below `tol`, the objective reaches 0, or `max_evals` is spent.
pub fn pattern_search_refine<O: Objective + ?Sized>(
    initial: &Theta,
    free: &[Param],
    obj: &O,
    opts: &PatternOptions,
) -> Result<EstimationReport> {
    if !(opts.mesh0 > 0.0 && opts.contraction > 0.0 && opts.contraction < 1.0 && opts.expansion >= 1.0)
    {
        return Err(Error::InvalidArgument(
            "need mesh0 > 0 and 0 < contraction < 1 <= expansion".into(),
        ));
    }
    let mut x = *initial;
    let mut fx = obj.value(&x);
    let mut evals = 1;
    let mut mesh = opts.mesh0;
    let mut trace = vec![fx];
    let mut lm = Lm { lambda: 1e-3 };
    let status = loop {
        if fx == 0.0 || mesh < opts.tol {
            break Status::Converged;
        }
        if evals >= opts.max_evals {
            break Status::BudgetExhausted;
        }
        let mut improved = false;
        if opts.search == SearchStep::GaussNewton && fx.is_finite() {
            if let Some((y, fy)) = lm.try_step(obj, &x, fx, free, &mut evals) {
                x = y;
                fx = fy;
                improved = true;
            }
        }
        if !improved {
            'poll: for p in free {
                for sign in [1.0, -1.0] {
                    let mut y = x;
                    y[p.index()] += sign * mesh;
                    let fy = obj.value(&y);
                    evals += 1;
                    if fy < fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break 'poll;
                    }
                }
            }
        }
        mesh *= if improved { opts.expansion } else { opts.contraction };
        trace.push(fx);
    };
    let status = if fx.is_finite() { status } else { Status::Diverged };
    let mut report = EstimationReport::new(
        EveConfig::from_theta(&x, obj.pinned_z()),
        fx,
        evals,
        Method::PatternSearch,
        status,
    );
    report.trace = trace;
    Ok(report)
}
