use std::fmt;

use super::objective::Theta;

/// Eve's unknowns plus the pinned `z_E0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveConfig {
    pub x: f64,
    pub y: f64,
    /// Pinned to the observed `z_A0`; never varied by the attacks.
    pub z: f64,
    pub w: f64,
    pub eps_ex: f64,
}

impl EveConfig {
    pub fn theta(&self) -> Theta {
        [self.eps_ex, self.x, self.y, self.w]
    }

    pub fn from_theta(t: &Theta, z: f64) -> Self {
        Self {
            eps_ex: t[0],
            x: t[1],
            y: t[2],
            z,
            w: t[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BiSearch,
    Grid,
    PatternSearch,
    GradientDescent,
    Pipeline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::BiSearch => "bisearch",
            Method::Grid => "grid",
            Method::PatternSearch => "pattern",
            Method::GradientDescent => "gradient (central-difference descent)",
            Method::Pipeline => "pipeline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// The bisearch bracket violated unimodality repeatedly; best point returned.
    NotUnimodal,
    /// The bisearch estimate sits on the bracket edge.
    BoundaryEstimate,
    BudgetExhausted,
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::NotUnimodal => "not-unimodal",
            Status::BoundaryEstimate => "boundary",
            Status::BudgetExhausted => "budget-exhausted",
            Status::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub estimates: EveConfig,
    pub truth: Option<EveConfig>,
    /// `|estimate − truth|` for `(ε_Ex, x, y, w)`; present iff `truth` is.
    pub abs_errors: Option<[f64; 4]>,
    pub final_nmse: f64,
    pub evaluations: usize,
    pub method: Method,
    pub status: Status,
    /// Best objective after each iteration, where the method keeps one.
    pub trace: Vec<f64>,
}

impl EstimationReport {
    pub fn new(
        estimates: EveConfig,
        final_nmse: f64,
        evaluations: usize,
        method: Method,
        status: Status,
    ) -> Self {
        Self {
            estimates,
            truth: None,
            abs_errors: None,
            final_nmse,
            evaluations: evaluations.max(1),
            method,
            status,
            trace: Vec::new(),
        }
    }

    pub fn with_truth(mut self, truth: EveConfig) -> Self {
        let (e, t) = (self.estimates.theta(), truth.theta());
        self.abs_errors = Some(std::array::from_fn(|i| (e[i] - t[i]).abs()));
        self.truth = Some(truth);
        self
    }

    /// Every estimate agrees with the truth at 11 significant digits.
    pub fn complete_recovery(&self) -> Option<bool> {
        self.truth
            .map(|t| complete_recovery(&self.estimates.theta(), &t.theta(), 11))
    }
}

/// Decimal rendering of `v` rounded to `digits` significant digits.
pub fn round_sig(v: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), v)
}

pub fn complete_recovery(estimate: &Theta, truth: &Theta, digits: usize) -> bool {
    estimate
        .iter()
        .zip(truth)
        .all(|(e, t)| round_sig(*e, digits) == round_sig(*t, digits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_comparison() {
        assert_eq!(round_sig(0.123456789012345, 11), "1.2345678901e-1");
        let t = [0.5, -0.25, 0.125, 0.3];
        let mut e = t;
        e[3] += 1e-14;
        assert!(complete_recovery(&e, &t, 11));
        e[3] += 1e-9;
        assert!(!complete_recovery(&e, &t, 11));
    }
}
