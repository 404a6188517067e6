use rand::Rng;

use super::bisearch::bisearch_w;
use super::gradient::{gradient_descent_attack, GradientOptions};
use super::grid::{coarse_grid_search, GridBounds};
use super::nmse::{NmseConfig, NmseObjective, Observation};
use super::objective::{Objective, Param, Theta};
use super::pattern::{pattern_search_refine, PatternOptions};
use super::report::{EstimationReport, EveConfig, Method};
use crate::error::Result;

/// Local method used after the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refiner {
    Pattern(PatternOptions),
    Gradient(GradientOptions),
}

impl Refiner {
    fn run<O: Objective + ?Sized>(&self, start: &Theta, obj: &O) -> Result<EstimationReport> {
        match self {
            Refiner::Pattern(o) => pattern_search_refine(start, &Param::ALL, obj, o),
            Refiner::Gradient(o) => Ok(gradient_descent_attack(start, &Param::ALL, obj, o)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub m: usize,
    pub n: usize,
    pub bounds: GridBounds,
    /// Estimate `w` by bisearch before the grid; otherwise the grid uses a random `w`.
    pub use_bisearch: bool,
    pub bisearch_iters: usize,
    pub bracket: (f64, f64),
    /// Horizon of the bisearch, grid and first refinement, in steps.
    pub short_steps: usize,
    /// Horizon of the final refinement, in steps.
    pub long_steps: usize,
    /// Best grid points refined.
    pub top_k: usize,
    pub guard_eps: f64,
    pub refiner: Refiner,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            m: 20,
            n: 20,
            bounds: GridBounds::default(),
            use_bisearch: true,
            bisearch_iters: 60,
            bracket: (-0.5, 0.5),
            short_steps: 400,
            long_steps: 3200,
            top_k: 5,
            guard_eps: 1e-4,
            refiner: Refiner::Pattern(PatternOptions::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub bisearch: Option<EstimationReport>,
    pub grid: EstimationReport,
    /// Final refinement of each grid candidate, best grid point first.
    pub candidates: Vec<EstimationReport>,
    pub best: EstimationReport,
}

/// Bisearch on `w`, coarse grid on `(ε, x, y)`, then local refinement of the best
/// grid points, first on a short horizon and again on a long one.
///
/// The short horizon keeps the objective smooth enough for the grid and the first
/// refinement; the long horizon then pins the estimate down. `rng` supplies the
/// random values Eve starts from for the unknowns not yet estimated.
pub fn run_pipeline<R: Rng + ?Sized>(
    obs: &Observation,
    opts: &PipelineOptions,
    rng: &mut R,
    truth: Option<EveConfig>,
) -> Result<PipelineReport> {
    let base = NmseConfig {
        guard_eps: opts.guard_eps,
        ..NmseConfig::default()
    };
    let short = NmseObjective::new(obs, &base)?.with_steps(opts.short_steps.min(obs.steps()))?;
    let long = short.with_steps(opts.long_steps.min(obs.steps()))?;
    let b = opts.bounds;
    let prior = EveConfig {
        eps_ex: rng.gen_range(b.eps.0..=b.eps.1),
        x: rng.gen_range(b.x.0..=b.x.1),
        y: rng.gen_range(b.y.0..=b.y.1),
        z: obs.z_a0(),
        w: rng.gen_range(opts.bracket.0..=opts.bracket.1),
    };
    let mut evaluations = 0;
    let bis = opts
        .use_bisearch
        .then(|| bisearch_w(&short, &prior, opts.bracket, opts.bisearch_iters));
    let w = bis.as_ref().map_or(prior.w, |r| r.estimates.w);
    evaluations += bis.as_ref().map_or(0, |r| r.evaluations);

    let (grid, mut scored) = coarse_grid_search(opts.m, opts.n, &b, w, &short)?;
    evaluations += grid.evaluations;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&i, &j| scored[i].1.total_cmp(&scored[j].1).then(i.cmp(&j)));
    let starts: Vec<Theta> = order
        .iter()
        .take(opts.top_k.max(1))
        .map(|&i| scored[i].0)
        .collect();
    scored.clear();

    let mut candidates = Vec::with_capacity(starts.len());
    for s in &starts {
        let first = opts.refiner.run(s, &short)?;
        let second = opts.refiner.run(&first.estimates.theta(), &long)?;
        evaluations += first.evaluations + second.evaluations;
        candidates.push(second);
    }
    let best_idx = (0..candidates.len())
        .min_by(|&i, &j| {
            candidates[i]
                .final_nmse
                .total_cmp(&candidates[j].final_nmse)
                .then(i.cmp(&j))
        })
        .expect("at least one candidate");
    let c = &candidates[best_idx];
    let mut best = EstimationReport::new(c.estimates, c.final_nmse, evaluations, Method::Pipeline, c.status);
    best.trace = c.trace.clone();
    let with = |r: EstimationReport| match truth {
        Some(t) => r.with_truth(t),
        None => r,
    };
    Ok(PipelineReport {
        bisearch: bis.map(with),
        grid: with(grid),
        candidates: candidates.into_iter().map(with).collect(),
        best: with(best),
    })
}
