//! Eve's toolkit.
//!
//! Everything is built on one inverse problem: find the unknowns
//! `θ = (ε_Ex, x_E0, y_E0, w_E0)` whose replay of the recorded `x_B` reproduces the
//! observed `z_A`, scored by the normalized mean squared error. `z_E0` is pinned to
//! the observed `z_A0`, which crosses the channel in clear.

mod bisearch;
mod fragility;
mod gradient;
mod grid;
mod keyspace;
mod nmse;
mod objective;
mod pattern;
mod pipeline;
mod report;

pub use bisearch::{bisearch_w, ternary_search, TernaryOutcome};
pub use fragility::{sync_fragility_study, FragilityOptions, FragilityReport};
pub use gradient::{gradient_descent_attack, Direction, GradientOptions};
pub use grid::{coarse_grid_search, grid_lattice, GridBounds};
pub use keyspace::{key_space_cardinality, KeySpaceAccount, KeySpaceStage};
pub use nmse::{nmse, nmse_profile, NmseConfig, NmseObjective, NmseValue, Observation};
pub use objective::{finite_difference_jacobian, Objective, Param, Quadratic, Theta};
pub use pattern::{pattern_search_refine, PatternOptions, SearchStep};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineReport, Refiner};
pub use report::{complete_recovery, round_sig, EstimationReport, EveConfig, Method, Status};
