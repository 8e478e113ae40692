//! Progressive-barrier mesh adaptive direct search for constrained blackbox
//! problems observed through noise.
//!
//! A run estimates objective and constraint values by sample averages, keeps an
//! infeasible and a feasible incumbent, and polls a mesh around them with
//! Householder-based directions. A deterministic mode serves as a baseline.
//!
//! ```
//! use stomads_core::{builtin, NoiseSpec, SolverConfig};
//!
//! let problem = builtin("disk2d").unwrap();
//! let x0 = problem.start(0).unwrap().clone();
//! let noise = NoiseSpec::from_start(&problem, &x0, 0.01, None).unwrap();
//! let config = SolverConfig { seed: 7, budget: Some(600), ..Default::default() };
//! let result = stomads_core::run(&problem, &x0, noise, &config).unwrap();
//! assert!(result.evals <= 600);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod blackbox;
pub mod error;
pub mod estimator;
pub mod expr;
pub mod poll;
pub mod problem;
pub mod record;
pub mod rng;
pub mod solver;
pub mod suite;
pub mod types;

pub use blackbox::{true_eval, Blackbox, NoiseSpec, SampleCache, TrueValues};
pub use error::{BudgetExhausted, Error, Result};
pub use estimator::{bounds, estimate, required_samples_constraint, required_samples_objective, EstimateBundle};
pub use poll::{build_poll_set, householder_directions, snap_to_mesh, BasisKind, DirectionSet, Frame};
pub use problem::{load_problem, Problem, ProblemSource};
pub use record::{replay, replay_file, ReplayReport, RunHeader, RunRecord};
pub use solver::{classify, run, select_frame_centers, update_mesh, IncumbentPair, RunResult, Solver, SolverState, Termination};
pub use suite::{builtin, builtin_names, builtin_suite};
pub use types::{violation, DesignPoint, IterationOutcome, MeshState, Mode, OutcomeTag, Ratio, SolverConfig};
