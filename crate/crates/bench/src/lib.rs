//! Fixtures shared by the criterion benchmarks.

use stomads_core::{builtin, DesignPoint, NoiseSpec, Problem, SolverConfig};

/// A ready-to-run solve: built-in problem, its first start, noise and config.
pub struct Fixture {
    pub problem: Problem,
    pub x0: DesignPoint,
    pub noise: NoiseSpec,
    pub config: SolverConfig,
}

impl Fixture {
    /// Panics on an unknown problem name; benchmarks only use built-ins.
    pub fn new(name: &str, sigma: f64, budget: u64) -> Self {
        let problem = builtin(name).unwrap_or_else(|| panic!("no built-in problem `{name}`"));
        let x0 = problem.starts()[0].clone();
        let noise = NoiseSpec::from_start(&problem, &x0, sigma, None).expect("built-ins have a best known value");
        let config = SolverConfig { seed: 1, budget: Some(budget), ..Default::default() };
        Self { problem, x0, noise, config }
    }

    pub fn solve(&self) -> u64 {
        stomads_core::run(&self.problem, &self.x0, self.noise.clone(), &self.config).expect("fixture runs").evals
    }
}
