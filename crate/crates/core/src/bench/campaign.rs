use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{aggregate, Aggregate, RunOutcome};
use crate::blackbox::NoiseSpec;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::record::RunRecord;
use crate::solver::Solver;
use crate::types::{Mode, SolverConfig};

/// One solver configuration in a campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub label: String,
    /// Seed is overwritten per cell.
    pub config: SolverConfig,
    /// Deterministic mode normally runs noise-free; set this to feed it the
    /// same noisy oracle as the stochastic variants.
    pub noisy_oracle: bool,
}

impl Variant {
    pub fn stomads(samples_per_visit: u32) -> Self {
        Self {
            label: format!("stomads-nk{samples_per_visit}"),
            config: SolverConfig { samples_per_visit, ..Default::default() },
            noisy_oracle: true,
        }
    }

    /// The deterministic baseline, run on the noisy oracle.
    pub fn mads_pb() -> Self {
        Self {
            label: "mads-pb".into(),
            config: SolverConfig { mode: Mode::Deterministic, samples_per_visit: 1, ..Default::default() },
            noisy_oracle: true,
        }
    }

    fn effective_sigma(&self, sigma: f64) -> f64 {
        if self.config.mode == Mode::Deterministic && !self.noisy_oracle {
            0.0
        } else {
            sigma
        }
    }
}

/// Problems × starts × noise levels × variants × seeds.
#[derive(Clone, Debug)]
pub struct CampaignSpec {
    pub problems: Vec<Problem>,
    /// Start indices to use; `None` means every start of every problem.
    pub starts: Option<Vec<usize>>,
    pub sigmas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub tolerances: Vec<f64>,
    /// Worker threads; 0 picks the machine default.
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub cell: String,
    pub message: String,
}

#[derive(Debug)]
pub struct CampaignReport {
    pub runs: Vec<RunOutcome>,
    /// Record file of each run, in `runs` order, when an output directory was given.
    pub record_paths: Vec<PathBuf>,
    pub failures: Vec<CellFailure>,
    pub aggregate: Aggregate,
}

struct Cell<'a> {
    problem: &'a Problem,
    start: usize,
    sigma: f64,
    variant: &'a Variant,
    seed: u64,
}

impl Cell<'_> {
    fn name(&self) -> String {
        format!("{}-s{}-{}-sigma{}-seed{}", self.problem.name(), self.start, self.variant.label, self.sigma, self.seed)
    }

    fn path(&self, root: &Path) -> PathBuf {
        root.join("runs")
            .join(format!("sigma_{}", self.sigma))
            .join(&self.variant.label)
            .join(format!("{}-s{}-seed{}.jsonl", self.problem.name(), self.start, self.seed))
    }

    fn run(&self) -> Result<RunRecord> {
        let x0 = self.problem.start(self.start)?.clone();
        let sigma = self.variant.effective_sigma(self.sigma);
        let noise = NoiseSpec::from_start(self.problem, &x0, sigma, None)?;
        let config = SolverConfig { seed: self.seed, ..self.variant.config.clone() };
        let mut solver = Solver::new(self.problem.clone(), x0, noise, config)?;
        solver.set_start_index(Some(self.start));
        solver.set_label(Some(self.variant.label.clone()));
        Ok(solver.run()?.record)
    }
}

/// Runs every cell (in parallel), then aggregates in a fixed order.
///
/// With `out_dir`, each run's record goes to
/// `runs/sigma_<σ>/<variant>/<problem>-s<start>-seed<seed>.jsonl`. A failing
/// cell is reported and skipped.
pub fn run_campaign(spec: &CampaignSpec, out_dir: Option<&Path>) -> Result<CampaignReport> {
    if spec.variants.is_empty() || spec.seeds.is_empty() || spec.sigmas.is_empty() || spec.problems.is_empty() {
        return Err(Error::InvalidConfig("campaign needs at least one problem, noise level, variant and seed".into()));
    }
    let mut cells = Vec::new();
    for sigma in &spec.sigmas {
        for problem in &spec.problems {
            let starts: Vec<usize> = match &spec.starts {
                Some(s) => s.iter().copied().filter(|i| *i < problem.starts().len()).collect(),
                None => (0..problem.starts().len()).collect(),
            };
            for start in starts {
                for variant in &spec.variants {
                    for seed in &spec.seeds {
                        cells.push(Cell { problem, start, sigma: *sigma, variant, seed: *seed });
                    }
                }
            }
        }
    }

    let work = || -> Vec<Result<(RunOutcome, Option<PathBuf>)>> {
        cells
            .par_iter()
            .map(|cell| {
                let record = cell.run()?;
                let outcome = RunOutcome::from_record(&record, cell.problem);
                let path = match out_dir {
                    Some(root) => {
                        let p = cell.path(root);
                        record.save(&p)?;
                        Some(p)
                    }
                    None => None,
                };
                Ok((outcome, path))
            })
            .collect()
    };
    let results = if spec.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };

    let mut runs = Vec::new();
    let mut record_paths = Vec::new();
    let mut failures = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok((outcome, path)) => {
                runs.push(outcome);
                record_paths.extend(path);
            }
            Err(e) => {
                log::error!("cell {} failed: {e}", cell.name());
                failures.push(CellFailure { cell: cell.name(), message: e.to_string() });
            }
        }
    }
    let aggregate = aggregate(&runs, &spec.tolerances);
    Ok(CampaignReport { runs, record_paths, failures, aggregate })
}
