//! Benchmark protocol: truth-based convergence test, profiles, campaigns.

mod campaign;
mod profile;
pub mod svg;

pub use campaign::{run_campaign, CampaignReport, CampaignSpec, CellFailure, Variant};
pub use profile::{
    aggregate, data_profile, performance_profile, write_reports, Aggregate, ProblemKey, ProfileCurve, SigmaReport,
    SummaryRow, TolReport,
};

use crate::blackbox::true_eval;
use crate::problem::Problem;
use crate::record::RunRecord;

/// Per-constraint slack allowed when deciding true feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// True objective value at `x` if `x` is truly feasible.
pub fn truly_feasible(problem: &Problem, x: &[f64]) -> Option<f64> {
    let t = true_eval(problem, x);
    (problem.contains(x) && t.c.iter().all(|c| *c <= FEASIBILITY_TOL)).then_some(t.f)
}

/// Best true objective among truly feasible points after `eval_count` calls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub eval_count: u64,
    pub best_feasible_f_true: Option<f64>,
}

/// What the protocol needs from one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub problem: String,
    pub n: usize,
    pub start: Option<usize>,
    pub seed: u64,
    pub sigma: f64,
    pub solver: String,
    pub budget: u64,
    pub f_star: Option<f64>,
    /// Calls made.
    pub evals: u64,
    /// Every change of the best truly feasible value, in call order.
    pub improvements: Vec<TrajectoryPoint>,
    pub first_feasible: Option<f64>,
    /// Smallest poll size used by any iteration.
    pub min_delta_p: Option<f64>,
}

impl RunOutcome {
    /// Scans the evaluations of `record` with the truth oracle.
    pub fn from_record(record: &RunRecord, problem: &Problem) -> Self {
        let h = &record.header;
        let mut improvements = Vec::new();
        let mut best: Option<f64> = None;
        let mut first_feasible = None;
        let mut evals = 0;
        for ev in record.evals() {
            evals = ev.evals;
            if let Some(f) = truly_feasible(problem, ev.point.coords()) {
                first_feasible.get_or_insert(f);
                if best.is_none_or(|b| f < b) {
                    best = Some(f);
                    improvements.push(TrajectoryPoint { eval_count: ev.evals, best_feasible_f_true: best });
                }
            }
        }
        let min_delta_p = record.iterations().map(|it| parse_delta_p(&it.delta_p)).fold(None, |acc: Option<f64>, v| {
            match (acc, v) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        });
        Self {
            problem: h.problem_name.clone(),
            n: h.n,
            start: h.start_index,
            seed: h.config.seed,
            sigma: h.sigma,
            solver: h.solver_label(),
            budget: h.budget,
            f_star: problem.f_star(),
            evals,
            improvements,
            first_feasible,
            min_delta_p,
        }
    }

    pub fn best_feasible(&self) -> Option<f64> {
        self.improvements.last().and_then(|t| t.best_feasible_f_true)
    }

    /// The full per-call trajectory.
    pub fn trajectory(&self) -> Vec<TrajectoryPoint> {
        let mut out = Vec::with_capacity(self.evals as usize);
        let mut next = self.improvements.iter().peekable();
        let mut best = None;
        for e in 1..=self.evals {
            while let Some(t) = next.next_if(|t| t.eval_count <= e) {
                best = t.best_feasible_f_true;
            }
            out.push(TrajectoryPoint { eval_count: e, best_feasible_f_true: best });
        }
        out
    }
}

/// Parses `"p/q·base"` back into a number.
pub fn parse_delta_p(text: &str) -> Option<f64> {
    let (ratio, base) = text.split_once('·')?;
    let (p, q) = ratio.split_once('/')?;
    let (p, q, base): (f64, f64, f64) = (p.parse().ok()?, q.parse().ok()?, base.parse().ok()?);
    Some(p / q * base)
}

/// `best <= f_star + tol * (f_bar_feas - f_star)`; fails without a feasible point.
pub fn convergence_test(best: Option<f64>, f_star: f64, f_bar_feas: f64, tol: f64) -> bool {
    best.is_some_and(|b| b <= f_star + tol * (f_bar_feas - f_star))
}

/// Mean of the first feasible values; runs that never found one are skipped.
pub fn f_bar_feas(first_feasible: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = first_feasible.into_iter().flatten().fold((0.0, 0u64), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Calls needed before the convergence test first passes.
pub fn solve_cost(improvements: &[TrajectoryPoint], f_star: f64, f_bar: f64, tol: f64) -> Option<u64> {
    improvements
        .iter()
        .find(|t| convergence_test(t.best_feasible_f_true, f_star, f_bar, tol))
        .map(|t| t.eval_count)
}
