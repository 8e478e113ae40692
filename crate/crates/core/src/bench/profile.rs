use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{f_bar_feas, solve_cost, svg, RunOutcome};
use crate::error::Result;

/// Fraction of problems whose ratio is at most `x`, as a step function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub solver: String,
    /// Finite ratios, ascending.
    pub ratios: Vec<f64>,
    /// Number of problems, solved or not.
    pub total: usize,
}

impl ProfileCurve {
    fn new(solver: &str, mut ratios: Vec<f64>, total: usize) -> Self {
        ratios.sort_by(f64::total_cmp);
        Self { solver: solver.to_string(), ratios, total }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.ratios.partition_point(|r| *r <= x) as f64 / self.total as f64
    }

    /// Distinct abscissae where the curve jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.ratios.clone();
        b.dedup();
        b
    }
}

/// Performance profiles from `costs[problem][solver]` (calls to converge, or `None`).
///
/// The ratio of a solver on a problem is its cost over the best cost of any
/// solver; problems nobody solved count as unsolved for everyone.
pub fn performance_profile(costs: &[Vec<Option<u64>>], solvers: &[String]) -> Vec<ProfileCurve> {
    let mut ratios = vec![Vec::new(); solvers.len()];
    for row in costs {
        let Some(best) = row.iter().flatten().min() else { continue };
        for (s, t) in row.iter().enumerate() {
            if let Some(t) = t {
                ratios[s].push(*t as f64 / *best as f64);
            }
        }
    }
    solvers.iter().zip(ratios).map(|(name, r)| ProfileCurve::new(name, r, costs.len())).collect()
}

/// Data profiles: cost in groups of `n + 1` calls.
pub fn data_profile(costs: &[Vec<Option<u64>>], dims: &[usize], solvers: &[String]) -> Vec<ProfileCurve> {
    let mut ratios = vec![Vec::new(); solvers.len()];
    for (row, n) in costs.iter().zip(dims) {
        for (s, t) in row.iter().enumerate() {
            if let Some(t) = t {
                ratios[s].push(*t as f64 / (*n as f64 + 1.0));
            }
        }
    }
    solvers.iter().zip(ratios).map(|(name, r)| ProfileCurve::new(name, r, costs.len())).collect()
}

/// A computational problem: one problem, start point, and seed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProblemKey {
    pub problem: String,
    pub start: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TolReport {
    pub tol: f64,
    /// `costs[problem][solver]`.
    pub costs: Vec<Vec<Option<u64>>>,
    pub perf: Vec<ProfileCurve>,
    pub data: Vec<ProfileCurve>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaReport {
    pub sigma: f64,
    pub solvers: Vec<String>,
    pub problems: Vec<ProblemKey>,
    pub dims: Vec<usize>,
    /// Reference value and `f_bar_feas` per problem, when any run was feasible.
    pub references: Vec<Option<(f64, f64)>>,
    pub budgets: BTreeSet<u64>,
    pub tolerances: Vec<TolReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub solver: String,
    pub sigma: f64,
    pub tol: f64,
    pub percent_solved: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub sigmas: Vec<SigmaReport>,
    pub summary: Vec<SummaryRow>,
}

/// Groups runs by noise level and computes solve costs and profiles.
///
/// Within one noise level, the reference value and `f_bar_feas` of a
/// (problem, start) instance pool every run on it, across solvers and seeds.
/// The reference is the best truly feasible value any run found, lowered to
/// the problem's known optimum when there is one.
pub fn aggregate(runs: &[RunOutcome], tolerances: &[f64]) -> Aggregate {
    let mut by_sigma: BTreeMap<u64, Vec<&RunOutcome>> = BTreeMap::new();
    for r in runs {
        by_sigma.entry(sigma_key(r.sigma)).or_default().push(r);
    }
    let mut sigmas = Vec::new();
    let mut summary = Vec::new();
    for group in by_sigma.into_values() {
        let report = sigma_report(&group, tolerances);
        for t in &report.tolerances {
            for (s, solver) in report.solvers.iter().enumerate() {
                let solved = t.costs.iter().filter(|row| row[s].is_some()).count();
                let percent = if t.costs.is_empty() { 0.0 } else { 100.0 * solved as f64 / t.costs.len() as f64 };
                summary.push(SummaryRow { solver: solver.clone(), sigma: report.sigma, tol: t.tol, percent_solved: percent });
            }
        }
        sigmas.push(report);
    }
    Aggregate { sigmas, summary }
}

/// Orders noise levels numerically (all are >= 0).
fn sigma_key(sigma: f64) -> u64 {
    sigma.to_bits()
}

/// A (problem, start) pair; runs on it share a reference value.
type Instance = (String, Option<usize>);

fn sigma_report(runs: &[&RunOutcome], tolerances: &[f64]) -> SigmaReport {
    let solvers: Vec<String> = runs.iter().map(|r| r.solver.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cells: BTreeMap<ProblemKey, Vec<Option<&RunOutcome>>> = BTreeMap::new();
    let mut instances: BTreeMap<Instance, Vec<&RunOutcome>> = BTreeMap::new();
    for r in runs {
        let key = ProblemKey { problem: r.problem.clone(), start: r.start, seed: r.seed };
        let s = solvers.iter().position(|x| *x == r.solver).expect("solver listed");
        let row = cells.entry(key).or_insert_with(|| vec![None; solvers.len()]);
        if row[s].is_some() {
            log::warn!("duplicate run for {} / {}; keeping the first", r.problem, r.solver);
        } else {
            row[s] = Some(r);
        }
        instances.entry((r.problem.clone(), r.start)).or_default().push(r);
    }

    let references: BTreeMap<&Instance, Option<(f64, f64)>> = instances
        .iter()
        .map(|(key, rs)| {
            let best = rs.iter().filter_map(|r| r.best_feasible()).min_by(f64::total_cmp);
            let f_star = rs.iter().find_map(|r| r.f_star);
            let reference = match (best, f_star) {
                (Some(b), Some(s)) => Some(b.min(s)),
                (Some(b), None) => Some(b),
                (None, _) => None,
            };
            let fbar = f_bar_feas(rs.iter().map(|r| r.first_feasible));
            (key, reference.zip(fbar))
        })
        .collect();

    let problems: Vec<ProblemKey> = cells.keys().cloned().collect();
    let dims: Vec<usize> =
        cells.values().map(|row| row.iter().flatten().next().map_or(0, |r| r.n)).collect();
    let refs: Vec<Option<(f64, f64)>> =
        problems.iter().map(|k| references[&(k.problem.clone(), k.start)]).collect();

    let tol_reports = tolerances
        .iter()
        .map(|&tol| {
            let costs: Vec<Vec<Option<u64>>> = cells
                .values()
                .zip(&refs)
                .map(|(row, reference)| {
                    row.iter()
                        .map(|r| {
                            let (f_ref, f_bar) = (*reference)?;
                            solve_cost(&(*r)?.improvements, f_ref, f_bar, tol)
                        })
                        .collect()
                })
                .collect();
            let perf = performance_profile(&costs, &solvers);
            let data = data_profile(&costs, &dims, &solvers);
            TolReport { tol, costs, perf, data }
        })
        .collect();

    SigmaReport {
        sigma: runs[0].sigma,
        budgets: runs.iter().map(|r| r.budget).collect(),
        solvers,
        problems,
        dims,
        references: refs,
        tolerances: tol_reports,
    }
}

fn profile_csv(label: &str, curves: &[ProfileCurve], floor: f64) -> String {
    let mut xs: Vec<f64> = curves.iter().flat_map(ProfileCurve::breakpoints).filter(|x| *x > floor).collect();
    xs.push(floor);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut out = String::from(label);
    for c in curves {
        out.push(',');
        out.push_str(&c.solver);
    }
    out.push('\n');
    for x in xs {
        let _ = write!(out, "{x}");
        for c in curves {
            let _ = write!(out, ",{}", c.value_at(x));
        }
        out.push('\n');
    }
    out
}

/// Performance profile as CSV: `ratio` then one column per solver.
pub fn perf_csv(curves: &[ProfileCurve]) -> String {
    profile_csv("ratio", curves, 1.0)
}

/// Data profile as CSV: `kappa` then one column per solver.
pub fn data_csv(curves: &[ProfileCurve]) -> String {
    profile_csv("kappa", curves, 0.0)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("solver,sigma,tol,percent_solved\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.2}", r.solver, r.sigma, r.tol, r.percent_solved);
    }
    out
}

/// Writes `summary.csv` plus, per noise level, `sigma_<σ>/perf_profile_<tol>.csv`
/// and `sigma_<σ>/data_profile_<tol>.csv` (and SVG renderings if asked).
pub fn write_reports(agg: &Aggregate, dir: &Path, with_svg: bool) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |path: std::path::PathBuf, text: String| -> Result<()> {
        std::fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put(dir.join("summary.csv"), summary_csv(&agg.summary))?;
    for s in &agg.sigmas {
        let sub = dir.join(format!("sigma_{}", s.sigma));
        std::fs::create_dir_all(&sub)?;
        for t in &s.tolerances {
            put(sub.join(format!("perf_profile_{}.csv", t.tol)), perf_csv(&t.perf))?;
            put(sub.join(format!("data_profile_{}.csv", t.tol)), data_csv(&t.data))?;
            if with_svg {
                let title = format!("performance profile, sigma={}, tol={}", s.sigma, t.tol);
                put(sub.join(format!("perf_profile_{}.svg", t.tol)), svg::render_profiles(&title, "ratio", &t.perf, 1.0))?;
                let title = format!("data profile, sigma={}, tol={}", s.sigma, t.tol);
                put(sub.join(format!("data_profile_{}.svg", t.tol)), svg::render_profiles(&title, "kappa", &t.data, 0.0))?;
            }
        }
    }
    Ok(written)
}
