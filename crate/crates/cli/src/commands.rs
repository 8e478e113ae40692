use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use stomads_core::bench::{self, run_campaign, write_reports, CampaignSpec, RunOutcome, Variant};
use stomads_core::{
    builtin_suite, load_problem, true_eval, DesignPoint, Mode, NoiseSpec, Problem, ProblemSource, ReplayReport,
    RunRecord, Solver, SolverConfig,
};

use crate::args::{CampaignArgs, ProblemsArgs, ProfileArgs, ReplayArgs, SolveArgs, SolverArgs};
use crate::error::CliError;

fn solver_config(a: &SolverArgs, seed: u64, nk: u32, mode: Mode) -> SolverConfig {
    SolverConfig {
        gamma: a.gamma,
        epsilon: a.epsilon,
        tau: a.tau,
        z_hat: a.z_hat,
        rho: a.rho,
        samples_per_visit: nk,
        budget_multiplier: a.budget_multiplier,
        budget: a.budget,
        seed,
        mode,
        initial_poll_size: a.initial_poll_size,
        min_poll_size: a.min_poll_size,
        strict_remark1: a.strict_remark1,
        full_secondary_poll: a.full_secondary_poll,
        batch_poll: a.batch_poll,
    }
}

fn fmt_point(x: &DesignPoint) -> String {
    let parts: Vec<String> = x.coords().iter().map(|v| format!("{v}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn solve(a: SolveArgs) -> Result<(), CliError> {
    let problem = load_problem(&a.problem)?;
    let x0 = problem.start(a.start)?.clone();
    let mut sigma = a.sigma;
    if a.mode == Mode::Deterministic && sigma != 0.0 && !a.noisy_oracle {
        log::warn!("deterministic mode ignores --sigma {sigma}; pass --noisy-oracle to keep the noise");
        sigma = 0.0;
    }
    let noise = NoiseSpec::from_start(&problem, &x0, sigma, a.reference)?;
    let config = solver_config(&a.solver, a.seed, a.nk, a.mode);
    config.validate()?;
    let mut solver = Solver::new(problem.clone(), x0, noise, config)?;
    solver.set_start_index(Some(a.start));
    solver.set_label(a.label.clone());
    let result = solver.run()?;

    let path = a
        .output
        .unwrap_or_else(|| a.out_dir.join(format!("{}-s{}-seed{}.jsonl", problem.name(), a.start, a.seed)));
    result.record.save(&path)?;

    let header = &result.record.header;
    println!("problem   {} (n={}, m={}), start {}", problem.name(), problem.n(), problem.m(), a.start);
    println!("solver    {}, sigma {}, seed {}", header.solver_label(), header.sigma, a.seed);
    println!("stopped   {} after {} iterations, {} of {} calls", result.termination, result.iterations, result.evals, header.budget);
    println!("x_inf     {}", fmt_point(&result.incumbents.x_inf));
    match result.incumbents.feasible() {
        Some(x) => println!("x_feas    {}", fmt_point(x)),
        None => println!("x_feas    none"),
    }
    if a.with_truth {
        let t = true_eval(&problem, result.incumbents.x_inf.coords());
        println!("truth     x_inf: f={} h={}", t.f, t.h);
        if let Some(x) = result.incumbents.feasible() {
            let t = true_eval(&problem, x.coords());
            println!("truth     x_feas: f={} h={}", t.f, t.h);
        }
        match RunOutcome::from_record(&result.record, &problem).best_feasible() {
            Some(f) => println!("best      true-feasible f={f}"),
            None => println!("best      no true-feasible point evaluated"),
        }
    }
    println!("record    {}", path.display());
    Ok(())
}

fn load_problems(names: &[String]) -> Result<Vec<Problem>, CliError> {
    if names.is_empty() {
        return Ok(builtin_suite());
    }
    names.iter().map(|n| load_problem(n).map_err(CliError::from)).collect()
}

fn print_summary(rows: &[bench::SummaryRow]) {
    println!("{:<20} {:>8} {:>8} {:>9}", "solver", "sigma", "tol", "solved %");
    for r in rows {
        println!("{:<20} {:>8} {:>8} {:>9.2}", r.solver, r.sigma, r.tol, r.percent_solved);
    }
}

pub fn campaign(a: CampaignArgs) -> Result<(), CliError> {
    let problems = load_problems(&a.problems)?;
    let mut variants = Vec::new();
    for &nk in &a.nk {
        let mut v = Variant::stomads(nk);
        v.config = solver_config(&a.solver, 0, nk, Mode::Stochastic);
        variants.push(v);
    }
    if !a.no_baseline {
        let mut v = Variant::mads_pb();
        v.config = solver_config(&a.solver, 0, 1, Mode::Deterministic);
        v.noisy_oracle = !a.noiseless_baseline;
        variants.push(v);
    }
    if variants.is_empty() {
        return Err(CliError::Usage("no solver variants selected".into()));
    }
    for v in &variants {
        v.config.validate()?;
    }
    let spec = CampaignSpec {
        problems,
        starts: a.starts,
        sigmas: a.sigmas,
        variants,
        seeds: (a.first_seed..a.first_seed + a.seeds).collect(),
        tolerances: a.tol,
        jobs: a.jobs,
    };
    let report = run_campaign(&spec, Some(&a.out_dir))?;
    let written = write_reports(&report.aggregate, &a.out_dir, a.svg)?;
    print_summary(&report.aggregate.summary);
    println!("{} runs, {} records and {} report files under {}", report.runs.len(), report.record_paths.len(), written.len(), a.out_dir.display());
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!("failed: {}: {}", f.cell, f.message);
        }
        return Err(CliError::Runtime(format!("{} campaign cells failed", report.failures.len())));
    }
    Ok(())
}

fn with_path(path: &Path, e: stomads_core::Error) -> CliError {
    match CliError::from(e) {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
    }
}

/// Every `.jsonl` file under `dir`, sorted.
fn record_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "jsonl") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Warns when runs of one computational problem were given different budgets.
fn warn_mixed_budgets(runs: &[RunOutcome]) {
    let mut budgets: BTreeMap<(u64, &str, Option<usize>, u64), BTreeSet<u64>> = BTreeMap::new();
    for r in runs {
        budgets.entry((r.sigma.to_bits(), &r.problem, r.start, r.seed)).or_default().insert(r.budget);
    }
    for ((sigma, problem, start, seed), b) in budgets {
        if b.len() > 1 {
            log::warn!(
                "mixed budgets {b:?} on {problem} start {start:?} seed {seed} at sigma {}; profiles compare them as is",
                f64::from_bits(sigma)
            );
        }
    }
}

pub fn profile(a: ProfileArgs) -> Result<(), CliError> {
    if !a.records.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", a.records.display())));
    }
    let files = record_files(&a.records)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("no run records (*.jsonl) under {}", a.records.display())));
    }
    let mut problems: BTreeMap<String, Problem> = BTreeMap::new();
    let mut runs = Vec::with_capacity(files.len());
    for path in &files {
        let record = RunRecord::load(path).map_err(|e| with_path(path, e))?;
        let key = problem_key(&record);
        if !problems.contains_key(&key) {
            problems.insert(key.clone(), record.header.problem.load()?);
        }
        runs.push(RunOutcome::from_record(&record, &problems[&key]));
    }
    warn_mixed_budgets(&runs);
    let agg = bench::aggregate(&runs, &a.tol);
    let written = write_reports(&agg, &a.out_dir, a.svg)?;
    print_summary(&agg.summary);
    println!("{} records, {} report files under {}", runs.len(), written.len(), a.out_dir.display());
    Ok(())
}

fn problem_key(record: &RunRecord) -> String {
    format!("{:?}", record.header.problem)
}

pub fn replay(a: ReplayArgs) -> Result<(), CliError> {
    let mut diverged = 0;
    for path in &a.records {
        let report = stomads_core::replay_file(path).map_err(|e| with_path(path, e))?;
        if !matches!(report, ReplayReport::Identical { .. }) {
            diverged += 1;
        }
        println!("{}: {report}", path.display());
    }
    if diverged > 0 {
        return Err(CliError::Runtime(format!("{diverged} of {} records diverged", a.records.len())));
    }
    Ok(())
}

pub fn problems(a: ProblemsArgs) -> Result<(), CliError> {
    if let Some(name) = a.show {
        let p = load_problem(&name)?;
        println!("name      {}", p.name());
        println!("n, m      {}, {}", p.n(), p.m());
        match p.bounds() {
            Some(b) => {
                let parts: Vec<String> = b.iter().map(|(lo, hi)| format!("[{lo}, {hi}]")).collect();
                println!("bounds    {}", parts.join(" "));
            }
            None => println!("bounds    none"),
        }
        match p.f_star() {
            Some(f) => println!("f*        {f}"),
            None => println!("f*        unknown"),
        }
        for (i, s) in p.starts().iter().enumerate() {
            let t = true_eval(&p, s.coords());
            println!("start {i}   {} (f={}, h={})", fmt_point(s), t.f, t.h);
        }
        if let ProblemSource::Definition(text) = p.source() {
            println!("\n{}", text.trim_end());
        }
        return Ok(());
    }
    println!("{:<14} {:>3} {:>3} {:>8} {:>22}", "name", "n", "m", "starts", "f*");
    for p in builtin_suite() {
        let f = p.f_star().map_or("unknown".to_string(), |f| f.to_string());
        println!("{:<14} {:>3} {:>3} {:>8} {:>22}", p.name(), p.n(), p.m(), p.starts().len(), f);
    }
    Ok(())
}
