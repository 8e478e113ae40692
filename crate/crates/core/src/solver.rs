//! The progressive-barrier main loop.
//!
//! Each iteration estimates at the incumbents, sets the barrier threshold
//! `h_max = u(x_inf)`, picks frame centers, polls opportunistically, classifies
//! the outcome, and updates incumbents and mesh.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::{Blackbox, NoiseSpec, SampleCache};
use crate::error::{Error, Result};
use crate::estimator::{estimate, estimate_once, Estimate, EstimateBundle};
use crate::poll::{build_poll_set, Frame, PollContext};
use crate::problem::Problem;
use crate::record::{EvalEvent, Event, Incumbents, IterEvent, ProblemRef, RunHeader, RunRecord, SCHEMA};
use crate::types::{DesignPoint, IterationOutcome, MeshState, Mode, SolverConfig};

/// Hard cap on iterations, far above anything a budget allows in practice.
pub const MAX_ITERATIONS: u64 = 1_000_000;

/// The infeasible incumbent, the feasible incumbent, and whether the latter is live.
///
/// Until the first f-dominating iteration `x_feas` holds the start point and
/// plays no role.
#[derive(Clone, Debug, PartialEq)]
pub struct IncumbentPair {
    pub x_inf: DesignPoint,
    pub x_feas: DesignPoint,
    pub feas_flag: bool,
}

impl IncumbentPair {
    pub fn new(x0: DesignPoint) -> Self {
        Self { x_inf: x0.clone(), x_feas: x0, feas_flag: false }
    }

    /// The feasible incumbent, once one has been found.
    pub fn feasible(&self) -> Option<&DesignPoint> {
        self.feas_flag.then_some(&self.x_feas)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub k: u64,
    pub incumbents: IncumbentPair,
    pub mesh: MeshState,
    /// Barrier threshold of the last started iteration.
    pub h_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    MinPollSize,
    IterationCap,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Budget => "budget exhausted",
            Termination::MinPollSize => "poll size below minimum",
            Termination::IterationCap => "iteration cap reached",
        })
    }
}

/// Frames to poll: the primary one, and the secondary one if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameChoice {
    pub primary: Frame,
    pub secondary: Option<Frame>,
}

/// Picks the primary frame center.
///
/// Without a live feasible incumbent only `x_inf` is polled. Otherwise `x_inf`
/// is primary iff `f(x_feas) - rho > f(x_inf) + 2 eps delta_p^2`.
pub fn select_frame_centers(
    feas: Option<&EstimateBundle>,
    inf: &EstimateBundle,
    rho: f64,
    epsilon: f64,
    delta_p: f64,
) -> FrameChoice {
    match feas {
        None => FrameChoice { primary: Frame::Infeasible, secondary: None },
        Some(fb) if fb.f_hat - rho > inf.f_hat + 2.0 * epsilon * delta_p * delta_p => {
            FrameChoice { primary: Frame::Infeasible, secondary: Some(Frame::Feasible) }
        }
        Some(_) => FrameChoice { primary: Frame::Feasible, secondary: Some(Frame::Infeasible) },
    }
}

/// Everything `classify` compares candidates against.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyContext<'a> {
    pub inf: &'a EstimateBundle,
    /// Estimates at the feasible incumbent; required when `feas_flag` is set.
    pub feas: Option<&'a EstimateBundle>,
    pub h_max: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub m: usize,
    pub delta_p: f64,
    pub feas_flag: bool,
}

impl ClassifyContext<'_> {
    fn f_threshold(&self) -> f64 {
        -self.gamma * self.epsilon * self.delta_p * self.delta_p
    }

    fn h_threshold(&self) -> f64 {
        self.f_threshold() * self.m as f64
    }

    fn f_dominates(&self, c: &EstimateBundle) -> bool {
        c.is_eps_feasible()
            && (!self.feas_flag || self.feas.is_some_and(|fb| c.f_hat - fb.f_hat <= self.f_threshold()))
    }

    fn h_improves(&self, frame: Frame, c: &EstimateBundle) -> bool {
        frame == Frame::Infeasible
            && c.is_eps_infeasible(self.h_max)
            && c.h_hat - self.inf.h_hat <= self.h_threshold()
    }

    fn h_dominates(&self, frame: Frame, c: &EstimateBundle) -> bool {
        self.h_improves(frame, c) && c.f_hat - self.inf.f_hat <= self.f_threshold()
    }
}

/// Classifies an iteration from the evaluated candidates, in evaluation order.
///
/// Any f-dominating candidate wins, then the first h-dominating one, then the
/// improving candidate with the smallest `u` (earliest on ties).
pub fn classify(candidates: &[(Frame, EstimateBundle)], ctx: &ClassifyContext<'_>) -> IterationOutcome {
    if let Some((_, c)) = candidates.iter().find(|(_, c)| ctx.f_dominates(c)) {
        return IterationOutcome::FDominating(c.point.clone());
    }
    if let Some((_, c)) = candidates.iter().find(|(f, c)| ctx.h_dominates(*f, c)) {
        return IterationOutcome::HDominating(c.point.clone());
    }
    let best = candidates
        .iter()
        .filter(|(f, c)| ctx.h_improves(*f, c))
        .fold(None::<&EstimateBundle>, |best, (_, c)| match best {
            Some(b) if b.upper <= c.upper => Some(b),
            _ => Some(c),
        });
    match best {
        Some(c) => IterationOutcome::Improving(c.point.clone()),
        None => IterationOutcome::Unsuccessful,
    }
}

/// Grow the poll size on success, shrink it otherwise.
pub fn update_mesh(mesh: MeshState, outcome: &IterationOutcome) -> MeshState {
    if outcome.is_success() {
        mesh.enlarged()
    } else {
        mesh.refined()
    }
}

/// Summary of one completed iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub k: u64,
    pub outcome: IterationOutcome,
    pub h_max: f64,
    pub delta_p: f64,
}

/// A finished run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub record: RunRecord,
    pub incumbents: IncumbentPair,
    pub termination: Termination,
    pub iterations: u64,
    pub evals: u64,
}

pub struct Solver {
    bb: Blackbox,
    cache: SampleCache,
    config: SolverConfig,
    state: SolverState,
    last_u: HashMap<DesignPoint, f64>,
    header: RunHeader,
    events: Vec<Event>,
    logged_evals: u64,
    done: Option<Termination>,
}

impl Solver {
    pub fn new(problem: Problem, x0: DesignPoint, noise: NoiseSpec, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if x0.dim() != problem.n() {
            return Err(Error::DimensionMismatch { expected: problem.n(), found: x0.dim() });
        }
        if !problem.contains(x0.coords()) {
            return Err(Error::InvalidConfig("start point lies outside the bound constraints".into()));
        }
        let budget = config.budget_for(problem.n());
        let header = RunHeader {
            schema: SCHEMA.to_string(),
            problem: ProblemRef::of(&problem),
            problem_name: problem.name().to_string(),
            n: problem.n(),
            m: problem.m(),
            start_index: None,
            x0: x0.clone(),
            sigma: noise.sigma(),
            noise_reference: noise.reference(),
            half_widths: noise.half_widths().to_vec(),
            budget,
            config: config.clone(),
            label: None,
        };
        let cache = SampleCache::new(problem.m() + 1);
        let bb = Blackbox::new(problem, noise, config.seed, budget)?;
        let state = SolverState { k: 0, incumbents: IncumbentPair::new(x0), mesh: config.initial_mesh()?, h_max: f64::INFINITY };
        Ok(Self { bb, cache, config, state, last_u: HashMap::new(), header, events: Vec::new(), logged_evals: 0, done: None })
    }

    /// Records which of the problem's start points `x0` is.
    pub fn set_start_index(&mut self, index: Option<usize>) {
        self.header.start_index = index;
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.header.label = label;
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn blackbox(&self) -> &Blackbox {
        &self.bb
    }

    pub fn cache(&self) -> &SampleCache {
        &self.cache
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn termination(&self) -> Option<Termination> {
        self.done
    }

    fn sample(bb: &Blackbox, cache: &SampleCache, config: &SolverConfig, x: &DesignPoint, dp: f64) -> Result<Estimate> {
        match config.mode {
            Mode::Stochastic => estimate(bb, cache, x, dp, config.samples_per_visit, config.epsilon),
            Mode::Deterministic => estimate_once(bb, cache, x, dp, config.epsilon),
        }
    }

    /// Budget an estimate at `x` would consume.
    fn cost(&self, x: &DesignPoint) -> u64 {
        match self.config.mode {
            Mode::Stochastic => u64::from(self.config.samples_per_visit),
            Mode::Deterministic => u64::from(self.cache.count(x) == 0),
        }
    }

    fn record(&mut self, est: Estimate) -> EstimateBundle {
        for (channels, p) in est.fresh {
            self.logged_evals += 1;
            self.events.push(Event::Eval(EvalEvent {
                k: self.state.k,
                point: est.bundle.point.clone(),
                channels,
                p,
                evals: self.logged_evals,
            }));
        }
        self.last_u.insert(est.bundle.point.clone(), est.bundle.upper);
        est.bundle
    }

    /// Estimate at `x`, or `None` once the budget cannot cover it.
    fn estimate_at(&mut self, x: &DesignPoint, dp: f64) -> Result<Option<EstimateBundle>> {
        match Self::sample(&self.bb, &self.cache, &self.config, x, dp) {
            Ok(est) => Ok(Some(self.record(est))),
            Err(Error::Budget(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn finish(&mut self, why: Termination) -> Result<Option<StepReport>> {
        self.done = Some(why);
        Ok(None)
    }

    /// Runs one iteration. Returns `None` once the run has terminated.
    pub fn step(&mut self) -> Result<Option<StepReport>> {
        if self.done.is_some() {
            return Ok(None);
        }
        if self.bb.remaining() == 0 {
            return self.finish(Termination::Budget);
        }
        if self.state.mesh.delta_p() < self.config.min_poll_size {
            return self.finish(Termination::MinPollSize);
        }
        if self.state.k >= MAX_ITERATIONS {
            return self.finish(Termination::IterationCap);
        }

        let dp = self.state.mesh.delta_p();
        let cfg = self.config.clone();
        let x_inf = self.state.incumbents.x_inf.clone();
        let Some(inf) = self.estimate_at(&x_inf, dp)? else { return self.finish(Termination::Budget) };

        if self.state.k == 0 && inf.is_eps_feasible() {
            self.state.incumbents.x_feas = x_inf.clone();
            self.state.incumbents.feas_flag = true;
        }
        let h_max = if self.state.k == 0 && cfg.mode == Mode::Deterministic { f64::INFINITY } else { inf.upper };
        self.state.h_max = h_max;

        let x_feas = self.state.incumbents.x_feas.clone();
        let flag = self.state.incumbents.feas_flag;
        let feas = if flag && x_feas != x_inf {
            match self.estimate_at(&x_feas, dp)? {
                Some(b) => Some(b),
                None => return self.finish(Termination::Budget),
            }
        } else if flag {
            Some(inf.clone())
        } else {
            if cfg.strict_remark1 && self.estimate_at(&x_feas, dp)?.is_none() {
                return self.finish(Termination::Budget);
            }
            None
        };

        let choice = if x_feas == x_inf {
            FrameChoice { primary: Frame::Infeasible, secondary: None }
        } else {
            select_frame_centers(feas.as_ref(), &inf, cfg.rho, cfg.epsilon, dp)
        };
        let center = |f: Frame| if f == Frame::Infeasible { &x_inf } else { &x_feas };
        let ctx = PollContext { seed: cfg.seed, k: self.state.k, mesh: &self.state.mesh, full_secondary: cfg.full_secondary_poll };
        let candidates = {
            let problem = self.bb.problem();
            let last_u = &self.last_u;
            build_poll_set(
                (center(choice.primary), choice.primary),
                choice.secondary.map(|f| (center(f), f)),
                ctx,
                |x| problem.contains(x),
                |p| last_u.get(p).copied(),
            )?
        };

        let cctx = ClassifyContext {
            inf: &inf,
            feas: feas.as_ref(),
            h_max,
            gamma: cfg.gamma,
            epsilon: cfg.epsilon,
            m: self.bb.problem().m(),
            delta_p: dp,
            feas_flag: flag,
        };
        let mut evaluated: Vec<(Frame, EstimateBundle)> = Vec::with_capacity(candidates.len());
        let mut exhausted = false;
        if cfg.batch_poll {
            let mut left = self.bb.remaining();
            let mut take = 0;
            for c in &candidates {
                let cost = self.cost(&c.point);
                if cost > left {
                    break;
                }
                left -= cost;
                take += 1;
            }
            exhausted = take < candidates.len();
            let (bb, cache) = (&self.bb, &self.cache);
            let results: Vec<Result<Estimate>> =
                candidates[..take].par_iter().map(|c| Self::sample(bb, cache, &cfg, &c.point, dp)).collect();
            for (c, r) in candidates[..take].iter().zip(results) {
                let bundle = self.record(r?);
                evaluated.push((c.frame, bundle));
            }
        } else {
            for c in &candidates {
                let Some(bundle) = self.estimate_at(&c.point, dp)? else {
                    exhausted = true;
                    break;
                };
                evaluated.push((c.frame, bundle));
                let single = std::slice::from_ref(evaluated.last().expect("just pushed"));
                if matches!(classify(single, &cctx), IterationOutcome::FDominating(_) | IterationOutcome::HDominating(_)) {
                    break;
                }
            }
        }

        let outcome = classify(&evaluated, &cctx);
        let inc = &mut self.state.incumbents;
        match &outcome {
            IterationOutcome::FDominating(x) => {
                inc.x_feas = x.clone();
                inc.feas_flag = true;
            }
            IterationOutcome::HDominating(x) | IterationOutcome::Improving(x) => inc.x_inf = x.clone(),
            IterationOutcome::Unsuccessful => {}
        }
        let mesh_used = self.state.mesh;
        self.state.mesh = update_mesh(mesh_used, &outcome);
        self.events.push(Event::Iter(IterEvent {
            k: self.state.k,
            outcome: outcome.tag(),
            accepted: outcome.accepted().cloned(),
            delta_p: mesh_used.delta_p_exact(),
            h_max,
            incumbents: Incumbents {
                inf: self.state.incumbents.x_inf.clone(),
                feas: self.state.incumbents.feasible().cloned(),
                flag: self.state.incumbents.feas_flag,
            },
            evals: self.bb.used(),
        }));
        let report = StepReport { k: self.state.k, outcome, h_max, delta_p: dp };
        self.state.k += 1;
        if exhausted {
            self.done = Some(Termination::Budget);
        }
        Ok(Some(report))
    }

    /// Steps until a stopping rule fires.
    pub fn run(mut self) -> Result<RunResult> {
        while self.step()?.is_some() {}
        debug_assert_eq!(self.logged_evals, self.bb.used());
        Ok(RunResult {
            termination: self.done.unwrap_or(Termination::Budget),
            iterations: self.state.k,
            evals: self.bb.used(),
            incumbents: self.state.incumbents,
            record: RunRecord { header: self.header, events: self.events },
        })
    }
}

/// Convenience wrapper: solve `problem` from `x0` with noise level `sigma`.
pub fn run(problem: &Problem, x0: &DesignPoint, noise: NoiseSpec, config: &SolverConfig) -> Result<RunResult> {
    Solver::new(problem.clone(), x0.clone(), noise, config.clone())?.run()
}
