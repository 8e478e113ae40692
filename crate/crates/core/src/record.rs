//! Replayable JSON-lines run records.
//!
//! The first line is a header with everything needed to re-run: problem
//! source, start point, noise level, seed, and full configuration. Every
//! following line is an `eval` or `iter` event.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blackbox::NoiseSpec;
use crate::error::{Error, Result};
use crate::problem::{Problem, ProblemSource};
use crate::solver::Solver;
use crate::types::{DesignPoint, OutcomeTag, SolverConfig};

pub const SCHEMA: &str = "stomads-run/1";

/// How to rebuild the problem of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemRef {
    Builtin { name: String },
    Definition { text: String },
    /// Closure-defined problem; records of these cannot be replayed.
    Custom { name: String },
}

impl ProblemRef {
    pub fn of(problem: &Problem) -> Self {
        match problem.source() {
            ProblemSource::Builtin(name) => ProblemRef::Builtin { name: name.clone() },
            ProblemSource::Definition(text) => ProblemRef::Definition { text: text.clone() },
            ProblemSource::Custom => ProblemRef::Custom { name: problem.name().to_string() },
        }
    }

    pub fn load(&self) -> Result<Problem> {
        match self {
            ProblemRef::Builtin { name } => {
                crate::suite::builtin(name).ok_or_else(|| Error::UnknownProblem(name.clone()))
            }
            ProblemRef::Definition { text } => Problem::from_definition(text),
            ProblemRef::Custom { name } => {
                Err(Error::Record(format!("problem `{name}` was defined in code and cannot be rebuilt")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema: String,
    pub problem: ProblemRef,
    pub problem_name: String,
    pub n: usize,
    pub m: usize,
    pub start_index: Option<usize>,
    pub x0: DesignPoint,
    /// Noise level actually applied.
    pub sigma: f64,
    pub noise_reference: Option<f64>,
    pub half_widths: Vec<f64>,
    pub budget: u64,
    pub config: SolverConfig,
    pub label: Option<String>,
}

impl RunHeader {
    /// Solver label: the explicit one, or one derived from mode and `n_k`.
    pub fn solver_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("{}-nk{}", self.config.mode, self.config.samples_per_visit))
    }
}

/// One blackbox call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalEvent {
    pub k: u64,
    pub point: DesignPoint,
    pub channels: Vec<f64>,
    /// Samples stored at `point` after this call.
    pub p: u64,
    /// Cumulative blackbox calls.
    pub evals: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incumbents {
    pub inf: DesignPoint,
    pub feas: Option<DesignPoint>,
    pub flag: bool,
}

/// One completed iteration; incumbents are those after the update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterEvent {
    pub k: u64,
    pub outcome: OutcomeTag,
    pub accepted: Option<DesignPoint>,
    /// Poll size used in this iteration, as an exact rational times the base.
    pub delta_p: String,
    #[serde(with = "extended")]
    pub h_max: f64,
    pub incumbents: Incumbents,
    pub evals: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    Eval(EvalEvent),
    Iter(IterEvent),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(RunHeader),
    Eval(EvalEvent),
    Iter(IterEvent),
}

/// Extended reals: `+inf` is written as the string `"inf"`.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got `{t}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub header: RunHeader,
    pub events: Vec<Event>,
}

impl RunRecord {
    pub fn evals(&self) -> impl Iterator<Item = &EvalEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Eval(ev) => Some(ev),
            Event::Iter(_) => None,
        })
    }

    pub fn iterations(&self) -> impl Iterator<Item = &IterEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Iter(it) => Some(it),
            Event::Eval(_) => None,
        })
    }

    /// JSON values of every line, header first.
    pub fn to_values(&self) -> Result<Vec<Value>> {
        let mut out = Vec::with_capacity(self.events.len() + 1);
        out.push(serde_json::to_value(Line::Header(self.header.clone()))?);
        for e in &self.events {
            out.push(serde_json::to_value(e)?);
        }
        Ok(out)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for v in self.to_values()? {
            serde_json::to_writer(&mut w, &v)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(file)
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let values = read_values(r)?;
        let mut lines = values.into_iter();
        let header = parse_header(lines.next())?;
        let events = lines
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value::<Event>(v).map_err(|e| Error::Record(format!("line {}: {e}", i + 2)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, events })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn read_values<R: BufRead>(r: R) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn parse_header(first: Option<Value>) -> Result<RunHeader> {
    let first = first.ok_or_else(|| Error::Record("empty record".into()))?;
    let schema = first.get("schema").and_then(Value::as_str).unwrap_or("<missing>");
    if schema != SCHEMA {
        return Err(Error::Schema(schema.to_string()));
    }
    match serde_json::from_value::<Line>(first) {
        Ok(Line::Header(h)) => Ok(h),
        Ok(_) => Err(Error::Record("first line is not a header".into())),
        Err(e) => Err(Error::Record(format!("line 1: {e}"))),
    }
}

/// Result of re-executing a recorded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayReport {
    Identical { lines: usize },
    /// First differing line, 1-based (line 1 is the header).
    Diverged { line: usize },
}

impl std::fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayReport::Identical { lines } => write!(f, "identical ({lines} lines)"),
            ReplayReport::Diverged { line } => write!(f, "diverged at line {line} (event {})", line.saturating_sub(2)),
        }
    }
}

/// Rebuilds the run described by `header` and executes it again.
pub fn rerun(header: &RunHeader) -> Result<RunRecord> {
    let problem = header.problem.load()?;
    let noise = NoiseSpec::from_start(&problem, &header.x0, header.sigma, header.noise_reference)?;
    let mut solver = Solver::new(problem, header.x0.clone(), noise, header.config.clone())?;
    solver.set_start_index(header.start_index);
    solver.set_label(header.label.clone());
    Ok(solver.run()?.record)
}

/// Re-executes the recorded run and compares the event streams line by line.
pub fn replay<R: BufRead>(r: R) -> Result<ReplayReport> {
    let recorded = read_values(r)?;
    let header = parse_header(recorded.first().cloned())?;
    let fresh = rerun(&header)?.to_values()?;
    let first_diff = recorded.iter().zip(&fresh).position(|(a, b)| a != b);
    Ok(match first_diff {
        Some(i) => ReplayReport::Diverged { line: i + 1 },
        None if recorded.len() != fresh.len() => ReplayReport::Diverged { line: recorded.len().min(fresh.len()) + 1 },
        None => ReplayReport::Identical { lines: recorded.len() },
    })
}

pub fn replay_file(path: &Path) -> Result<ReplayReport> {
    replay(std::io::BufReader::new(std::fs::File::open(path)?))
}
