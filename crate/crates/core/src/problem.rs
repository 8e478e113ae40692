//! Constrained blackbox problems: `min f(x)` subject to `c(x) <= 0`, `x in X`.
//!
//! `X` is an optional box of unrelaxable bounds. Problems come from the
//! built-in suite, from closures, or from a small text format:
//!
//! ```text
//! # comment
//! name  = disk2d
//! n     = 2
//! m     = 1
//! lower = -3 -3        # one value per coordinate, or a single value for all
//! upper = 3
//! f     = (x1 - 2)^2 + (x2 - 1)^2
//! c1    = x1^2 + x2^2 - 1
//! start = 2 2          # repeatable; each start must lie in X
//! fstar = 1.5278640450004204
//! ```

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::types::DesignPoint;

/// Evaluates the objective, writing the `m` constraint values into the slice.
pub type ProblemFn = dyn Fn(&[f64], &mut [f64]) -> f64 + Send + Sync;

/// Where a problem came from; enough to rebuild it for replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProblemSource {
    Builtin(String),
    Definition(String),
    Custom,
}

#[derive(Clone)]
pub struct Problem {
    name: String,
    n: usize,
    m: usize,
    bounds: Option<Vec<(f64, f64)>>,
    starts: Vec<DesignPoint>,
    f_star: Option<f64>,
    func: Arc<ProblemFn>,
    source: ProblemSource,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("bounds", &self.bounds)
            .field("starts", &self.starts)
            .field("f_star", &self.f_star)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new<F>(name: impl Into<String>, n: usize, m: usize, func: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::InvalidConfig("problem dimension must be at least 1".into()));
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            bounds: None,
            starts: Vec::new(),
            f_star: None,
            func: Arc::new(func),
            source: ProblemSource::Custom,
        })
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: bounds.len() });
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi) || lo.is_nan()) {
            return Err(Error::InvalidConfig(format!("empty bound interval [{lo}, {hi}]")));
        }
        self.bounds = Some(bounds);
        self.check_starts()?;
        Ok(self)
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Result<Self> {
        let x0 = DesignPoint::new(x0)?;
        if x0.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x0.dim() });
        }
        self.starts.push(x0);
        self.check_starts()?;
        Ok(self)
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub(crate) fn with_source(mut self, source: ProblemSource) -> Self {
        self.source = source;
        self
    }

    fn check_starts(&self) -> Result<()> {
        match self.starts.iter().position(|x| !self.contains(x.coords())) {
            Some(i) => Err(Error::InvalidConfig(format!("start {i} of `{}` lies outside the bounds", self.name))),
            None => Ok(()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn starts(&self) -> &[DesignPoint] {
        &self.starts
    }

    pub fn start(&self, index: usize) -> Result<&DesignPoint> {
        self.starts.get(index).ok_or_else(|| {
            Error::InvalidConfig(format!("`{}` has {} start(s), no start {index}", self.name, self.starts.len()))
        })
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    pub fn source(&self) -> &ProblemSource {
        &self.source
    }

    /// Whether `x` satisfies the unrelaxable bounds.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.bounds {
            None => true,
            Some(b) => x.iter().zip(b).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi),
        }
    }

    /// Noiseless objective and constraint values.
    pub fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut c = vec![0.0; self.m];
        let f = (self.func)(x, &mut c);
        (f, c)
    }

    /// Parses the text problem format described in the module docs.
    pub fn from_definition(text: &str) -> Result<Self> {
        Definition::parse(text)?.build(text)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_definition(&std::fs::read_to_string(path)?)
    }
}

/// Resolves a built-in name or a path to a definition file.
pub fn load_problem(name_or_path: &str) -> Result<Problem> {
    if let Some(p) = crate::suite::builtin(name_or_path) {
        return Ok(p);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        return Problem::from_file(path);
    }
    Err(Error::UnknownProblem(name_or_path.to_string()))
}

#[derive(Default)]
struct Definition {
    name: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    lower: Option<(usize, Vec<f64>)>,
    upper: Option<(usize, Vec<f64>)>,
    objective: Option<(usize, String)>,
    constraints: Vec<(usize, usize, String)>,
    starts: Vec<(usize, Vec<f64>)>,
    f_star: Option<f64>,
}

fn parse_reals(line: usize, value: &str) -> Result<Vec<f64>> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("`{s}` is not a number") }))
        .collect()
}

impl Definition {
    fn parse(text: &str) -> Result<Self> {
        let mut def = Definition::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: "expected `key = value`".into() })?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| v.parse::<usize>().map_err(|_| Error::Parse { line, message: format!("`{v}` is not a non-negative integer") });
            match key {
                "name" => def.name = Some(value.to_string()),
                "n" => def.n = Some(int(value)?),
                "m" => def.m = Some(int(value)?),
                "lower" => def.lower = Some((line, parse_reals(line, value)?)),
                "upper" => def.upper = Some((line, parse_reals(line, value)?)),
                "f" => def.objective = Some((line, value.to_string())),
                "start" => def.starts.push((line, parse_reals(line, value)?)),
                "fstar" | "f_star" => {
                    def.f_star = Some(value.parse().map_err(|_| Error::Parse { line, message: format!("`{value}` is not a number") })?)
                }
                k if k.starts_with('c') && k[1..].parse::<usize>().is_ok() => {
                    let j = k[1..].parse::<usize>().unwrap_or(0);
                    def.constraints.push((line, j, value.to_string()));
                }
                other => return Err(Error::Parse { line, message: format!("unknown key `{other}`") }),
            }
        }
        Ok(def)
    }

    fn build(self, text: &str) -> Result<Problem> {
        let missing = |what: &str| Error::Parse { line: 0, message: format!("missing `{what}`") };
        let name = self.name.ok_or_else(|| missing("name"))?;
        let n = self.n.ok_or_else(|| missing("n"))?;
        let m = self.m.ok_or_else(|| missing("m"))?;
        let (f_line, f_src) = self.objective.ok_or_else(|| missing("f"))?;
        let objective = Expr::parse(&f_src, n).map_err(|e| Error::Parse { line: f_line, message: e.to_string() })?;

        let mut constraints: Vec<Option<Expr>> = vec![None; m];
        for (line, j, src) in self.constraints {
            if j == 0 || j > m {
                return Err(Error::Parse { line, message: format!("constraint c{j} outside c1..c{m}") });
            }
            if constraints[j - 1].is_some() {
                return Err(Error::Parse { line, message: format!("constraint c{j} defined twice") });
            }
            let e = Expr::parse(&src, n).map_err(|e| Error::Parse { line, message: e.to_string() })?;
            constraints[j - 1] = Some(e);
        }
        let constraints: Vec<Expr> = constraints
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.ok_or_else(|| missing(&format!("c{}", j + 1))))
            .collect::<Result<_>>()?;

        let func = move |x: &[f64], c: &mut [f64]| {
            for (slot, expr) in c.iter_mut().zip(&constraints) {
                *slot = expr.eval(x);
            }
            objective.eval(x)
        };
        let mut problem = Problem::new(name, n, m, func)?;

        let expand = |line: usize, v: Vec<f64>| -> Result<Vec<f64>> {
            match v.len() {
                1 => Ok(vec![v[0]; n]),
                len if len == n => Ok(v),
                len => Err(Error::Parse { line, message: format!("expected 1 or {n} bound values, found {len}") }),
            }
        };
        match (self.lower, self.upper) {
            (None, None) => {}
            (lower, upper) => {
                let lo = match lower {
                    Some((line, v)) => expand(line, v)?,
                    None => vec![f64::NEG_INFINITY; n],
                };
                let hi = match upper {
                    Some((line, v)) => expand(line, v)?,
                    None => vec![f64::INFINITY; n],
                };
                problem = problem.with_bounds(lo.into_iter().zip(hi).collect())?;
            }
        }
        if self.starts.is_empty() {
            return Err(missing("start"));
        }
        for (line, x0) in self.starts {
            problem = problem.with_start(x0).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        if let Some(v) = self.f_star {
            problem = problem.with_f_star(v);
        }
        Ok(problem.with_source(ProblemSource::Definition(text.to_string())))
    }
}
