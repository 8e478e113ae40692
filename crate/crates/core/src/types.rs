//! Domain types shared by every stage of the solver.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of the design space, in problem units.
///
/// Equality and hashing use the exact bit pattern of every coordinate, so two
/// points are the same cache entry only if they are bit-identical. Negative
/// zero is normalized to positive zero on construction.
#[derive(Clone, Debug)]
pub struct DesignPoint(Vec<f64>);

impl DesignPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidConfig("design point must have at least one coordinate".into()));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self::from_finite(coords))
    }

    /// Builds a point from coordinates already known to be finite.
    pub(crate) fn from_finite(mut coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        for c in &mut coords {
            if *c == 0.0 {
                *c = 0.0;
            }
        }
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self + scale * step`, where `step` holds integer mesh coordinates.
    pub fn offset(&self, scale: f64, step: &[i64]) -> Self {
        debug_assert_eq!(step.len(), self.0.len());
        let coords = self.0.iter().zip(step).map(|(x, d)| x + scale * (*d as f64)).collect();
        Self::from_finite(coords)
    }

    /// Stable 64-bit fingerprint of the bit pattern, used to key random streams.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0x243F_6A88_85A3_08D3_u64 ^ self.0.len() as u64;
        for c in &self.0 {
            h = crate::rng::mix(h ^ c.to_bits());
        }
        h
    }
}

impl PartialEq for DesignPoint {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for DesignPoint {}

impl Hash for DesignPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.len().hash(state);
        for c in &self.0 {
            c.to_bits().hash(state);
        }
    }
}

impl Serialize for DesignPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DesignPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        DesignPoint::new(coords).map_err(serde::de::Error::custom)
    }
}

/// Aggregated ℓ1 constraint violation.
///
/// Returns `+inf` for points outside the unrelaxable set `X`, otherwise the sum
/// of the positive parts of the constraint values.
pub fn violation(constraint_values: &[f64], in_x: bool) -> f64 {
    if !in_x {
        return f64::INFINITY;
    }
    constraint_values.iter().map(|c| c.max(0.0)).sum()
}

/// A rational number in `(0, 1)`, the mesh refinement factor τ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num >= den {
            return Err(Error::InvalidConfig(format!("tau must be a ratio in (0, 1), got {num}/{den}")));
        }
        Ok(Self { num, den })
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// `self^exp` as an exact integer fraction, when it fits in 128 bits.
    pub fn pow_fraction(self, exp: i32) -> Option<(u128, u128)> {
        let e = exp.unsigned_abs();
        let p = u128::from(self.num).checked_pow(e)?;
        let q = u128::from(self.den).checked_pow(e)?;
        Some(if exp >= 0 { (p, q) } else { (q, p) })
    }

    /// `self^exp`, computed identically on every IEEE-754 platform.
    pub fn pow(self, exp: i32) -> f64 {
        if let Some((p, q)) = self.pow_fraction(exp) {
            return p as f64 / q as f64;
        }
        let base = if exp >= 0 { self.value() } else { f64::from(self.den) / f64::from(self.num) };
        (0..exp.unsigned_abs()).fold(1.0, |acc, _| acc * base)
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Self { num: 1, den: 2 }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse `{s}` as a ratio `num/den`"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let num = n.trim().parse().map_err(|_| bad())?;
        let den = d.trim().parse().map_err(|_| bad())?;
        Ratio::new(num, den)
    }
}

/// Poll and mesh sizes.
///
/// The poll size is kept as `base * tau^exponent` so that every size the run
/// ever visits is reproducible bit-for-bit. The mesh size is always
/// `min(delta_p, delta_p^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshState {
    tau: Ratio,
    z_hat: u32,
    exponent: i32,
    base: f64,
}

impl MeshState {
    pub fn new(tau: Ratio, z_hat: u32, base: f64) -> Result<Self> {
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::InvalidConfig(format!("initial poll size must be positive, got {base}")));
        }
        if z_hat == 0 {
            return Err(Error::InvalidConfig("z_hat must be a positive integer".into()));
        }
        Ok(Self { tau, z_hat, exponent: 0, base })
    }

    /// Mesh state at an arbitrary exponent, clamped to the growth cap.
    pub fn at_exponent(tau: Ratio, z_hat: u32, base: f64, exponent: i32) -> Result<Self> {
        let mut mesh = Self::new(tau, z_hat, base)?;
        mesh.exponent = exponent.max(-(z_hat as i32));
        Ok(mesh)
    }

    pub fn delta_p(&self) -> f64 {
        self.base * self.tau.pow(self.exponent)
    }

    pub fn delta_m(&self) -> f64 {
        let dp = self.delta_p();
        dp.min(dp * dp)
    }

    pub fn tau(&self) -> Ratio {
        self.tau
    }

    pub fn z_hat(&self) -> u32 {
        self.z_hat
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Upper bound `base * tau^(-z_hat)` on the poll size.
    pub fn cap(&self) -> f64 {
        self.base * self.tau.pow(-(self.z_hat as i32))
    }

    /// Poll size grows by `1/tau`, up to the cap.
    pub fn enlarged(self) -> Self {
        Self { exponent: (self.exponent - 1).max(-(self.z_hat as i32)), ..self }
    }

    /// Poll size shrinks by `tau`.
    pub fn refined(self) -> Self {
        Self { exponent: self.exponent + 1, ..self }
    }

    /// Exact rendering `p/q·base` of the poll size.
    pub fn delta_p_exact(&self) -> String {
        match self.tau.pow_fraction(self.exponent) {
            Some((p, q)) => format!("{p}/{q}·{}", self.base),
            None => format!("({})^{}·{}", self.tau, self.exponent, self.base),
        }
    }
}

/// Solver flavour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Sample-average estimates with cache reuse; barrier starts at `u(x0)`.
    Stochastic,
    /// One blackbox call per distinct point; barrier starts at `+inf`.
    Deterministic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stochastic" | "stomads" | "stomads-pb" => Ok(Mode::Stochastic),
            "deterministic" | "mads" | "mads-pb" => Ok(Mode::Deterministic),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Stochastic => "stochastic",
            Mode::Deterministic => "deterministic",
        })
    }
}

/// Solver parameters. Defaults follow the reference computational setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sufficient-decrease multiplier, must exceed 2.
    pub gamma: f64,
    /// Accuracy constant of the estimates.
    pub epsilon: f64,
    pub tau: Ratio,
    pub z_hat: u32,
    /// Frame-center trigger.
    pub rho: f64,
    /// Fresh blackbox calls per estimate (`n_k`).
    pub samples_per_visit: u32,
    /// Budget is `budget_multiplier * (n + 1)` unless `budget` is set.
    pub budget_multiplier: u64,
    pub budget: Option<u64>,
    pub seed: u64,
    pub mode: Mode,
    /// Initial poll size.
    pub initial_poll_size: f64,
    /// Secondary stopping rule on the poll size.
    pub min_poll_size: f64,
    /// Estimate at the inert feasible incumbent before the first feasible point.
    pub strict_remark1: bool,
    /// Poll the secondary center with a full maximal basis.
    pub full_secondary_poll: bool,
    /// Evaluate every poll candidate as one batch (workers may run concurrently).
    pub batch_poll: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 17.0,
            epsilon: 0.01,
            tau: Ratio::default(),
            z_hat: 10,
            rho: 0.1,
            samples_per_visit: 2,
            budget_multiplier: 1000,
            budget: None,
            seed: 0,
            mode: Mode::Stochastic,
            initial_poll_size: 1.0,
            min_poll_size: 1e-9,
            strict_remark1: false,
            full_secondary_poll: false,
            batch_poll: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma > 2.0) || !self.gamma.is_finite() {
            return fail(format!("gamma must be a finite value > 2, got {}", self.gamma));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return fail(format!("rho must be positive, got {}", self.rho));
        }
        Ratio::new(self.tau.num, self.tau.den)?;
        if self.z_hat == 0 {
            return fail("z_hat must be a positive integer".into());
        }
        if self.samples_per_visit == 0 {
            return fail("samples per visit must be at least 1".into());
        }
        if self.budget == Some(0) || (self.budget.is_none() && self.budget_multiplier == 0) {
            return fail("budget must be positive".into());
        }
        if !(self.initial_poll_size > 0.0) || !self.initial_poll_size.is_finite() {
            return fail(format!("initial poll size must be positive, got {}", self.initial_poll_size));
        }
        Ok(())
    }

    /// Evaluation budget for a problem of dimension `n`.
    pub fn budget_for(&self, n: usize) -> u64 {
        self.budget.unwrap_or(self.budget_multiplier * (n as u64 + 1))
    }

    pub fn initial_mesh(&self) -> Result<MeshState> {
        MeshState::new(self.tau, self.z_hat, self.initial_poll_size)
    }
}

/// Iteration classification, with the accepted point where there is one.
#[derive(Clone, Debug, PartialEq)]
pub enum IterationOutcome {
    FDominating(DesignPoint),
    HDominating(DesignPoint),
    Improving(DesignPoint),
    Unsuccessful,
}

/// Tag of an [`IterationOutcome`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTag {
    FDominating,
    HDominating,
    Improving,
    Unsuccessful,
}

impl IterationOutcome {
    pub fn tag(&self) -> OutcomeTag {
        match self {
            IterationOutcome::FDominating(_) => OutcomeTag::FDominating,
            IterationOutcome::HDominating(_) => OutcomeTag::HDominating,
            IterationOutcome::Improving(_) => OutcomeTag::Improving,
            IterationOutcome::Unsuccessful => OutcomeTag::Unsuccessful,
        }
    }

    pub fn accepted(&self) -> Option<&DesignPoint> {
        match self {
            IterationOutcome::FDominating(x) | IterationOutcome::HDominating(x) | IterationOutcome::Improving(x) => {
                Some(x)
            }
            IterationOutcome::Unsuccessful => None,
        }
    }

    pub fn is_success(&self) -> bool {
        !matches!(self, IterationOutcome::Unsuccessful)
    }
}
