//! Noisy oracle, evaluation budget, sample cache, and the truth oracle.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::RngCore;

use crate::error::{BudgetExhausted, Error, Result};
use crate::problem::Problem;
use crate::rng;
use crate::types::{violation, DesignPoint};

/// Additive uniform noise: channel `j` is perturbed by `U(-w_j, w_j)`.
///
/// Channel 0 is the objective, channels `1..=m` the constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
    reference: Option<f64>,
    half_widths: Vec<f64>,
}

impl NoiseSpec {
    /// No noise on any of the `m + 1` channels.
    pub fn zero(m: usize) -> Self {
        Self { sigma: 0.0, reference: None, half_widths: vec![0.0; m + 1] }
    }

    /// Half-widths `sigma*|f(x0) - f_ref|` and `sigma*|c_j(x0)|`, frozen at `x0`.
    ///
    /// `reference` overrides the problem's best known value. With `sigma > 0`
    /// one of the two must exist.
    pub fn from_start(problem: &Problem, x0: &DesignPoint, sigma: f64, reference: Option<f64>) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be a finite value >= 0, got {sigma}")));
        }
        if x0.dim() != problem.n() {
            return Err(Error::DimensionMismatch { expected: problem.n(), found: x0.dim() });
        }
        if sigma == 0.0 {
            return Ok(Self { reference, ..Self::zero(problem.m()) });
        }
        let f_ref = reference
            .or(problem.f_star())
            .ok_or_else(|| Error::MissingReference(problem.name().to_string()))?;
        let (f0, c0) = problem.evaluate(x0.coords());
        let mut half_widths = Vec::with_capacity(problem.m() + 1);
        half_widths.push(sigma * (f0 - f_ref).abs());
        half_widths.extend(c0.iter().map(|c| sigma * c.abs()));
        if half_widths.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("noise half-widths are not finite at the start point".into()));
        }
        Ok(Self { sigma, reference, half_widths })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The explicit reference value, if one was given.
    pub fn reference(&self) -> Option<f64> {
        self.reference
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Variance `w^2 / 3` of each channel.
    pub fn variances(&self) -> Vec<f64> {
        self.half_widths.iter().map(|w| w * w / 3.0).collect()
    }
}

/// Noiseless values at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueValues {
    pub f: f64,
    pub c: Vec<f64>,
    pub h: f64,
}

/// Truth oracle for the harness. Never touches any budget.
pub fn true_eval(problem: &Problem, x: &[f64]) -> TrueValues {
    let (f, c) = problem.evaluate(x);
    let h = violation(&c, problem.contains(x));
    TrueValues { f, c, h }
}

/// A problem behind additive noise, with a hard evaluation budget.
///
/// Samples are addressed by `(seed, point, channel, draw index)`, so the value
/// of a draw does not depend on when or on which thread it is taken.
#[derive(Debug)]
pub struct Blackbox {
    problem: Problem,
    noise: NoiseSpec,
    seed: u64,
    budget: u64,
    used: AtomicU64,
}

impl Blackbox {
    pub fn new(problem: Problem, noise: NoiseSpec, seed: u64, budget: u64) -> Result<Self> {
        if noise.half_widths().len() != problem.m() + 1 {
            return Err(Error::DimensionMismatch { expected: problem.m() + 1, found: noise.half_widths().len() });
        }
        Ok(Self { problem, noise, seed, budget, used: AtomicU64::new(0) })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Number of blackbox calls charged so far.
    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used()
    }

    /// Charges `count` calls at once, or none if they do not all fit.
    pub fn reserve(&self, count: u64) -> Result<(), BudgetExhausted> {
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                used.checked_add(count).filter(|total| *total <= self.budget)
            })
            .map(|_| ())
            .map_err(|_| BudgetExhausted)
    }

    /// One noisy call: bounds check, one unit of budget, draw `draw` at `x`.
    pub fn noisy_eval(&self, x: &DesignPoint, draw: u64) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.reserve(1)?;
        Ok(self.draws(x, draw, 1).pop().expect("one draw requested"))
    }

    pub(crate) fn check_point(&self, x: &DesignPoint) -> Result<()> {
        if x.dim() != self.problem.n() {
            return Err(Error::DimensionMismatch { expected: self.problem.n(), found: x.dim() });
        }
        if !self.problem.contains(x.coords()) {
            return Err(Error::OutOfBounds);
        }
        Ok(())
    }

    /// Draws `first..first + count` at `x` without charging the budget.
    pub(crate) fn draws(&self, x: &DesignPoint, first: u64, count: u64) -> Vec<Vec<f64>> {
        let (f, c) = self.problem.evaluate(x.coords());
        let fingerprint = x.fingerprint();
        let mut out: Vec<Vec<f64>> = (0..count).map(|_| Vec::with_capacity(c.len() + 1)).collect();
        for (channel, (&value, &w)) in std::iter::once(&f).chain(&c).zip(&self.noise.half_widths).enumerate() {
            if w == 0.0 {
                out.iter_mut().for_each(|s| s.push(value));
                continue;
            }
            let key = rng::stream_key(&[rng::NOISE_DOMAIN, fingerprint, channel as u64]);
            let mut stream = rng::stream(self.seed, key);
            stream.set_word_pos(u128::from(first) * 2);
            for s in &mut out {
                let u = rng::unit_f64(stream.next_u64());
                s.push(value + w * (2.0 * u - 1.0));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Accumulator {
    sums: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
    count: u64,
}

impl Accumulator {
    fn add(&mut self, sample: &[f64]) {
        for (j, v) in sample.iter().enumerate() {
            self.sums[j] += v;
            self.min[j] = self.min[j].min(*v);
            self.max[j] = self.max[j].max(*v);
        }
        self.count += 1;
    }

    fn mean(&self) -> Vec<f64> {
        let p = self.count as f64;
        (0..self.sums.len())
            .map(|j| if self.min[j] == self.max[j] { self.min[j] } else { self.sums[j] / p })
            .collect()
    }
}

#[derive(Debug, Default)]
struct CacheInner {
    index: HashMap<DesignPoint, usize>,
    entries: Vec<(DesignPoint, Accumulator)>,
}

/// Per-point running sums of every sample ever drawn, keyed by bit identity.
///
/// Sums are accumulated in insertion order. A channel whose samples are all
/// equal reports that value exactly as its mean.
#[derive(Debug)]
pub struct SampleCache {
    channels: usize,
    inner: Mutex<CacheInner>,
}

/// Snapshot of one cache entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub point: DesignPoint,
    pub sums: Vec<f64>,
    pub count: u64,
}

impl SampleCache {
    /// A cache for samples with `channels` values (`m + 1`).
    pub fn new(channels: usize) -> Self {
        Self { channels, inner: Mutex::new(CacheInner::default()) }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Adds one sample at `x`; returns the new count `a(x)`.
    pub fn accumulate(&self, x: &DesignPoint, sample: &[f64]) -> Result<u64> {
        self.merge(x, std::slice::from_ref(&sample.to_vec()))
    }

    /// Adds several samples at `x` in one atomic step; returns the new count.
    pub fn merge(&self, x: &DesignPoint, samples: &[Vec<f64>]) -> Result<u64> {
        if let Some(bad) = samples.iter().find(|s| s.len() != self.channels) {
            return Err(Error::DimensionMismatch { expected: self.channels, found: bad.len() });
        }
        if let Some(bad) = samples.iter().flatten().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: bad % self.channels });
        }
        let mut inner = self.inner.lock().expect("cache lock poisoned");
        let slot = match inner.index.get(x) {
            Some(&i) => i,
            None => {
                let i = inner.entries.len();
                let acc = Accumulator {
                    sums: vec![0.0; self.channels],
                    min: vec![f64::INFINITY; self.channels],
                    max: vec![f64::NEG_INFINITY; self.channels],
                    count: 0,
                };
                inner.entries.push((x.clone(), acc));
                inner.index.insert(x.clone(), i);
                i
            }
        };
        let acc = &mut inner.entries[slot].1;
        for s in samples {
            acc.add(s);
        }
        Ok(acc.count)
    }

    /// Number of samples `a(x)` stored at `x`.
    pub fn count(&self, x: &DesignPoint) -> u64 {
        let inner = self.inner.lock().expect("cache lock poisoned");
        inner.index.get(x).map_or(0, |&i| inner.entries[i].1.count)
    }

    /// Channel means at `x`, with the sample count.
    pub fn mean(&self, x: &DesignPoint) -> Option<(Vec<f64>, u64)> {
        let inner = self.inner.lock().expect("cache lock poisoned");
        inner.index.get(x).map(|&i| {
            let acc = &inner.entries[i].1;
            (acc.mean(), acc.count)
        })
    }

    /// Number of distinct points.
    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries in insertion order.
    pub fn snapshot(&self) -> Vec<CacheEntry> {
        let inner = self.inner.lock().expect("cache lock poisoned");
        inner
            .entries
            .iter()
            .map(|(p, a)| CacheEntry { point: p.clone(), sums: a.sums.clone(), count: a.count })
            .collect()
    }
}
