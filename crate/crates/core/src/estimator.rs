//! Sample-average estimates, estimated violation, and reliable bounds.

use serde::{Deserialize, Serialize};

use crate::blackbox::{Blackbox, SampleCache};
use crate::error::{Error, Result};
use crate::types::DesignPoint;

/// Estimates at one point, for one poll size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub point: DesignPoint,
    pub f_hat: f64,
    pub c_hat: Vec<f64>,
    pub h_hat: f64,
    /// Lower bound `ℓ` on the violation.
    pub lower: f64,
    /// Upper bound `u` on the violation.
    pub upper: f64,
    /// Number of samples behind the means.
    pub p: u64,
    pub delta_p: f64,
}

/// `(ℓ, ĥ, u)` for constraint estimates `c_hat` at accuracy `epsilon * delta_p^2`.
pub fn bounds(c_hat: &[f64], epsilon: f64, delta_p: f64) -> (f64, f64, f64) {
    let r = epsilon * delta_p * delta_p;
    let (mut lower, mut h_hat, mut upper) = (0.0, 0.0, 0.0);
    for c in c_hat {
        lower += (c - r).max(0.0);
        h_hat += c.max(0.0);
        upper += (c + r).max(0.0);
    }
    (lower, h_hat, upper)
}

impl EstimateBundle {
    pub fn from_means(point: DesignPoint, f_hat: f64, c_hat: Vec<f64>, p: u64, epsilon: f64, delta_p: f64) -> Self {
        let (lower, h_hat, upper) = bounds(&c_hat, epsilon, delta_p);
        Self { point, f_hat, c_hat, h_hat, lower, upper, p, delta_p }
    }

    /// `u = 0`.
    pub fn is_eps_feasible(&self) -> bool {
        self.upper == 0.0
    }

    /// `0 < u <= h_max`.
    pub fn is_eps_infeasible(&self, h_max: f64) -> bool {
        self.upper > 0.0 && self.upper <= h_max
    }
}

/// A bundle plus the fresh samples drawn to build it.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub bundle: EstimateBundle,
    /// Fresh samples, each with the sample count `a(x)` right after it.
    pub fresh: Vec<(Vec<f64>, u64)>,
}

fn from_cache(cache: &SampleCache, x: &DesignPoint, epsilon: f64, delta_p: f64) -> EstimateBundle {
    let (mean, p) = cache.mean(x).expect("point was just sampled");
    EstimateBundle::from_means(x.clone(), mean[0], mean[1..].to_vec(), p, epsilon, delta_p)
}

/// Draws `n_k` fresh samples at `x` and averages them with every cached one.
///
/// The budget for all `n_k` calls is charged up front; if it cannot be, no
/// call is made and [`Error::Budget`] is returned. Concurrent calls must use
/// distinct points.
pub fn estimate(
    bb: &Blackbox,
    cache: &SampleCache,
    x: &DesignPoint,
    delta_p: f64,
    n_k: u32,
    epsilon: f64,
) -> Result<Estimate> {
    if n_k == 0 {
        return Err(Error::InvalidConfig("samples per visit must be at least 1".into()));
    }
    bb.check_point(x)?;
    bb.reserve(u64::from(n_k))?;
    let first = cache.count(x);
    let samples = bb.draws(x, first, u64::from(n_k));
    cache.merge(x, &samples)?;
    let fresh = samples.into_iter().zip(first + 1..).collect();
    Ok(Estimate { bundle: from_cache(cache, x, epsilon, delta_p), fresh })
}

/// One blackbox call per distinct point; later visits reuse the stored sample.
pub fn estimate_once(bb: &Blackbox, cache: &SampleCache, x: &DesignPoint, delta_p: f64, epsilon: f64) -> Result<Estimate> {
    if cache.count(x) > 0 {
        return Ok(Estimate { bundle: from_cache(cache, x, epsilon, delta_p), fresh: Vec::new() });
    }
    estimate(bb, cache, x, delta_p, 1, epsilon)
}

fn ceil_samples(rhs: f64) -> u64 {
    if !rhs.is_finite() || rhs >= u64::MAX as f64 {
        log::warn!("required sample size {rhs:e} does not fit in 64 bits; saturating");
        return u64::MAX;
    }
    (rhs.ceil() as u64).max(1)
}

fn check_common(v: f64, epsilon: f64, delta_p: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("variance bound must be finite and >= 0, got {v}")));
    }
    if !(epsilon > 0.0) || !(delta_p > 0.0) {
        return Err(Error::InvalidConfig("epsilon and delta_p must be positive".into()));
    }
    Ok(())
}

/// Smallest `p` with `p >= V / (eps^2 (1 - alpha^(1/(2m))) delta_p^4)`.
///
/// Samples per constraint needed for the bounds to hold with probability
/// `alpha^(1/2)` under a variance bound `V`. `V = 0` needs one sample.
pub fn required_samples_constraint(v: f64, epsilon: f64, alpha: f64, m: usize, delta_p: f64) -> Result<u64> {
    check_common(v, epsilon, delta_p)?;
    if !(alpha > 0.0 && alpha < 1.0) || m == 0 {
        return Err(Error::InvalidConfig(format!("need 0 < alpha < 1 and m >= 1, got alpha={alpha}, m={m}")));
    }
    if v == 0.0 {
        return Ok(1);
    }
    // 1 - alpha^(1/(2m)) without cancellation.
    let gap = -(alpha.ln() / (2.0 * m as f64)).exp_m1();
    Ok(ceil_samples(v / (epsilon * epsilon * gap * delta_p.powi(4))))
}

/// Smallest `p` with `p >= V / (eps^2 (1 - sqrt(beta)) delta_p^4)`.
pub fn required_samples_objective(v: f64, epsilon: f64, beta: f64, delta_p: f64) -> Result<u64> {
    check_common(v, epsilon, delta_p)?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!("need 0 <= beta < 1, got {beta}")));
    }
    if v == 0.0 {
        return Ok(1);
    }
    let gap = if beta == 0.0 { 1.0 } else { -(0.5 * beta.ln()).exp_m1() };
    Ok(ceil_samples(v / (epsilon * epsilon * gap * delta_p.powi(4))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::NoiseSpec;
    use crate::suite::builtin;
    use proptest::prelude::*;

    fn point(v: &[f64]) -> DesignPoint {
        DesignPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bound_examples() {
        let (l, h, u) = bounds(&[0.3, -0.5], 0.01, 1.0);
        assert!((l - 0.29).abs() < 1e-15);
        assert!((h - 0.3).abs() < 1e-15);
        assert!((u - 0.31).abs() < 1e-15);
        let (_, _, u) = bounds(&[-0.02, -0.5], 0.01, 1.0);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn noiseless_estimates_are_exact() {
        let p = builtin("disk2d").unwrap();
        let bb = Blackbox::new(p.clone(), NoiseSpec::zero(1), 0, 100).unwrap();
        let cache = SampleCache::new(2);
        let x = point(&[0.5, 0.75]);
        let e = estimate(&bb, &cache, &x, 0.5, 3, 0.01).unwrap();
        let (f, c) = p.evaluate(x.coords());
        assert_eq!(e.bundle.f_hat, f);
        assert_eq!(e.bundle.c_hat, c);
        assert_eq!(e.bundle.p, 3);
        assert_eq!(e.fresh.iter().map(|(_, a)| *a).collect::<Vec<_>>(), vec![1, 2, 3]);
        let r = 0.01 * 0.25;
        assert_eq!(e.bundle.lower, (c[0] - r).max(0.0));
        assert_eq!(e.bundle.upper, (c[0] + r).max(0.0));
        let again = estimate(&bb, &cache, &x, 0.5, 3, 0.01).unwrap();
        assert_eq!(again.bundle.p, 6);
        assert_eq!(bb.used(), 6);
    }

    #[test]
    fn estimate_is_all_or_nothing() {
        let p = builtin("disk2d").unwrap();
        let bb = Blackbox::new(p, NoiseSpec::zero(1), 0, 3).unwrap();
        let cache = SampleCache::new(2);
        let x = point(&[0.0, 0.0]);
        estimate(&bb, &cache, &x, 1.0, 2, 0.01).unwrap();
        assert!(matches!(estimate(&bb, &cache, &x, 1.0, 2, 0.01), Err(Error::Budget(_))));
        assert_eq!((bb.used(), cache.count(&x)), (2, 2));
    }

    #[test]
    fn estimate_once_reuses_cache() {
        let p = builtin("wedge2d").unwrap();
        let bb = Blackbox::new(p, NoiseSpec::zero(2), 0, 10).unwrap();
        let cache = SampleCache::new(3);
        let x = point(&[1.0, 1.0]);
        let a = estimate_once(&bb, &cache, &x, 1.0, 0.01).unwrap();
        let b = estimate_once(&bb, &cache, &x, 0.5, 0.01).unwrap();
        assert_eq!(a.fresh.len(), 1);
        assert!(b.fresh.is_empty());
        assert_eq!(a.bundle.f_hat, b.bundle.f_hat);
        assert_eq!(bb.used(), 1);
    }

    #[test]
    fn revisits_average_over_all_samples() {
        let p = builtin("disk2d").unwrap();
        let x0 = p.start(0).unwrap().clone();
        let noise = NoiseSpec::from_start(&p, &x0, 0.05, None).unwrap();
        let bb = Blackbox::new(p, noise, 5, 100).unwrap();
        let cache = SampleCache::new(2);
        let first = estimate(&bb, &cache, &x0, 1.0, 2, 0.01).unwrap();
        let second = estimate(&bb, &cache, &x0, 1.0, 2, 0.01).unwrap();
        let all: Vec<f64> = first.fresh.iter().chain(&second.fresh).map(|(s, _)| s[0]).collect();
        let mean = all.iter().sum::<f64>() / 4.0;
        assert!((second.bundle.f_hat - mean).abs() < 1e-12);
        assert_eq!(second.bundle.p, 4);
    }

    #[test]
    fn constraint_sample_sizes() {
        // Oracle values from 50-digit arithmetic.
        assert_eq!(required_samples_constraint(1.0, 0.01, 0.9, 1, 1.0).unwrap(), 194_869);
        assert_eq!(required_samples_constraint(1.0, 0.01, 0.9, 1, 2.0).unwrap(), 12_180);
        assert_eq!(required_samples_constraint(1.0, 0.01, 0.9, 2, 1.0).unwrap(), 384_671);
        assert_eq!(required_samples_constraint(0.0, 0.01, 0.9, 1, 1.0).unwrap(), 1);
        assert!(required_samples_constraint(1.0, 0.01, 1.0, 1, 1.0).is_err());
        assert_eq!(required_samples_constraint(1.0, 1e-30, 0.9, 1, 1e-30).unwrap(), u64::MAX);
    }

    #[test]
    fn objective_sample_sizes() {
        assert_eq!(required_samples_objective(1.0, 0.01, 0.96, 1.0).unwrap(), 494_949);
        assert_eq!(required_samples_objective(1.0, 0.01, 0.96, 2.0).unwrap(), 30_935);
        assert_eq!(required_samples_objective(1.0, 0.01, 0.0, 1.0).unwrap(), 10_000);
        assert_eq!(required_samples_objective(0.0, 0.01, 0.5, 1.0).unwrap(), 1);
    }

    #[test]
    fn doubling_delta_divides_by_sixteen() {
        let a = required_samples_constraint(3.0, 0.02, 0.8, 2, 0.5).unwrap() as f64;
        let b = required_samples_constraint(3.0, 0.02, 0.8, 2, 1.0).unwrap() as f64;
        assert!((a / 16.0 - b).abs() <= 1.0);
    }

    proptest! {
        #[test]
        fn bundle_identities(c_hat in prop::collection::vec(-2.0f64..2.0, 1..5), eps in 1e-3f64..0.1, dp in 1e-3f64..4.0) {
            let b = EstimateBundle::from_means(point(&[0.0]), 0.0, c_hat.clone(), 1, eps, dp);
            let expected_h: f64 = c_hat.iter().map(|c| c.max(0.0)).sum();
            prop_assert_eq!(b.h_hat, expected_h);
            prop_assert!(0.0 <= b.lower && b.lower <= b.h_hat && b.h_hat <= b.upper);
            let m = c_hat.len() as f64;
            let slack = 1e-12 * (1.0 + c_hat.iter().map(|c| c.abs()).sum::<f64>());
            prop_assert!(b.upper - b.lower <= 2.0 * m * eps * dp * dp + slack);
        }

        #[test]
        fn sample_size_is_smallest_satisfying(v in 1e-3f64..10.0, alpha in 0.05f64..0.99, m in 1usize..5, dp in 0.25f64..4.0) {
            let p = required_samples_constraint(v, 0.01, alpha, m, dp).unwrap();
            let gap = 1.0 - alpha.powf(1.0 / (2.0 * m as f64));
            let rhs = v / (1e-4 * gap * dp.powi(4));
            prop_assert!(p as f64 >= rhs * (1.0 - 1e-9));
            prop_assert!((p - 1) as f64 <= rhs * (1.0 + 1e-9) || p == 1);
        }
    }
}
