//! Built-in analytical test problems.
//!
//! Small, original problems with closed-form optima, sized like the usual
//! constrained DFO test sets (n from 2 to 10, one to four relaxable
//! constraints). Every start point is infeasible and lies on a dyadic grid so
//! mesh arithmetic stays exact.

use crate::problem::{Problem, ProblemSource};

fn build(p: crate::error::Result<Problem>) -> Problem {
    p.expect("built-in problem definitions are valid")
}

/// Quadratic objective centred outside the unit disk; optimum on the boundary.
fn disk2d() -> Problem {
    build(
        Problem::new("disk2d", 2, 1, |x, c| {
            c[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
            (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2)
        })
        .and_then(|p| p.with_bounds(vec![(-3.0, 3.0); 2]))
        .and_then(|p| p.with_start(vec![2.0, 2.0]))
        .and_then(|p| p.with_start(vec![-2.0, 2.0]))
        .and_then(|p| p.with_start(vec![0.0, -3.0]))
        .map(|p| p.with_f_star(6.0 - 2.0 * 5f64.sqrt())),
    )
}

/// Two linear constraints meeting at the optimum (1, 0).
fn wedge2d() -> Problem {
    build(
        Problem::new("wedge2d", 2, 2, |x, c| {
            c[0] = x[0] + x[1] - 1.0;
            c[1] = -x[1];
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2)
        })
        .and_then(|p| p.with_bounds(vec![(-5.0, 5.0); 2]))
        .and_then(|p| p.with_start(vec![4.0, 3.0]))
        .and_then(|p| p.with_start(vec![-3.0, -2.0]))
        .and_then(|p| p.with_start(vec![3.0, 2.0]))
        .map(|p| p.with_f_star(5.0)),
    )
}

/// Linear objective over the ring between two circles; optimum (0, -2).
fn crescent2d() -> Problem {
    build(
        Problem::new("crescent2d", 2, 2, |x, c| {
            c[0] = x[0] * x[0] + x[1] * x[1] - 4.0;
            c[1] = 1.0 - (x[0] - 1.0).powi(2) - x[1] * x[1];
            x[1]
        })
        .and_then(|p| p.with_bounds(vec![(-3.0, 3.0); 2]))
        .and_then(|p| p.with_start(vec![1.0, 0.0]))
        .and_then(|p| p.with_start(vec![3.0, 3.0]))
        .and_then(|p| p.with_start(vec![1.0, -0.5]))
        .map(|p| p.with_f_star(-2.0)),
    )
}

/// Least-norm point of a half-space with a tie constraint `x1 <= x2`.
fn simplex3d() -> Problem {
    build(
        Problem::new("simplex3d", 3, 2, |x, c| {
            c[0] = 1.0 - x[0] - x[1] - x[2];
            c[1] = x[0] - x[1];
            x.iter().map(|v| v * v).sum()
        })
        .and_then(|p| p.with_bounds(vec![(-2.0, 2.0); 3]))
        .and_then(|p| p.with_start(vec![0.0, 0.0, 0.0]))
        .and_then(|p| p.with_start(vec![-1.0, 1.0, -1.0]))
        .and_then(|p| p.with_start(vec![2.0, -1.0, -1.0]))
        .map(|p| p.with_f_star(1.0 / 3.0)),
    )
}

/// Linear objective over a ball of radius sqrt(5); optimum (-1, ..., -1).
fn ball5d() -> Problem {
    build(
        Problem::new("ball5d", 5, 1, |x, c| {
            c[0] = x.iter().map(|v| v * v).sum::<f64>() - 5.0;
            x.iter().sum()
        })
        .and_then(|p| p.with_bounds(vec![(-4.0, 4.0); 5]))
        .and_then(|p| p.with_start(vec![2.0; 5]))
        .and_then(|p| p.with_start(vec![3.0, 0.0, 0.0, 0.0, 0.0]))
        .and_then(|p| p.with_start(vec![-2.0, -2.0, -2.0, 0.0, 0.0]))
        .map(|p| p.with_f_star(-5.0)),
    )
}

/// Projection of (2, ..., 2) onto `sum(x) <= 6`, plus an inactive `x1^2 <= 4`.
fn halfspace6d() -> Problem {
    build(
        Problem::new("halfspace6d", 6, 2, |x, c| {
            c[0] = x.iter().sum::<f64>() - 6.0;
            c[1] = x[0] * x[0] - 4.0;
            x.iter().map(|v| (v - 2.0).powi(2)).sum()
        })
        .and_then(|p| p.with_bounds(vec![(-4.0, 4.0); 6]))
        .and_then(|p| p.with_start(vec![3.0; 6]))
        .and_then(|p| p.with_start(vec![2.0; 6]))
        .and_then(|p| p.with_start(vec![-3.0, 0.0, 0.0, 3.0, 3.0, 3.0]))
        .map(|p| p.with_f_star(6.0)),
    )
}

/// Least-norm point with four pairwise sum constraints `x_{2j-1} + x_{2j} >= 1`.
fn pairs10d() -> Problem {
    build(
        Problem::new("pairs10d", 10, 4, |x, c| {
            for (j, cj) in c.iter_mut().enumerate() {
                *cj = 1.0 - x[2 * j] - x[2 * j + 1];
            }
            x.iter().map(|v| v * v).sum()
        })
        .and_then(|p| p.with_bounds(vec![(-3.0, 3.0); 10]))
        .and_then(|p| p.with_start(vec![0.0; 10]))
        .and_then(|p| p.with_start(vec![-1.0; 10]))
        .and_then(|p| p.with_start(vec![-1.0, 0.0, -1.0, 0.0, -1.0, 0.0, -1.0, 0.0, 1.0, 1.0]))
        .map(|p| p.with_f_star(2.0)),
    )
}

type Builder = (&'static str, fn() -> Problem);

const BUILDERS: &[Builder] = &[
    ("disk2d", disk2d),
    ("wedge2d", wedge2d),
    ("crescent2d", crescent2d),
    ("simplex3d", simplex3d),
    ("ball5d", ball5d),
    ("halfspace6d", halfspace6d),
    ("pairs10d", pairs10d),
];

/// All built-in problems, in a fixed order.
pub fn builtin_suite() -> Vec<Problem> {
    BUILDERS.iter().map(|(name, f)| f().with_source(ProblemSource::Builtin((*name).to_string()))).collect()
}

pub fn builtin(name: &str) -> Option<Problem> {
    BUILDERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, f)| f().with_source(ProblemSource::Builtin((*n).to_string())))
}

/// Names of the built-in problems.
pub fn builtin_names() -> Vec<&'static str> {
    BUILDERS.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::violation;

    /// Known minimizers, used to cross-check the stored best values.
    fn minimizer(name: &str) -> Vec<f64> {
        match name {
            "disk2d" => vec![2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()],
            "wedge2d" => vec![1.0, 0.0],
            "crescent2d" => vec![0.0, -2.0],
            "simplex3d" => vec![1.0 / 3.0; 3],
            "ball5d" => vec![-1.0; 5],
            "halfspace6d" => vec![1.0; 6],
            "pairs10d" => {
                let mut x = vec![0.5; 8];
                x.extend([0.0, 0.0]);
                x
            }
            other => panic!("no minimizer for {other}"),
        }
    }

    #[test]
    fn suite_shape() {
        let suite = builtin_suite();
        assert!(suite.len() >= 6);
        for p in &suite {
            assert!((2..=10).contains(&p.n()), "{}", p.name());
            assert!((1..=4).contains(&p.m()), "{}", p.name());
            assert!(p.f_star().is_some());
            assert_eq!(p.starts().len(), 3);
            assert_eq!(builtin(p.name()).unwrap().name(), p.name());
        }
    }

    #[test]
    fn every_start_is_infeasible_and_inside_bounds() {
        for p in builtin_suite() {
            for x0 in p.starts() {
                assert!(p.contains(x0.coords()));
                let (_, c) = p.evaluate(x0.coords());
                assert!(violation(&c, true) > 0.0, "{} start {:?}", p.name(), x0);
                for v in x0.coords() {
                    assert_eq!((v * 4.0).fract(), 0.0, "start coordinates are dyadic");
                }
            }
        }
    }

    #[test]
    fn stored_optimum_matches_minimizer() {
        for p in builtin_suite() {
            let x = minimizer(p.name());
            let (f, c) = p.evaluate(&x);
            assert!(c.iter().all(|v| *v <= 1e-12), "{} minimizer infeasible: {c:?}", p.name());
            assert!((f - p.f_star().unwrap()).abs() < 1e-12, "{}", p.name());
        }
    }

    #[test]
    fn no_sampled_feasible_point_beats_optimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for p in builtin_suite() {
            let bounds = p.bounds().unwrap().to_vec();
            for _ in 0..20_000 {
                let x: Vec<f64> = bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
                let (f, c) = p.evaluate(&x);
                if c.iter().all(|v| *v <= 0.0) {
                    assert!(f >= p.f_star().unwrap() - 1e-12, "{} at {x:?}", p.name());
                }
            }
        }
    }

    /// Dense grid refinement: a full grid over the box, then repeated 4x
    /// zooms around the best feasible node until the spacing reaches 1e-6.
    fn grid_refined_minimum(p: &Problem) -> f64 {
        let bounds = p.bounds().unwrap();
        let (mut lo, mut hi) = ([bounds[0].0, bounds[1].0], [bounds[0].1, bounds[1].1]);
        let steps = 400;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        loop {
            let h = [(hi[0] - lo[0]) / steps as f64, (hi[1] - lo[1]) / steps as f64];
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]];
                    if !p.contains(&x) {
                        continue;
                    }
                    let (f, c) = p.evaluate(&x);
                    if c.iter().all(|v| *v <= 0.0) && f < best.0 {
                        best = (f, x);
                    }
                }
            }
            if h[0].max(h[1]) <= 1e-6 {
                return best.0;
            }
            for d in 0..2 {
                lo[d] = (best.1[d] - 50.0 * h[d]).max(bounds[d].0);
                hi[d] = (best.1[d] + 50.0 * h[d]).min(bounds[d].1);
            }
        }
    }

    #[test]
    fn two_dimensional_optima_agree_with_grid_oracle() {
        for name in ["disk2d", "wedge2d"] {
            let p = builtin(name).unwrap();
            let grid = grid_refined_minimum(&p);
            assert!((grid - p.f_star().unwrap()).abs() < 1e-5, "{name}: grid {grid} vs {}", p.f_star().unwrap());
        }
    }
}
