//! Poll directions, mesh snapping, and poll-set construction.
//!
//! The primary frame center is polled along the `2n` columns of a Householder
//! matrix `H = I - 2 v v^T` (and their negatives), snapped to the mesh. The
//! secondary center, if any, gets one snapped direction and its negative.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{DesignPoint, MeshState};

/// Largest column ∞-norm of `D = [I, -I]`.
pub const B: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    Maximal2n,
    TwoOpposite,
}

/// Integer mesh directions; trial points are `center + delta_m * d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionSet {
    pub directions: Vec<Vec<i64>>,
    pub kind: BasisKind,
}

/// Which incumbent a frame is centred on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Infeasible,
    Feasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PollCandidate {
    pub frame: Frame,
    pub point: DesignPoint,
}

/// The `n` columns of `I - 2 v v^T`, followed by their negatives.
pub fn householder_directions(v: &[f64]) -> Result<Vec<Vec<f64>>> {
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    if v.is_empty() || !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(Error::InvalidConfig("Householder vector must be finite and nonzero".into()));
    }
    let n = v.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j] / norm2).collect())
        .collect();
    let negatives: Vec<Vec<f64>> = columns.iter().map(|c| c.iter().map(|x| -x).collect()).collect();
    Ok(columns.into_iter().chain(negatives).collect())
}

/// A seeded random unit vector for iteration `k`; `subkey` separates frames.
pub fn random_unit_vector(seed: u64, k: u64, subkey: u64, n: usize) -> Vec<f64> {
    let mut stream = rng::stream(seed, rng::stream_key(&[rng::DIRECTION_DOMAIN, k, subkey]));
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut stream)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Integer mesh direction `d` approximating `dir`, with `delta_m * ||d||_inf <= delta_p * b`.
///
/// `dir` is scaled so its ∞-norm is `delta_p / delta_m`, rounded half away
/// from zero, and clamped to `floor(delta_p / delta_m * b)`. The largest
/// component always survives, so `d` is never zero.
pub fn snap_to_mesh(dir: &[f64], delta_p: f64, delta_m: f64) -> Vec<i64> {
    let inf = dir.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!(inf > 0.0 && inf.is_finite(), "cannot snap a zero or non-finite direction");
    let ratio = delta_p / delta_m;
    let limit = ((ratio * B).floor() as i64).max(1);
    dir.iter().map(|x| ((x / inf * ratio).round() as i64).clamp(-limit, limit)).collect()
}

/// Rank of an integer matrix given as rows, by elimination with partial pivoting.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = scale * 1e-9;
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..a.len()).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else { break };
        if a[pivot][c].abs() <= tol {
            continue;
        }
        a.swap(r, pivot);
        for i in r + 1..a.len() {
            let factor = a[i][c] / a[r][c];
            let (top, bottom) = a.split_at_mut(i);
            for (x, p) in bottom[0][c..].iter_mut().zip(&top[r][c..]) {
                *x -= factor * p;
            }
        }
        r += 1;
    }
    r
}

fn coordinate_directions(n: usize, length: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(2 * n);
    for sign in [1, -1] {
        for i in 0..n {
            let mut d = vec![0; n];
            d[i] = sign * length;
            out.push(d);
        }
    }
    out
}

impl DirectionSet {
    /// Snapped Householder basis `{d_1..d_n, -d_1..-d_n}` for unit vector `v`.
    ///
    /// Falls back to the ± coordinate directions if snapping collapses the
    /// basis to rank below `n`.
    pub fn maximal(v: &[f64], mesh: &MeshState) -> Result<Self> {
        let (dp, dm) = (mesh.delta_p(), mesh.delta_m());
        let n = v.len();
        let real = householder_directions(v)?;
        let positive: Vec<Vec<i64>> = real[..n].iter().map(|d| snap_to_mesh(d, dp, dm)).collect();
        let directions = if rank(&positive) == n {
            let negatives: Vec<Vec<i64>> = positive.iter().map(|d| d.iter().map(|x| -x).collect()).collect();
            positive.into_iter().chain(negatives).collect()
        } else {
            log::debug!("snapped basis is rank deficient; using coordinate directions");
            let length = positive[0].iter().map(|x| x.abs()).max().unwrap_or(1);
            coordinate_directions(n, length)
        };
        Ok(Self { directions, kind: BasisKind::Maximal2n })
    }

    /// `{d, -d}` from the first snapped Householder column of `v`.
    pub fn two_opposite(v: &[f64], mesh: &MeshState) -> Result<Self> {
        let real = householder_directions(v)?;
        let d = snap_to_mesh(&real[0], mesh.delta_p(), mesh.delta_m());
        let neg = d.iter().map(|x| -x).collect();
        Ok(Self { directions: vec![d, neg], kind: BasisKind::TwoOpposite })
    }
}

/// Inputs that fix the directions of one iteration.
#[derive(Clone, Copy, Debug)]
pub struct PollContext<'a> {
    pub seed: u64,
    pub k: u64,
    pub mesh: &'a MeshState,
    pub full_secondary: bool,
}

/// Trial points around the primary (and optional secondary) center.
///
/// Points rejected by `in_x` are dropped, as are repeats of an earlier point.
/// The rest are ordered by ascending last-known `u` (points never estimated go
/// last), ties kept in generation order.
pub fn build_poll_set(
    primary: (&DesignPoint, Frame),
    secondary: Option<(&DesignPoint, Frame)>,
    ctx: PollContext<'_>,
    in_x: impl Fn(&[f64]) -> bool,
    last_u: impl Fn(&DesignPoint) -> Option<f64>,
) -> Result<Vec<PollCandidate>> {
    let n = primary.0.dim();
    let mesh = ctx.mesh;
    let mut frames = vec![(primary, DirectionSet::maximal(&random_unit_vector(ctx.seed, ctx.k, 0, n), mesh)?)];
    if let Some(sec) = secondary {
        let v = random_unit_vector(ctx.seed, ctx.k, 1, n);
        let set = if ctx.full_secondary { DirectionSet::maximal(&v, mesh)? } else { DirectionSet::two_opposite(&v, mesh)? };
        frames.push((sec, set));
    }

    let dm = mesh.delta_m();
    let mut seen = std::collections::HashSet::new();
    let mut candidates = Vec::new();
    for ((center, frame), set) in frames {
        for d in &set.directions {
            let point = center.offset(dm, d);
            if in_x(point.coords()) && seen.insert(point.clone()) {
                candidates.push(PollCandidate { frame, point });
            }
        }
    }
    let mut keyed: Vec<(Option<f64>, PollCandidate)> = candidates.into_iter().map(|c| (last_u(&c.point), c)).collect();
    keyed.sort_by(|(a, _), (b, _)| match (a, b) {
        (Some(a), Some(b)) => a.total_cmp(b),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(keyed.into_iter().map(|(_, c)| c).collect())
}
