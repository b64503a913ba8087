//! Recovery quality: Monte Carlo total-variation distance between simplices,
//! vertex matching, homothety sandwich bounds, the coupon-collector count and
//! the boosting selection rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assignment::bottleneck_assignment;
use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::sampling::{PointSource, SimplexSampler};

/// Points per membership batch in the TV estimator.
const TV_BATCH: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub mc_points: usize,
    /// `sqrt(v (1 - v) / mc_points)`.
    pub std_error: f64,
}

fn check_pair(k: &Simplex, l: &Simplex) -> Result<()> {
    if k.ambient_dim() != l.ambient_dim() || k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.ambient_dim(),
            actual: l.ambient_dim(),
        });
    }
    if !k.is_full_dimensional() {
        return Err(Error::DegenerateSimplex(
            "total variation needs full-dimensional simplices".into(),
        ));
    }
    Ok(())
}

/// Estimates `d_TV(K, L) = vol(K \ L) / vol(K)` where `K` is the larger of
/// the two, by sampling `K` uniformly and testing membership in the other.
pub fn tv_distance_mc(k: &Simplex, l: &Simplex, mc_points: usize, seed: u64) -> Result<TvEstimate> {
    check_pair(k, l)?;
    if mc_points == 0 {
        return Err(Error::InvalidArgument("mc_points must be at least 1".into()));
    }
    let (big, small) = if k.volume() >= l.volume() { (k, l) } else { (l, k) };
    let sampler = SimplexSampler::new(big.clone(), seed);
    let membership = small.membership()?;
    let mut outside = 0usize;
    let mut start = 0usize;
    while start < mc_points {
        let count = TV_BATCH.min(mc_points - start);
        let points = sampler.points(start as u64, count)?;
        outside += membership
            .contains_rows(&points)?
            .iter()
            .filter(|&&inside| !inside)
            .count();
        start += count;
    }
    let value = outside as f64 / mc_points as f64;
    Ok(TvEstimate {
        value,
        mc_points,
        std_error: (value * (1.0 - value) / mc_points as f64).sqrt(),
    })
}

/// Largest `alpha` and smallest `beta` with
/// `c + alpha (K - c) ⊆ L ⊆ c + beta (K - c)`, from the barycentric
/// coordinates of `c` and of the vertices. `c` must be interior to both.
pub fn homothety_bounds(k: &Simplex, l: &Simplex, center: &DVector<f64>) -> Result<(f64, f64)> {
    check_pair(k, l)?;
    let mk = k.membership()?;
    let ml = l.membership()?;
    let ck = mk.barycentric(center)?;
    let cl = ml.barycentric(center)?;
    if ck.min() <= 0.0 || cl.min() <= 0.0 {
        return Err(Error::Containment("center must be interior to both simplices".into()));
    }
    let mut alpha = f64::INFINITY;
    for v in k.vertices() {
        let lv = ml.barycentric(&v)?;
        for j in 0..lv.len() {
            let drop = cl[j] - lv[j];
            if drop > 0.0 {
                alpha = alpha.min(cl[j] / drop);
            }
        }
    }
    let mut beta: f64 = 0.0;
    for w in l.vertices() {
        let kw = mk.barycentric(&w)?;
        for j in 0..kw.len() {
            let drop = ck[j] - kw[j];
            if drop > 0.0 {
                beta = beta.max(drop / ck[j]);
            }
        }
    }
    Ok((alpha, beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    /// `2 (1 - (alpha / beta)^n)`.
    pub bound: f64,
    pub estimate: TvEstimate,
    pub holds: bool,
}

/// Checks `d_TV(K, L) <= 2 (1 - (alpha/beta)^n)` given
/// `c + alpha (K - c) ⊆ L ⊆ c + beta (K - c)`. The containments are verified
/// on vertices first; the comparison allows three standard errors.
pub fn check_sandwich_bound(
    k: &Simplex,
    l: &Simplex,
    alpha: f64,
    beta: f64,
    center: &DVector<f64>,
    mc_points: usize,
    seed: u64,
) -> Result<SandwichCheck> {
    check_pair(k, l)?;
    if !(alpha > 0.0 && alpha <= 1.0 && beta >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha <= 1 <= beta, got alpha={alpha}, beta={beta}"
        )));
    }
    let inner = k.scaled_about(center, alpha)?;
    let outer = k.scaled_about(center, beta)?;
    let ml = l.membership()?;
    for v in inner.vertices() {
        if !ml.contains(&v)? {
            return Err(Error::Containment("alpha K is not inside L".into()));
        }
    }
    let mo = outer.membership()?;
    for v in l.vertices() {
        if !mo.contains(&v)? {
            return Err(Error::Containment("L is not inside beta K".into()));
        }
    }
    let bound = 2.0 * (1.0 - (alpha / beta).powi(k.dim() as i32));
    let estimate = tv_distance_mc(k, l, mc_points, seed)?;
    Ok(SandwichCheck {
        bound,
        estimate,
        holds: estimate.value <= bound + 3.0 * estimate.std_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    /// `permutation[i]` is the estimated vertex matched to true vertex `i`.
    pub permutation: Vec<usize>,
    pub per_vertex_error: Vec<f64>,
    pub max_error: f64,
}

/// Bijection between vertex sets minimizing the largest Euclidean error.
pub fn match_vertices(truth: &Simplex, est: &Simplex) -> Result<MatchingResult> {
    let a: Vec<DVector<f64>> = truth.vertices().collect();
    let b: Vec<DVector<f64>> = est.vertices().collect();
    match_points(&a, &b)
}

/// As [`match_vertices`] for bare point lists of equal length.
pub fn match_points(truth: &[DVector<f64>], est: &[DVector<f64>]) -> Result<MatchingResult> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: est.len(),
        });
    }
    if let (Some(a), Some(b)) = (truth.first(), est.first()) {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
    }
    let k = truth.len();
    let cost = DMatrix::from_fn(k, k, |i, j| (&truth[i] - &est[j]).norm());
    let permutation = bottleneck_assignment(&cost);
    let per_vertex_error: Vec<f64> = permutation.iter().enumerate().map(|(i, &j)| cost[(i, j)]).collect();
    let max_error = per_vertex_error.iter().copied().fold(0.0, f64::max);
    Ok(MatchingResult {
        permutation,
        per_vertex_error,
        max_error,
    })
}

/// Trials after which `n_coupons` coupons, each drawn with probability at
/// least `alpha`, have all been seen with probability `1 - delta`:
/// `ceil(alpha^-1 (ln n + ln 1/delta))`, at least 1.
pub fn coupon_trials_bound(n_coupons: usize, alpha: f64, delta: f64) -> Result<usize> {
    if n_coupons == 0 || !(alpha > 0.0 && alpha <= 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need n >= 1, 0 < alpha <= 1, 0 < delta < 1 (got {n_coupons}, {alpha}, {delta})"
        )));
    }
    let raw = ((n_coupons as f64).ln() + (1.0 / delta).ln()) / alpha;
    // Guard against 46.0000000001-style rounding of exact products.
    Ok((raw - 1e-12).ceil().max(1.0) as usize)
}

/// Monte Carlo points per pairwise distance so that every one of `pairs`
/// estimates is within `accuracy` with probability `1 - delta` (Hoeffding
/// plus a union bound).
pub fn hoeffding_points(accuracy: f64, delta: f64, pairs: usize) -> Result<usize> {
    if !(accuracy > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("need accuracy > 0 and 0 < delta < 1".into()));
    }
    let pairs = pairs.max(1) as f64;
    Ok(((2.0 * pairs / delta).ln() / (2.0 * accuracy * accuracy)).ceil() as usize)
}

/// Neighbourhood radius used for selection, `(2 + 1/10) eps'`.
pub fn boost_radius(eps_prime: f64) -> f64 {
    2.1 * eps_prime
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostSelection {
    pub index: usize,
    /// Runs (including the selected one) within the radius of the selection.
    pub neighbours: usize,
    /// Minimum neighbour count a run needed to qualify.
    pub required: usize,
    pub neighbour_counts: Vec<usize>,
}

/// Selects a run with many runs nearby: a run qualifies when at least
/// `floor(2t/3)` runs, itself included, lie within `2.1 eps'` under
/// `distance`. Among qualifying runs the one with most neighbours wins,
/// ties going to the lowest index.
pub fn boost<T, F>(runs: &[T], eps_prime: f64, distance: F) -> Result<BoostSelection>
where
    F: Fn(&T, &T) -> Result<f64>,
{
    if runs.len() < 3 {
        return Err(Error::InvalidArgument("boosting needs at least 3 runs".into()));
    }
    if !(eps_prime > 0.0) {
        return Err(Error::InvalidArgument("eps_prime must be positive".into()));
    }
    let t = runs.len();
    let radius = boost_radius(eps_prime);
    let mut counts = vec![1usize; t];
    for i in 0..t {
        for j in i + 1..t {
            if distance(&runs[i], &runs[j])? <= radius {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    let required = 2 * t / 3;
    let best = (0..t)
        .filter(|&i| counts[i] >= required)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
    match best {
        Some(index) => Ok(BoostSelection {
            index,
            neighbours: counts[index],
            required,
            neighbour_counts: counts,
        }),
        None => Err(Error::BoostFailure {
            threshold: radius,
            needed: required,
            best: counts.iter().copied().max().unwrap_or(0),
        }),
    }
}

/// [`boost`] over learned simplices with Monte Carlo TV distances, each
/// estimated to within `eps'/10` with overall confidence `1 - delta/2`.
pub fn boost_simplices(runs: &[Simplex], eps_prime: f64, delta: f64, seed: u64) -> Result<BoostSelection> {
    let t = runs.len();
    let points = hoeffding_points(eps_prime / 10.0, delta / 2.0, t * t.saturating_sub(1) / 2)?;
    boost(runs, eps_prime, |a, b| Ok(tv_distance_mc(a, b, points, seed)?.value))
}
