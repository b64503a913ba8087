//! Independent component analysis and the reductions of simplex and `l_p`
//! ball learning to it.
//!
//! The ICA routine whitens with the empirical covariance and then extracts
//! one direction at a time by a fixed point on the third cumulant,
//! `w <- E[z (w.z)^2]`, switching to the fourth cumulant,
//! `w <- E[z (w.z)^3] - 3w`, when a direction has negligible skewness.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assignment::greedy_signed_permutation;
use crate::error::{Error, Result};
use crate::sampling::{check_exponent, scale_rows, substream, LpBallSampler, PointSource, SampleMatrix};
use crate::vertex_finder::random_unit;

pub const PERMUTATION_NOTE: &str = "columns of the mixing estimate are determined only up to order and sign";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcaConfig {
    pub max_sweeps: usize,
    /// Stop when `1 - |w_new . w|` falls to this.
    pub tolerance: f64,
    /// Minimum `|E y^3|` for keeping a third-cumulant direction.
    pub skew_threshold: f64,
    pub seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        IcaConfig {
            max_sweeps: 500,
            tolerance: 1e-8,
            skew_threshold: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    Skewness,
    Kurtosis,
    /// Last direction, the orthogonal complement of the others.
    Complement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    /// `M`: `M (y - mean)` is white with independent coordinates.
    pub separating: DMatrix<f64>,
    /// `M^{-1}`.
    pub mixing: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub contrasts: Vec<Contrast>,
    pub converged: bool,
    pub permutation_note: String,
}

/// Symmetric whitening matrix `W` with `W C W^T = I`.
fn whitening(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > 1e-12 * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularMatrix("empirical covariance is singular".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(inv_sqrt * eig.eigenvectors.transpose())
}

fn mean_and_centered(points: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let d = points.ncols();
    let mean = DVector::from_fn(d, |j, _| points.column(j).mean());
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    (mean, centered)
}

fn orthonormalize(w: &mut DVector<f64>, found: &[DVector<f64>]) {
    for f in found {
        let c = w.dot(f);
        w.axpy(-c, f, 1.0);
    }
    let norm = w.norm();
    if norm > 0.0 {
        *w /= norm;
    }
}

fn fixed_point(
    z: &DMatrix<f64>,
    start: &DVector<f64>,
    found: &[DVector<f64>],
    contrast: Contrast,
    config: &IcaConfig,
) -> (DVector<f64>, bool) {
    let t = z.nrows() as f64;
    let mut w = start.clone();
    orthonormalize(&mut w, found);
    if contrast == Contrast::Complement {
        return (w, true);
    }
    for _ in 0..config.max_sweeps {
        let y = z * &w;
        let mut next = match contrast {
            Contrast::Skewness | Contrast::Complement => z.tr_mul(&y.map(|v| v * v)) / t,
            Contrast::Kurtosis => z.tr_mul(&y.map(|v| v * v * v)) / t - &w * 3.0,
        };
        orthonormalize(&mut next, found);
        if next.norm() == 0.0 {
            return (w, false);
        }
        let change = 1.0 - next.dot(&w).abs();
        w = next;
        if change <= config.tolerance {
            return (w, true);
        }
    }
    (w, false)
}

/// Estimates a separating matrix from points `y = A x + b`, one per row.
pub fn ica_estimate(points: &DMatrix<f64>, config: &IcaConfig) -> Result<MixingEstimate> {
    let (t, d) = points.shape();
    if t <= d {
        return Err(Error::DegenerateSample(format!("ICA needs more than {d} points")));
    }
    let (mean, centered) = mean_and_centered(points);
    let cov = centered.tr_mul(&centered) / t as f64;
    let white = whitening(&cov)?;
    let z = centered * white.transpose();
    let mut found: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut contrasts = Vec::with_capacity(d);
    let mut converged = true;
    for k in 0..d {
        let mut rng = substream(config.seed, k as u64);
        let start = random_unit(d, &mut rng);
        let (w, contrast) = if k + 1 == d {
            (
                fixed_point(&z, &start, &found, Contrast::Complement, config).0,
                Contrast::Complement,
            )
        } else {
            let (w, ok) = fixed_point(&z, &start, &found, Contrast::Skewness, config);
            let skew = (&z * &w).map(|v| v * v * v).mean();
            if skew.abs() >= config.skew_threshold {
                converged &= ok;
                (w, Contrast::Skewness)
            } else {
                let (w, ok) = fixed_point(&z, &start, &found, Contrast::Kurtosis, config);
                converged &= ok;
                (w, Contrast::Kurtosis)
            }
        };
        found.push(w);
        contrasts.push(contrast);
    }
    let rotation = DMatrix::from_fn(d, d, |i, j| found[i][j]);
    let separating = rotation * white;
    let mixing = separating
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("separating matrix is singular".into()))?;
    Ok(MixingEstimate {
        separating,
        mixing,
        mean,
        contrasts,
        converged,
        permutation_note: PERMUTATION_NOTE.to_string(),
    })
}

/// Normalized Amari index of `P`: 0 exactly for scaled permutations, at most 1.
pub fn amari_index(p: &DMatrix<f64>) -> f64 {
    let d = p.nrows();
    if d < 2 {
        return 0.0;
    }
    let a = p.abs();
    let mut total = 0.0;
    for i in 0..d {
        let row = a.row(i);
        total += row.sum() / row.max() - 1.0;
        let col = a.column(i);
        total += col.sum() / col.max() - 1.0;
    }
    total / (2.0 * d as f64 * (d as f64 - 1.0))
}

/// Largest entrywise deviation of `P` from the signed permutation picked by
/// greedy max-`|entry|` alignment.
pub fn signed_permutation_error(p: &DMatrix<f64>) -> f64 {
    let (cols, signs) = greedy_signed_permutation(p);
    let mut target = DMatrix::zeros(p.nrows(), p.ncols());
    for (r, (&c, &s)) in cols.iter().zip(&signs).enumerate() {
        target[(r, c)] = s;
    }
    (p - target).amax()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexReduction {
    /// Recovered vertices, one per ICA component, in component order.
    pub vertices: Vec<DVector<f64>>,
    pub estimate: MixingEstimate,
}

/// Recovers the vertices of a simplex from uniform points in it.
///
/// Appending a coordinate 1 gives `p' = V' l` with `V'` the vertex matrix
/// over a row of ones and `l` uniform on the standard simplex. Scaling by
/// `Gamma(n+1, 1)` makes the weights iid `Exp(1)`, so ICA recovers `V'` up
/// to column order and sign; the sign is fixed by the row of ones.
pub fn reduce_simplex_to_ica(sample: &SampleMatrix, seed: u64, config: &IcaConfig) -> Result<SimplexReduction> {
    let n = sample.dim();
    let t = sample.len();
    let mut lifted = DMatrix::from_element(t, n + 1, 1.0);
    lifted.view_mut((0, 0), (t, n)).copy_from(&sample.points);
    let scaled = scale_rows(&lifted, seed, n as f64 + 1.0, 1.0);
    let estimate = ica_estimate(&scaled, config)?;
    let vertices = estimate
        .mixing
        .column_iter()
        .map(|col| {
            let sign = if col[n] < 0.0 { -1.0 } else { 1.0 };
            col.rows(0, n) * sign
        })
        .collect();
    Ok(SimplexReduction { vertices, estimate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyConstant {
    pub p: f64,
    pub n: usize,
    /// `sqrt(E X_1^2)` for `X` uniform in the unit `l_p` ball.
    pub c_pn: f64,
    pub std_error: f64,
    pub mc_points: usize,
}

/// Monte Carlo `c_{p,n}` with at least `10^6` points, averaging `X_i^2`
/// over all coordinates, doubling the sample until the relative standard
/// error is at most `1e-3`.
pub fn compute_c_pn(p: f64, n: usize) -> Result<IsotropyConstant> {
    check_exponent(p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let seed = p.to_bits() ^ (n as u64).rotate_left(32);
    let sampler = LpBallSampler::new(DMatrix::identity(n, n), p, seed)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut drawn = 0usize;
    let mut target = 1_000_000usize;
    const BATCH: usize = 1 << 17;
    loop {
        while drawn < target {
            let count = BATCH.min(target - drawn);
            let pts = sampler.points(drawn as u64, count)?;
            for row in pts.row_iter() {
                let v = row.norm_squared() / n as f64;
                sum += v;
                sum_sq += v * v;
            }
            drawn += count;
        }
        let mean = sum / drawn as f64;
        let var = (sum_sq / drawn as f64 - mean * mean).max(0.0);
        let se_sq = (var / drawn as f64).sqrt();
        let c = mean.sqrt();
        let se = se_sq / (2.0 * c);
        if se / c <= 1e-3 || drawn >= 1 << 26 {
            return Ok(IsotropyConstant {
                p,
                n,
                c_pn: c,
                std_error: se,
                mc_points: drawn,
            });
        }
        target *= 2;
    }
}

/// [`compute_c_pn`] memoized in a JSON file keyed by `"p,n"`.
pub fn compute_c_pn_cached(p: f64, n: usize, cache: &Path) -> Result<IsotropyConstant> {
    let mut table: BTreeMap<String, IsotropyConstant> = match fs::read_to_string(cache) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
        Err(e) => return Err(e.into()),
    };
    let key = format!("{p},{n}");
    if let Some(hit) = table.get(&key) {
        return Ok(*hit);
    }
    let value = compute_c_pn(p, n)?;
    table.insert(key, value);
    if let Some(parent) = cache.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(cache, serde_json::to_string_pretty(&table)?)?;
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpReduction {
    /// `A~` with `A~ B_p^n` approximating the input body.
    pub mixing: DMatrix<f64>,
    pub estimate: MixingEstimate,
    pub c_pn: IsotropyConstant,
}

/// Recovers `A` (up to signed permutation of columns) from uniform points in
/// `A B_p^n`.
///
/// Scaling by `Gamma(n/p + 1, 1)^{1/p}` turns the points into `A g` with `g`
/// iid of density proportional to `exp(-|t|^p)`, which ICA separates. The
/// rows of the separating matrix are then rescaled so that it whitens the
/// unscaled sample, whose covariance is `c_{p,n}^2 A A^T`, and
/// `A~ = c_{p,n}^{-1} M^{-1}`.
pub fn reduce_lp_to_ica(sample: &SampleMatrix, p: f64, seed: u64, config: &IcaConfig) -> Result<LpReduction> {
    let c_pn = compute_c_pn(p, sample.dim())?;
    reduce_lp_with_constant(sample, p, seed, config, c_pn)
}

/// As [`reduce_lp_to_ica`] with a precomputed isotropy constant.
pub fn reduce_lp_with_constant(
    sample: &SampleMatrix,
    p: f64,
    seed: u64,
    config: &IcaConfig,
    c_pn: IsotropyConstant,
) -> Result<LpReduction> {
    check_exponent(p)?;
    let n = sample.dim();
    if c_pn.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: c_pn.n,
        });
    }
    let scaled = scale_rows(&sample.points, seed, n as f64 / p + 1.0, 1.0 / p);
    let mut estimate = ica_estimate(&scaled, config)?;
    let (_, centered) = mean_and_centered(&sample.points);
    let projected = &centered * estimate.separating.transpose();
    for k in 0..n {
        let sd = projected.column(k).norm() / (sample.len() as f64).sqrt();
        let mut row = estimate.separating.row_mut(k);
        row /= sd;
    }
    estimate.mixing = estimate
        .separating
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("separating matrix is singular".into()))?;
    let mixing = &estimate.mixing / c_pn.c_pn;
    Ok(LpReduction { mixing, estimate, c_pn })
}

/// `||x||_p`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifference {
    /// `vol(K Δ L) / vol(K)` for `K = A B_p`, `L = A~ B_p`.
    pub ratio: f64,
    pub std_error: f64,
    pub mc_points: usize,
}

/// Monte Carlo `vol(A B_p Δ A~ B_p) / vol(A B_p)`: the part of each body
/// outside the other, sampled from that body, with the second part scaled by
/// the volume ratio `|det A~| / |det A|`.
pub fn lp_symmetric_difference(
    a: &DMatrix<f64>,
    a_est: &DMatrix<f64>,
    p: f64,
    mc_points: usize,
    seed: u64,
) -> Result<SymmetricDifference> {
    check_exponent(p)?;
    if a.shape() != a_est.shape() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: a_est.nrows(),
        });
    }
    if mc_points == 0 {
        return Err(Error::InvalidArgument("mc_points must be at least 1".into()));
    }
    let inv = |m: &DMatrix<f64>| {
        m.clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("body matrix is singular".into()))
    };
    let (a_inv, est_inv) = (inv(a)?, inv(a_est)?);
    let outside_fraction = |body: &DMatrix<f64>, other_inv: &DMatrix<f64>, stream: u64| -> Result<f64> {
        let sampler = LpBallSampler::new(body.clone(), p, crate::sampling::substream_seed(seed, stream))?;
        let pts = sampler.points(0, mc_points)?;
        let pulled = pts * other_inv.transpose();
        let outside = pulled
            .row_iter()
            .filter(|r| r.iter().map(|v| v.abs().powf(p)).sum::<f64>() > 1.0)
            .count();
        Ok(outside as f64 / mc_points as f64)
    };
    let f1 = outside_fraction(a, &est_inv, 0)?;
    let f2 = outside_fraction(a_est, &a_inv, 1)?;
    let vol_ratio = (a_est.determinant() / a.determinant()).abs();
    let m = mc_points as f64;
    let var = f1 * (1.0 - f1) / m + vol_ratio * vol_ratio * f2 * (1.0 - f2) / m;
    Ok(SymmetricDifference {
        ratio: f1 + vol_ratio * f2,
        std_error: var.sqrt(),
        mc_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    fn exp_sources(t: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(t, d, |_, _| {
            let e: f64 = Exp1.sample(&mut rng);
            e - 1.0
        })
    }

    #[test]
    fn identity_mixing_of_exponential_sources() {
        let x = exp_sources(100_000, 3, 1);
        let est = ica_estimate(&x, &IcaConfig::default()).unwrap();
        assert!(signed_permutation_error(&est.separating) <= 0.1);
        assert!(est.converged);
        let (_, c) = mean_and_centered(&x);
        let w = c * est.separating.transpose();
        let cov = w.tr_mul(&w) / 100_000.0;
        assert!((cov - DMatrix::<f64>::identity(3, 3)).amax() <= 0.05);
    }

    #[test]
    fn amari_index_of_permutations() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, -2.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(amari_index(&p), 0.0);
        assert!(amari_index(&DMatrix::from_element(3, 3, 1.0)) > 0.99);
    }

    #[test]
    fn symmetric_difference_of_identical_bodies_is_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let s = lp_symmetric_difference(&a, &a, 1.0, 10_000, 3).unwrap();
        assert_eq!(s.ratio, 0.0);
        // A signed column permutation describes the same body.
        let swapped = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 1.0, 0.0]);
        let s = lp_symmetric_difference(&a, &swapped, 1.0, 10_000, 3).unwrap();
        assert!(s.ratio <= 1e-12);
        // Two diamonds of area 4 overlapping in area 8/3.
        let rotated = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let s = lp_symmetric_difference(&a, &rotated, 1.0, 100_000, 3).unwrap();
        assert!((s.ratio - 2.0 / 3.0).abs() <= 3.0 * s.std_error + 1e-3, "{s:?}");
    }

    #[test]
    fn c_pn_for_disk() {
        let c = compute_c_pn(2.0, 2).unwrap();
        assert!((c.c_pn - 0.5).abs() <= 3.0 * c.std_error, "{c:?}");
        assert!(c.std_error / c.c_pn <= 1e-3);
        assert!(compute_c_pn(0.5, 2).is_err());
    }

    #[test]
    fn c_pn_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let a = compute_c_pn_cached(3.0, 1, &path).unwrap();
        let b = compute_c_pn_cached(3.0, 1, &path).unwrap();
        assert_eq!(a, b);
        assert!(fs::read_to_string(&path).unwrap().contains("\"3,1\""));
    }
}
