//! Third moments of the standard simplex.
//!
//! For `X` uniform on the standard n-simplex in `R^{n+1}`,
//! `E[(u . X)^3] = (p1^3 + 3 p1 p2 + 2 p3) / ((n+1)(n+2)(n+3))`, where `p_d`
//! are power sums of the coordinates of `u`. This module evaluates that
//! closed form and its gradient, the matching sample estimators, and a
//! numerical certificate that the normalized vertices are exactly the local
//! maxima of the third moment on the sphere.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{isotropic_simplex, make_embed_map};
use crate::sampling::{substream, SampleMatrix};

/// Power sums `p1, p2, p3` and complete homogeneous polynomials `h2, h3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPolyValue {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub h2: f64,
    pub h3: f64,
}

/// Power sums of `u`, with `h2`, `h3` from the Newton-type identities
/// `2 h2 = p1^2 + p2` and `3 h3 = h2 p1 + h1 p2 + p3`.
pub fn power_sums(u: &DVector<f64>) -> SymmetricPolyValue {
    let (mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0);
    for &x in u.iter() {
        let x2 = x * x;
        p1 += x;
        p2 += x2;
        p3 += x2 * x;
    }
    let h2 = (p1 * p1 + p2) / 2.0;
    let h3 = (h2 * p1 + p1 * p2 + p3) / 3.0;
    SymmetricPolyValue { p1, p2, p3, h2, h3 }
}

/// `C = d (d+1) (d+2) / 6` for vectors of length `d`; for the standard
/// n-simplex (`d = n + 1`) this is `(n+1)(n+2)(n+3)/6`.
pub fn moment_constant(len: usize) -> f64 {
    let d = len as f64;
    d * (d + 1.0) * (d + 2.0) / 6.0
}

/// Exact third moment of `u . X` over the standard simplex in `R^{len(u)}`.
pub fn exact_m3(u: &DVector<f64>) -> f64 {
    let s = power_sums(u);
    (s.p1.powi(3) + 3.0 * s.p1 * s.p2 + 2.0 * s.p3) / (6.0 * moment_constant(u.len()))
}

/// `grad m3(u) = (3 p1^2 1 + 3 p2 1 + 6 p1 u + 6 u^(2)) / (6 C)`.
pub fn exact_grad_m3(u: &DVector<f64>) -> DVector<f64> {
    let s = power_sums(u);
    let c6 = 6.0 * moment_constant(u.len());
    let constant = 3.0 * s.p1 * s.p1 + 3.0 * s.p2;
    u.map(|x| (constant + 6.0 * s.p1 * x + 6.0 * x * x) / c6)
}

/// A third-moment value with its gradient. `sample_size == 0` marks the
/// exact closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub direction: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub sample_size: usize,
}

impl MomentEstimate {
    pub fn exact(u: &DVector<f64>) -> Self {
        MomentEstimate {
            direction: u.clone(),
            value: exact_m3(u),
            gradient: exact_grad_m3(u),
            sample_size: 0,
        }
    }
}

/// Sample third moment `(1/t) sum (u . r_i)^3` and its gradient
/// `(3/t) sum (u . r_i)^2 r_i` over the rows of `points`.
pub fn sample_m3_and_gradient(points: &nalgebra::DMatrix<f64>, u: &DVector<f64>) -> (f64, DVector<f64>) {
    let t = points.nrows() as f64;
    let proj = points * u;
    let sq = proj.map(|x| x * x);
    let value = sq.dot(&proj) / t;
    let gradient = points.tr_mul(&sq) * (3.0 / t);
    (value, gradient)
}

pub fn empirical_m3_grad(sample: &SampleMatrix, u: &DVector<f64>) -> Result<MomentEstimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.dim() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            actual: u.len(),
        });
    }
    let (value, gradient) = sample_m3_and_gradient(&sample.points, u);
    Ok(MomentEstimate {
        direction: u.clone(),
        value,
        gradient,
        sample_size: sample.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub trials: usize,
    pub perturbation: f64,
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            trials: 200,
            perturbation: 1e-3,
            gradient_tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexCheck {
    pub vertex: usize,
    pub objective: f64,
    pub projected_gradient_norm: f64,
    pub trials: usize,
    pub strict_decreases: usize,
    /// Largest objective among the perturbed directions.
    pub best_perturbed_objective: f64,
    pub pass: bool,
}

/// Second-order check at a two-valued critical point with `alpha` copies of
/// `a > 0` and `beta` copies of `b < 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleCheck {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub first_order_residual: f64,
    /// `z^T H z` for the unit tangent `z = (1, -1, 0, ...)/sqrt(2)`, which
    /// equals `2a - lambda2`.
    pub curvature: f64,
    /// `1 / sqrt((n+1) gamma (1 - gamma))`.
    pub closed_form: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaMinimumCheck {
    pub argmin: f64,
    pub minimum: f64,
    pub expected: f64,
    pub error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub n: usize,
    pub vertex_checks: Vec<VertexCheck>,
    pub saddle_checks: Vec<SaddleCheck>,
    pub gamma_minimum: GammaMinimumCheck,
    pub pass: bool,
}

/// Default-configured [`certify_landscape_with`].
pub fn certify_landscape(n: usize, trials: usize) -> Result<LandscapeReport> {
    certify_landscape_with(
        n,
        &LandscapeConfig {
            trials,
            ..LandscapeConfig::default()
        },
    )
}

/// Checks, on the exact polynomial, that the normalized vertices of the
/// isotropic n-simplex are critical and strict local maxima of
/// `F(u) = E[(u . X)^3]` on the sphere, and that every other two-valued
/// critical point has a direction of positive curvature.
pub fn certify_landscape_with(n: usize, config: &LandscapeConfig) -> Result<LandscapeReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("landscape certification needs n >= 2".into()));
    }
    let embed = make_embed_map(n)?;
    let iso = isotropic_simplex(n)?;
    let objective = |u: &DVector<f64>| exact_m3(&(&embed.basis * u)) / embed.scale.powi(3);
    let k = n + 1;
    let w = DVector::from_element(k, 1.0 / (k as f64).sqrt());

    let vertex_checks: Vec<VertexCheck> = (0..=n)
        .map(|i| {
            let u = iso.vertex(i).normalize();
            let v = &embed.basis * &u;
            let grad = v.map(|x| 3.0 * x * x);
            let projected = &grad - &v * v.dot(&grad) - &w * w.dot(&grad);
            let projected_gradient_norm = projected.norm();
            let base = objective(&u);

            let mut rng = substream(config.seed, i as u64);
            let mut strict_decreases = 0;
            let mut best = f64::NEG_INFINITY;
            for _ in 0..config.trials {
                let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let tangent = &g - &u * u.dot(&g);
                let z = tangent.normalize() * config.perturbation;
                let moved = (&u + z).normalize();
                let value = objective(&moved);
                best = best.max(value);
                if value < base {
                    strict_decreases += 1;
                }
            }
            VertexCheck {
                vertex: i,
                objective: base,
                projected_gradient_norm,
                trials: config.trials,
                strict_decreases,
                best_perturbed_objective: best,
                pass: projected_gradient_norm <= config.gradient_tolerance && strict_decreases == config.trials,
            }
        })
        .collect();

    let saddle_checks: Vec<SaddleCheck> = (2..=n).map(|alpha| saddle_check(n, alpha)).collect();
    let gamma_minimum = gamma_minimum_check(n);

    let pass = vertex_checks.iter().all(|c| c.pass) && saddle_checks.iter().all(|c| c.pass) && gamma_minimum.pass;
    Ok(LandscapeReport {
        n,
        vertex_checks,
        saddle_checks,
        gamma_minimum,
        pass,
    })
}

fn saddle_check(n: usize, alpha: usize) -> SaddleCheck {
    let k = n + 1;
    let kf = k as f64;
    let beta = k - alpha;
    let gamma = alpha as f64 / kf;
    let a = ((1.0 - gamma) / (gamma * kf)).sqrt();
    let b = -(gamma / ((1.0 - gamma) * kf)).sqrt();
    let v = DVector::from_fn(k, |i, _| if i < alpha { a } else { b });

    // Multipliers of v_i^2 = lambda1 + lambda2 v_i: dotting with v gives
    // lambda2 = p3(v); dotting with 1 gives lambda1 = 1/(n+1).
    let lambda2 = v.iter().map(|x| x.powi(3)).sum::<f64>();
    let lambda1 = 1.0 / kf;
    let first_order_residual = v
        .iter()
        .map(|&x| (x * x - lambda1 - lambda2 * x).abs())
        .fold(0.0, f64::max);

    let mut z = DVector::zeros(k);
    z[0] = std::f64::consts::FRAC_1_SQRT_2;
    z[1] = -std::f64::consts::FRAC_1_SQRT_2;
    let curvature: f64 = (0..k).map(|i| z[i] * z[i] * (2.0 * v[i] - lambda2)).sum();
    let closed_form = 1.0 / (kf * gamma * (1.0 - gamma)).sqrt();
    let feasible = v.sum().abs() <= 1e-12 && (v.norm() - 1.0).abs() <= 1e-12;
    SaddleCheck {
        alpha,
        beta,
        gamma,
        a,
        b,
        lambda1,
        lambda2,
        first_order_residual,
        curvature,
        closed_form,
        pass: feasible
            && first_order_residual <= 1e-12
            && curvature > 0.0
            && (curvature - closed_form).abs() <= 1e-10 * closed_form.max(1.0),
    }
}

/// Minimizes `gamma -> 1/sqrt((n+1) gamma (1-gamma))` on `(0, 1)` by
/// golden-section search and compares with `2/sqrt(n+1)`.
fn gamma_minimum_check(n: usize) -> GammaMinimumCheck {
    let kf = (n + 1) as f64;
    let f = |g: f64| 1.0 / (kf * g * (1.0 - g)).sqrt();
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let argmin = (lo + hi) / 2.0;
    let minimum = f(argmin);
    let expected = 2.0 / kf.sqrt();
    let error = (minimum - expected).abs();
    GammaMinimumCheck {
        argmin,
        minimum,
        expected,
        error,
        pass: error <= 1e-10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn power_sum_examples() {
        let e1 = v(&[1.0, 0.0, 0.0, 0.0]);
        let s = power_sums(&e1);
        assert_eq!((s.p1, s.p2, s.p3, s.h2, s.h3), (1.0, 1.0, 1.0, 1.0, 1.0));

        let s = power_sums(&v(&[1.0, 1.0]));
        assert_eq!((s.p1, s.p2, s.p3, s.h2, s.h3), (2.0, 2.0, 2.0, 3.0, 4.0));

        let s = power_sums(&v(&[1.0, -1.0]));
        assert_eq!((s.p1, s.p2, s.p3, s.h2, s.h3), (0.0, 2.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn exact_m3_examples() {
        assert_relative_eq!(exact_m3(&v(&[1.0, 0.0, 0.0])), 0.1, epsilon = 1e-15);
        for n in [1, 4, 9] {
            assert_relative_eq!(exact_m3(&DVector::from_element(n + 1, 1.0)), 1.0, epsilon = 1e-14);
        }
        assert_eq!(exact_m3(&v(&[1.0, -1.0, 0.0])), 0.0);
    }

    #[test]
    fn exact_gradient_examples() {
        assert_eq!(exact_grad_m3(&DVector::zeros(4)), DVector::zeros(4));
        let g = exact_grad_m3(&v(&[1.0, 0.0, 0.0]));
        assert_relative_eq!(g, v(&[0.3, 0.1, 0.1]), epsilon = 1e-15);
    }

    #[test]
    fn single_point_estimate() {
        let r = v(&[1.0, 0.5, 0.0]);
        let u = v(&[1.0, 2.0, 7.0]);
        assert_relative_eq!(u.dot(&r), 2.0);
        let sample = SampleMatrix::external(nalgebra::DMatrix::from_row_slice(1, 3, r.as_slice())).unwrap();
        let est = empirical_m3_grad(&sample, &u).unwrap();
        assert_relative_eq!(est.value, 8.0);
        assert_relative_eq!(est.gradient, r * 12.0);
        assert_eq!(est.sample_size, 1);
    }

    #[test]
    fn orthogonal_directions_reduce_to_cube_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let n = rng.random_range(1..30);
            let mut u = DVector::from_fn(n + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mean = u.mean();
            u.add_scalar_mut(-mean);
            let nf = n as f64;
            let expected = 2.0 * power_sums(&u).p3 / ((nf + 1.0) * (nf + 2.0) * (nf + 3.0));
            assert!((exact_m3(&u) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn landscape_small_n_passes() {
        let report = certify_landscape(3, 50).unwrap();
        assert!(report.pass, "{report:#?}");
        assert_eq!(report.vertex_checks.len(), 4);
        assert!(certify_landscape(1, 10).is_err());
    }

    #[test]
    fn saddle_curvature_n5_alpha2() {
        let c = saddle_check(5, 2);
        let gamma: f64 = 2.0 / 6.0;
        let expected = 1.0 / (6.0 * gamma * (1.0 - gamma)).sqrt();
        assert_relative_eq!(c.curvature, expected, epsilon = 1e-12);
        assert!(c.curvature > 0.0 && c.pass);
    }

    #[test]
    fn gamma_minimum_matches_closed_form() {
        for n in 2..=10 {
            let g = gamma_minimum_check(n);
            assert!(g.pass, "n={n}: {g:?}");
            assert!((g.argmin - 0.5).abs() < 1e-5);
        }
    }
}
