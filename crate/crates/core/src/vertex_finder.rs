//! Fixed-point iteration that finds one vertex of a rotated standard simplex.
//!
//! In the canonical frame the update
//! `u <- C grad m3(u) - (u.1)^2 1 / 2 - (u.u) 1 / 2 - (u.1) u`
//! equals the coordinate-wise square of `u`. Every term is built from inner
//! products with `u` and `1`, so the update can be evaluated in any frame
//! obtained by a rotation that fixes `1`, without knowing that rotation.
//! Normalizing after each step, the largest coordinate's lead over the rest
//! squares every iteration.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::format_f64_17;
use crate::moments::{exact_grad_m3, moment_constant, sample_m3_and_gradient};
use crate::sampling::{substream, PointSource};

/// Norm below which an update is treated as having collapsed to zero.
pub const COLLAPSE_NORM: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationConfig {
    /// Number of updates `r`.
    pub iterations: usize,
    /// Fresh points per gradient evaluation.
    pub sample_per_gradient: usize,
    pub seed: u64,
    #[serde(default)]
    pub record_trace: bool,
    #[serde(default = "default_tolerance")]
    pub convergence_tolerance: f64,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_restarts() -> usize {
    5
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            iterations: 30,
            sample_per_gradient: 50_000,
            seed: 0,
            record_trace: false,
            convergence_tolerance: default_tolerance(),
            max_restarts: default_restarts(),
        }
    }
}

impl IterationConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        IterationConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.sample_per_gradient == 0 {
            return Err(Error::InvalidArgument(
                "iterations and sample_per_gradient must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexResult {
    /// Unit vector approximating a vertex direction.
    pub u: DVector<f64>,
    /// `u(1), ..., u(r+1)` when tracing is enabled.
    pub trace: Option<Vec<DVector<f64>>>,
    pub converged: bool,
    pub restarts: usize,
}

impl VertexResult {
    /// Iterates as CSV: `step,u0,u1,...`.
    pub fn trace_csv(&self) -> Option<String> {
        let trace = self.trace.as_ref()?;
        let d = self.u.len();
        let mut out = String::from("step");
        for j in 0..d {
            let _ = write!(out, ",u{j}");
        }
        out.push('\n');
        for (step, u) in trace.iter().enumerate() {
            let _ = write!(out, "{step}");
            for x in u.iter() {
                let _ = write!(out, ",{}", format_f64_17(*x));
            }
            out.push('\n');
        }
        Some(out)
    }
}

/// Supplies gradients of the third moment of a rotated standard simplex.
pub trait GradientOracle {
    fn dim(&self) -> usize;
    fn gradient(&mut self, u: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Exact gradients for the standard simplex rotated by `rotation`
/// (identity when `None`): `R grad m3(R^T u)`.
#[derive(Clone, Debug)]
pub struct ExactGradient {
    dim: usize,
    rotation: Option<DMatrix<f64>>,
}

impl ExactGradient {
    pub fn canonical(dim: usize) -> Self {
        ExactGradient { dim, rotation: None }
    }

    pub fn rotated(rotation: DMatrix<f64>) -> Self {
        ExactGradient {
            dim: rotation.nrows(),
            rotation: Some(rotation),
        }
    }
}

impl GradientOracle for ExactGradient {
    fn dim(&self) -> usize {
        self.dim
    }

    fn gradient(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: u.len(),
            });
        }
        Ok(match &self.rotation {
            None => exact_grad_m3(u),
            Some(r) => r * exact_grad_m3(&r.tr_mul(u)),
        })
    }
}

/// Sample-gradient oracle: each call draws the next `per_gradient` points
/// from `source`, starting at index `start`, so no point is reused.
pub struct SampledGradient<'a> {
    source: &'a dyn PointSource,
    per_gradient: usize,
    next: u64,
    reuse: bool,
    consumed: Vec<Range<u64>>,
}

impl<'a> SampledGradient<'a> {
    pub fn new(source: &'a dyn PointSource, start: u64, per_gradient: usize) -> Self {
        SampledGradient {
            source,
            per_gradient,
            next: start,
            reuse: false,
            consumed: Vec::new(),
        }
    }

    /// Index ranges used so far, in call order.
    pub fn consumed(&self) -> &[Range<u64>] {
        &self.consumed
    }

    /// Next unused point index.
    pub fn position(&self) -> u64 {
        self.next
    }

    pub fn jump_to(&mut self, index: u64) {
        self.next = index;
    }

    /// When set, every evaluation reads the same block of points.
    pub fn set_reuse_block(&mut self, reuse: bool) {
        self.reuse = reuse;
    }
}

impl GradientOracle for SampledGradient<'_> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn gradient(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let start = self.next;
        let points = self.source.points(start, self.per_gradient)?;
        let end = start + self.per_gradient as u64;
        self.consumed.push(start..end);
        if !self.reuse {
            self.next = end;
        }
        Ok(sample_m3_and_gradient(&points, u).1)
    }
}

/// Solves the gradient identity for the coordinate-wise square:
/// `u^(2) = C grad m3(u) - (u.1)^2 1 / 2 - (u.u) 1 / 2 - (u.1) u`.
pub fn reconstruct_u2(u: &DVector<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != grad.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: grad.len(),
        });
    }
    let c = moment_constant(u.len());
    let s1 = u.sum();
    let s2 = u.norm_squared();
    let constant = 0.5 * s1 * s1 + 0.5 * s2;
    Ok(DVector::from_fn(u.len(), |i, _| c * grad[i] - constant - s1 * u[i]))
}

/// Uniform random direction on the unit sphere.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > COLLAPSE_NORM {
            return g / norm;
        }
    }
}

fn aligned_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let sign = if a.dot(b) < 0.0 { -1.0 } else { 1.0 };
    (a - b * sign).norm()
}

/// Runs the iteration from a uniformly random start drawn from the
/// config's seed, restarting if an update collapses to zero.
pub fn find_vertex<O: GradientOracle + ?Sized>(oracle: &mut O, config: &IterationConfig) -> Result<VertexResult> {
    config.validate()?;
    let dim = oracle.dim();
    if dim < 2 {
        return Err(Error::InvalidArgument("vertex finding needs dimension >= 2".into()));
    }
    let mut rng = substream(config.seed, 0);
    for restarts in 0..=config.max_restarts {
        let start = random_unit(dim, &mut rng);
        if let Some(mut result) = run_iteration(oracle, start, config)? {
            result.restarts = restarts;
            return Ok(result);
        }
    }
    Err(Error::RestartsExhausted {
        restarts: config.max_restarts,
    })
}

/// Runs the iteration from a given start. Collapse is reported as an error
/// since there is no random restart.
pub fn find_vertex_from<O: GradientOracle + ?Sized>(
    oracle: &mut O,
    start: &DVector<f64>,
    config: &IterationConfig,
) -> Result<VertexResult> {
    config.validate()?;
    if start.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            actual: start.len(),
        });
    }
    let norm = start.norm();
    if norm <= COLLAPSE_NORM {
        return Err(Error::InvalidArgument("start direction must be non-zero".into()));
    }
    run_iteration(oracle, start / norm, config)?.ok_or(Error::RestartsExhausted { restarts: 0 })
}

pub fn run_iteration<O: GradientOracle + ?Sized>(
    oracle: &mut O,
    start: DVector<f64>,
    config: &IterationConfig,
) -> Result<Option<VertexResult>> {
    let mut trace = config.record_trace.then(|| vec![start.clone()]);
    let mut u = start;
    let mut last_step = f64::INFINITY;
    for _ in 0..config.iterations {
        let grad = oracle.gradient(&u)?;
        let next = reconstruct_u2(&u, &grad)?;
        let norm = next.norm();
        if !(norm > COLLAPSE_NORM) {
            return Ok(None);
        }
        let next = next / norm;
        last_step = aligned_distance(&next, &u);
        u = next;
        if let Some(t) = trace.as_mut() {
            t.push(u.clone());
        }
    }
    Ok(Some(VertexResult {
        u,
        trace,
        converged: last_step <= config.convergence_tolerance,
        restarts: 0,
    }))
}

/// The conservative sample size and iteration count from the convergence
/// analysis, for reference only. With `c` the target accuracy exponent
/// (distance `1/n^c`) and failure probability `delta`:
/// `r = ln(4 (c+3) n^2 ln n / delta)` and
/// `t = 2^17 n^(2c+22) delta^-2 ln(2 n^5 r / delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBudget {
    pub iterations: f64,
    pub sample_per_gradient: f64,
}

impl ReferenceBudget {
    pub fn for_accuracy(n: usize, c: f64, delta: f64) -> Result<Self> {
        if n < 2 || !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need n >= 2, c > 0, 0 < delta < 1 (got n={n}, c={c}, delta={delta})"
            )));
        }
        let nf = n as f64;
        let iterations = (4.0 * (c + 3.0) * nf * nf * nf.ln() / delta).ln();
        let sample_per_gradient =
            2f64.powi(17) * nf.powf(2.0 * c + 22.0) * delta.powi(-2) * (2.0 * nf.powi(5) * iterations / delta).ln();
        Ok(ReferenceBudget {
            iterations,
            sample_per_gradient,
        })
    }
}
