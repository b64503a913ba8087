//! Learning a simplex from uniform samples.
//!
//! The sample is put in isotropic position with its empirical mean and a
//! Cholesky factor of its covariance, then mapped onto the standard simplex's
//! hyperplane in `R^{n+1}`. There the body is a rotation of the standard
//! simplex, and each vertex-finder run lands on one of its vertices. Distinct
//! vertices are collected and mapped back.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_embed_map, AffineFrame, EmbedMap, Simplex};
use crate::sampling::{substream, PointSource};
use crate::vertex_finder::{random_unit, run_iteration, GradientOracle, IterationConfig, SampledGradient};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    /// Points used for the mean and covariance.
    pub t1: usize,
    /// Points per gradient evaluation.
    pub t3: usize,
    /// Number of vertex-finder repetitions.
    pub m: usize,
    #[serde(default = "default_dedup_radius")]
    pub dedup_radius: f64,
    pub iterations: usize,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
    pub seed: u64,
    /// Reuse one block of `t3` points for every repetition instead of
    /// drawing fresh points per repetition.
    #[serde(default)]
    pub shared_sample: bool,
}

fn default_dedup_radius() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

fn default_restarts() -> usize {
    5
}

impl LearnerConfig {
    /// Practical defaults: `t1 = t3 = 5e4`, 30 iterations, and `m` from the
    /// coupon-collector count for `n + 1` equally likely vertices at
    /// `delta = 0.1`.
    pub fn practical(n: usize, seed: u64) -> Result<Self> {
        let m = crate::evaluation::coupon_trials_bound(n + 1, 1.0 / (n as f64 + 1.0), 0.1)?;
        Ok(LearnerConfig {
            t1: 50_000,
            t3: 50_000,
            m: m.max(n + 1),
            dedup_radius: default_dedup_radius(),
            iterations: 30,
            max_restarts: default_restarts(),
            seed,
            shared_sample: false,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.t1 < n + 2 {
            return Err(Error::InvalidArgument(format!("t1 must be at least n + 2 = {}", n + 2)));
        }
        if self.m < n + 1 {
            return Err(Error::InvalidArgument(format!("m must be at least n + 1 = {}", n + 1)));
        }
        if !(self.dedup_radius > 0.0 && self.dedup_radius < std::f64::consts::SQRT_2) {
            return Err(Error::InvalidArgument("dedup_radius must lie in (0, sqrt 2)".into()));
        }
        if self.t3 == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument("t3 and iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_config(&self, repetition: usize) -> IterationConfig {
        IterationConfig {
            iterations: self.iterations,
            sample_per_gradient: self.t3,
            seed: crate::sampling::substream_seed(self.seed, repetition as u64),
            record_trace: false,
            convergence_tolerance: 1e-9,
            max_restarts: self.max_restarts,
        }
    }

    /// Points needed from the source when no restart happens.
    pub fn required_points(&self) -> u64 {
        if self.shared_sample {
            return (self.t1 + self.t3) as u64;
        }
        self.t1 as u64 + self.m as u64 * (self.iterations * self.t3) as u64
    }
}

/// Empirical mean, biased covariance `(1/t) sum (x - mu)(x - mu)^T`, and its
/// lower Cholesky factor.
pub fn estimate_frame(points: &DMatrix<f64>) -> Result<AffineFrame> {
    let t = points.nrows();
    let n = points.ncols();
    if t <= n {
        return Err(Error::DegenerateSample(format!("need more than {n} points, got {t}")));
    }
    let mean = DVector::from_fn(n, |j, _| points.column(j).mean());
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / t as f64;
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::DegenerateSample("empirical covariance is not positive definite".into()))?;
    AffineFrame::new(mean, chol.l()).map_err(|_| Error::DegenerateSample("covariance factor is singular".into()))
}

/// Views a source of points in `R^n` through `x -> T(B^{-1}(x - mu))`, giving
/// points on the hyperplane `x . 1 = 1` in `R^{n+1}`.
pub struct EmbeddedSource<'a> {
    inner: &'a dyn PointSource,
    /// `n x (n+1)`, applied on the right of row points.
    linear: DMatrix<f64>,
    shift: DVector<f64>,
}

impl<'a> EmbeddedSource<'a> {
    pub fn new(inner: &'a dyn PointSource, frame: &AffineFrame, embed: &EmbedMap) -> Result<Self> {
        if inner.dim() != frame.dim() || frame.dim() != embed.dim() {
            return Err(Error::DimensionMismatch {
                expected: embed.dim(),
                actual: inner.dim(),
            });
        }
        let forward = &embed.basis * frame.factor_inverse() * embed.scale;
        let shift = &embed.offset - &forward * &frame.mean;
        Ok(EmbeddedSource {
            inner,
            linear: forward.transpose(),
            shift,
        })
    }
}

impl PointSource for EmbeddedSource<'_> {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn available(&self) -> Option<u64> {
        self.inner.available()
    }

    fn points(&self, start: u64, count: usize) -> Result<DMatrix<f64>> {
        let mut out = self.inner.points(start, count)? * &self.linear;
        for mut row in out.row_iter_mut() {
            row += self.shift.transpose();
        }
        Ok(out)
    }
}

/// Outcome of one vertex-finder repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    /// Raw unit direction found.
    pub direction: DVector<f64>,
    /// Its projection onto `x . 1 = 1`.
    pub projected: DVector<f64>,
    pub converged: bool,
    pub restarts: usize,
}

/// Runs `config.m` repetitions in parallel and returns them in repetition
/// order. `oracle_for(repetition, attempt)` must give each attempt its own
/// points.
pub fn run_repetitions<O, F>(dim: usize, config: &LearnerConfig, oracle_for: F) -> Result<Vec<Repetition>>
where
    O: GradientOracle,
    F: Fn(usize, usize) -> O + Sync,
{
    (0..config.m)
        .into_par_iter()
        .map(|rep| {
            let iteration = config.iteration_config(rep);
            let mut rng = substream(iteration.seed, 0);
            for attempt in 0..=config.max_restarts {
                let start = random_unit(dim, &mut rng);
                let mut oracle = oracle_for(rep, attempt);
                if let Some(result) = run_iteration(&mut oracle, start, &iteration)? {
                    return Ok(Repetition {
                        projected: EmbedMap::project_to_hyperplane(&result.u),
                        direction: result.u,
                        converged: result.converged,
                        restarts: attempt,
                    });
                }
            }
            Err(Error::RestartsExhausted {
                restarts: config.max_restarts,
            })
        })
        .collect()
}

/// A deduplicated vertex estimate on the hyperplane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: DVector<f64>,
    /// Repetitions assigned to this cluster.
    pub hits: usize,
    /// Index of the repetition that opened the cluster.
    pub first: usize,
}

/// Keeps a projected direction only if it is farther than `radius` from
/// every direction kept so far; later directions within `radius` of a kept
/// one count as hits on it.
pub fn deduplicate(points: &[DVector<f64>], radius: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match clusters.iter_mut().find(|c| (&c.representative - p).norm() <= radius) {
            Some(c) => c.hits += 1,
            None => clusters.push(Cluster {
                representative: p.clone(),
                hits: 1,
                first: i,
            }),
        }
    }
    clusters
}

/// `sqrt((n+1)(n+2)) B A^T (u - 1/(n+1)) + mu`.
pub fn back_map(u: &DVector<f64>, frame: &AffineFrame, embed: &EmbedMap) -> DVector<f64> {
    &frame.factor * embed.basis.tr_mul(&(u - &embed.offset)) / embed.scale + &frame.mean
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub n: usize,
    pub config: LearnerConfig,
    pub found_count: usize,
    /// Recovered vertices, one row each; empty when incomplete.
    pub vertices: Vec<Vec<f64>>,
    /// Distinct clusters beyond `n + 1`, dropped as least supported.
    pub spurious_clusters: usize,
    pub cluster_hits: Vec<usize>,
    pub converged_repetitions: usize,
    pub restarts: usize,
    pub per_vertex_match_error: Option<Vec<f64>>,
    pub max_match_error: Option<f64>,
    pub tv_estimate: Option<f64>,
    pub wall_time_ms: u64,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn complete(&self) -> bool {
        self.found_count == self.n + 1
    }
}

#[derive(Clone, Debug)]
pub struct LearnedSimplex {
    /// Present only when `n + 1` distinct vertices were found.
    pub simplex: Option<Simplex>,
    pub found_count: usize,
    pub frame: AffineFrame,
    pub repetitions: Vec<Repetition>,
    pub clusters: Vec<Cluster>,
    pub report: ExperimentReport,
}

impl LearnedSimplex {
    pub fn is_complete(&self) -> bool {
        self.simplex.is_some()
    }

    /// Fills the ground-truth fields of the report.
    pub fn score_against(&mut self, truth: &Simplex, mc_points: usize, seed: u64) -> Result<()> {
        if let Some(est) = &self.simplex {
            let m = crate::evaluation::match_vertices(truth, est)?;
            let tv = crate::evaluation::tv_distance_mc(truth, est, mc_points, seed)?;
            self.report.max_match_error = Some(m.max_error);
            self.report.per_vertex_match_error = Some(m.per_vertex_error);
            self.report.tv_estimate = Some(tv.value);
        }
        Ok(())
    }
}

/// Learns a simplex in `R^n` from a source of uniform points.
///
/// Point indices `[0, t1)` estimate the frame. Repetition `i` draws its
/// gradients from `t1 + i r t3` onwards (`t1` onwards for every repetition
/// with `shared_sample`). Restarts draw from a separate region after all
/// repetitions.
pub fn learn_simplex(source: &dyn PointSource, config: &LearnerConfig) -> Result<LearnedSimplex> {
    let started = Instant::now();
    let n = source.dim();
    config.validate(n)?;
    if let Some(available) = source.available() {
        let needed = config.required_points();
        if available < needed {
            return Err(Error::SampleExhausted {
                start: 0,
                end: needed,
                available,
            });
        }
    }
    let frame = estimate_frame(&source.points(0, config.t1)?)?;
    let embed = make_embed_map(n)?;
    let embedded = EmbeddedSource::new(source, &frame, &embed)?;
    let block = (config.iterations * config.t3) as u64;
    let t1 = config.t1 as u64;
    let main_end = config.required_points();
    let restarts_per_rep = config.max_restarts as u64;
    let reps = run_repetitions(n + 1, config, |rep, attempt| {
        let rep = rep as u64;
        let start = if attempt == 0 {
            if config.shared_sample {
                t1
            } else {
                t1 + rep * block
            }
        } else {
            main_end + (rep * restarts_per_rep + attempt as u64 - 1) * block
        };
        let mut oracle = SampledGradient::new(&embedded, start, config.t3);
        if config.shared_sample {
            oracle.set_reuse_block(true);
        }
        oracle
    })?;
    let mut result = assemble(n, config, frame, &embed, reps)?;
    result.report.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(result)
}

/// Runs the repetitions against a caller-supplied oracle in the embedded
/// frame, then deduplicates and maps back through `frame`.
pub fn learn_with_oracle<O, F>(
    n: usize,
    frame: AffineFrame,
    config: &LearnerConfig,
    oracle_for: F,
) -> Result<LearnedSimplex>
where
    O: GradientOracle,
    F: Fn(usize, usize) -> O + Sync,
{
    let started = Instant::now();
    if frame.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: frame.dim(),
        });
    }
    config.validate(n)?;
    let embed = make_embed_map(n)?;
    let reps = run_repetitions(n + 1, config, oracle_for)?;
    let mut result = assemble(n, config, frame, &embed, reps)?;
    result.report.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(result)
}

fn assemble(
    n: usize,
    config: &LearnerConfig,
    frame: AffineFrame,
    embed: &EmbedMap,
    repetitions: Vec<Repetition>,
) -> Result<LearnedSimplex> {
    let projected: Vec<DVector<f64>> = repetitions.iter().map(|r| r.projected.clone()).collect();
    let clusters = deduplicate(&projected, config.dedup_radius);
    let mut kept: Vec<&Cluster> = clusters.iter().collect();
    // Most-supported first; ties keep discovery order.
    kept.sort_by(|a, b| b.hits.cmp(&a.hits).then(a.first.cmp(&b.first)));
    let spurious = kept.len().saturating_sub(n + 1);
    kept.truncate(n + 1);
    kept.sort_by_key(|c| c.first);
    let found_count = kept.len();
    let vertices: Vec<DVector<f64>> = kept
        .iter()
        .map(|c| back_map(&c.representative, &frame, embed))
        .collect();
    let simplex = if found_count == n + 1 {
        Some(Simplex::from_vertices(&vertices)?)
    } else {
        None
    };
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n,
        config: config.clone(),
        found_count,
        vertices: if simplex.is_some() {
            vertices.iter().map(|v| v.iter().copied().collect()).collect()
        } else {
            Vec::new()
        },
        spurious_clusters: spurious,
        cluster_hits: kept.iter().map(|c| c.hits).collect(),
        converged_repetitions: repetitions.iter().filter(|r| r.converged).count(),
        restarts: repetitions.iter().map(|r| r.restarts).sum(),
        per_vertex_match_error: None,
        max_match_error: None,
        tv_estimate: None,
        wall_time_ms: 0,
        seed: config.seed,
    };
    Ok(LearnedSimplex {
        simplex,
        found_count,
        frame,
        repetitions,
        clusters,
        report,
    })
}
