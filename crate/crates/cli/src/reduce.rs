use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use simplex_learn::assignment::greedy_signed_permutation;
use simplex_learn::evaluation::match_points;
use simplex_learn::geometry::isotropic_simplex;
use simplex_learn::ica::*;
use simplex_learn::sampling::{
    check_exponent, sample_simplex, substream_seed, LpBallSampler, PointSource, SampleMatrix,
};

use crate::config::{Problem, RunConfig};
use crate::report::{write_json, write_rows_csv};
use crate::Status;

pub const REDUCE_SCHEMA_VERSION: u32 = 1;

/// Success threshold: separation index for the simplex problem, symmetric
/// difference ratio for the l_p problem (the index is meaningless at p = 2).
const SUCCESS_LIMIT: f64 = 0.2;

#[derive(Debug, Serialize)]
pub struct ReduceReport {
    pub schema_version: u32,
    pub problem: &'static str,
    pub p: Option<f64>,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub separation_index: f64,
    pub matched_errors: Vec<f64>,
    pub c_pn: Option<IsotropyConstant>,
    pub symmetric_difference: Option<SymmetricDifference>,
    /// Recovered vertices (simplex) or columns of the recovered matrix (l_p).
    pub recovered: Vec<Vec<f64>>,
    pub contrasts: Vec<Contrast>,
    pub converged: bool,
    pub permutation_note: String,
    pub wall_time_ms: u64,
}

pub fn run(config: &RunConfig) -> Result<Status> {
    let started = std::time::Instant::now();
    let n = config.require_n()?;
    let seed = config.seed();
    let t = config.t.unwrap_or(200_000);
    if t <= n + 1 {
        bail!("invalid config: t must exceed n + 1");
    }
    let ica = IcaConfig {
        seed: substream_seed(seed, 2),
        ..IcaConfig::default()
    };
    let path = config.report_path("reduce");
    let mut report = match config.problem {
        Some(Problem::Simplex) | None => simplex_problem(n, t, seed, &ica)?,
        Some(Problem::Lp) => {
            let p = config.p.context("invalid config: --p is required for --problem lp")?;
            check_exponent(p).context("invalid config")?;
            let cache = path.parent().filter(|d| !d.as_os_str().is_empty()).map_or_else(
                || std::path::PathBuf::from("c_pn_cache.json"),
                |d| d.join("c_pn_cache.json"),
            );
            lp_problem(n, p, t, seed, &ica, &cache, config.mc_points.unwrap_or(100_000))?
        }
    };
    report.config = config.clone();
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    write_json(&path, &report)?;
    if let Some(csv) = &config.csv {
        write_rows_csv(csv, &report.recovered)?;
    }
    eprintln!("separation index {:.4}", report.separation_index);
    let score = report.symmetric_difference.map_or(report.separation_index, |d| d.ratio);
    Ok(if score <= SUCCESS_LIMIT {
        Status::Complete
    } else {
        Status::Incomplete
    })
}

fn rows(vs: &[DVector<f64>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

fn simplex_problem(n: usize, t: usize, seed: u64, ica: &IcaConfig) -> Result<ReduceReport> {
    let truth = isotropic_simplex(n)?;
    let sample = sample_simplex(&truth, t, substream_seed(seed, 0))?;
    let red = reduce_simplex_to_ica(&sample, substream_seed(seed, 1), ica)?;
    let vertices: Vec<DVector<f64>> = truth.vertices().collect();
    let matching = match_points(&vertices, &red.vertices)?;
    let lifted = DMatrix::from_fn(n + 1, n + 1, |i, j| if i < n { vertices[j][i] } else { 1.0 });
    Ok(ReduceReport {
        schema_version: REDUCE_SCHEMA_VERSION,
        problem: "simplex",
        p: None,
        n,
        t,
        seed,
        config: RunConfig::default(),
        separation_index: amari_index(&(&red.estimate.separating * lifted)),
        matched_errors: matching.per_vertex_error,
        c_pn: None,
        symmetric_difference: None,
        recovered: rows(&red.vertices),
        contrasts: red.estimate.contrasts,
        converged: red.estimate.converged,
        permutation_note: red.estimate.permutation_note,
        wall_time_ms: 0,
    })
}

/// The body is `A B_p^n` with `A = diag(1, 2, ..., n)`.
fn lp_problem(
    n: usize,
    p: f64,
    t: usize,
    seed: u64,
    ica: &IcaConfig,
    cache: &std::path::Path,
    mc_points: usize,
) -> Result<ReduceReport> {
    let a = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (i + 1) as f64));
    let points = LpBallSampler::new(a.clone(), p, substream_seed(seed, 0))?.points(0, t)?;
    let sample = SampleMatrix::external(points)?;
    let c_pn = compute_c_pn_cached(p, n, cache)?;
    let red = reduce_lp_with_constant(&sample, p, substream_seed(seed, 1), ica, c_pn)?;
    let a_inv = a.clone().try_inverse().context("body matrix is singular")?;
    let (cols, signs) = greedy_signed_permutation(&(&a_inv * &red.mixing));
    let matched_errors = (0..n)
        .map(|i| (red.mixing.column(cols[i]) * signs[i] - a.column(i)).norm())
        .collect();
    let diff = lp_symmetric_difference(&a, &red.mixing, p, mc_points, substream_seed(seed, 3))?;
    let recovered: Vec<DVector<f64>> = red.mixing.column_iter().map(|c| c.into_owned()).collect();
    Ok(ReduceReport {
        schema_version: REDUCE_SCHEMA_VERSION,
        problem: "lp",
        p: Some(p),
        n,
        t,
        seed,
        config: RunConfig::default(),
        separation_index: amari_index(&(&red.estimate.separating * &a)),
        matched_errors,
        c_pn: Some(red.c_pn),
        symmetric_difference: Some(diff),
        recovered: rows(&recovered),
        contrasts: red.estimate.contrasts,
        converged: red.estimate.converged,
        permutation_note: red.estimate.permutation_note,
        wall_time_ms: 0,
    })
}
