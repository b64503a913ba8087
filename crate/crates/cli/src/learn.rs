use anyhow::{Context, Result};
use simplex_learn::geometry::isotropic_simplex;
use simplex_learn::learner::{learn_simplex, LearnerConfig};
use simplex_learn::sampling::{read_csv_points, substream_seed, SampleMatrix, SimplexSampler};

use crate::config::RunConfig;
use crate::report::{write_json, write_rows_csv};
use crate::Status;

/// Substream for the synthetic sampler, apart from the per-repetition ones.
const SAMPLER_STREAM: u64 = 1 << 40;

pub fn run(config: &RunConfig) -> Result<Status> {
    let seed = config.seed();
    let input = match &config.input {
        Some(path) => {
            let points = read_csv_points(path, config.n).with_context(|| format!("reading {}", path.display()))?;
            Some(SampleMatrix::external(points)?)
        }
        None => None,
    };
    let n = match &input {
        Some(sample) => sample.dim(),
        None => config.require_n()?,
    };
    let defaults = LearnerConfig::practical(n, seed)?;
    let learner = LearnerConfig {
        t1: config.t1.unwrap_or(defaults.t1),
        t3: config.t3.unwrap_or(defaults.t3),
        m: config.m.unwrap_or(defaults.m),
        iterations: config.r.unwrap_or(defaults.iterations),
        shared_sample: config.shared_sample.unwrap_or(false),
        ..defaults
    };
    learner.validate(n).context("invalid config")?;

    let learned = match input {
        Some(sample) => learn_simplex(&sample, &learner)?,
        None => {
            let truth = isotropic_simplex(n)?;
            let source = SimplexSampler::new(truth.clone(), substream_seed(seed, SAMPLER_STREAM));
            let mut learned = learn_simplex(&source, &learner)?;
            learned.score_against(
                &truth,
                config.mc_points.unwrap_or(100_000),
                substream_seed(seed, SAMPLER_STREAM + 1),
            )?;
            learned
        }
    };
    write_json(&config.report_path("learn"), &learned.report)?;
    if let Some(path) = &config.csv {
        write_rows_csv(path, &learned.report.vertices)?;
    }
    eprintln!("found {} of {} vertices", learned.found_count, n + 1);
    Ok(if learned.is_complete() {
        Status::Complete
    } else {
        Status::Incomplete
    })
}
