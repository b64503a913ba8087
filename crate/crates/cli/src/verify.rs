use anyhow::{bail, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::Serialize;
use simplex_learn::evaluation::{check_sandwich_bound, homothety_bounds, tv_distance_mc};
use simplex_learn::geometry::{isotropic_simplex, Simplex};
use simplex_learn::moments::certify_landscape;
use simplex_learn::sampling::*;
use simplex_learn::stats::*;

use crate::config::{RunConfig, Suite};
use crate::report::write_json;
use crate::Status;

pub const VERIFY_SCHEMA_VERSION: u32 = 1;

const ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    AtMost,
    AtLeast,
    GreaterThan,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub rule: Rule,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, rule: Rule, limit: f64) -> Check {
        let pass = match rule {
            Rule::AtMost => value <= limit,
            Rule::AtLeast => value >= limit,
            Rule::GreaterThan => value > limit,
        };
        Check {
            name: name.into(),
            value,
            rule,
            limit,
            pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_ms: u64,
}

pub fn run(config: &RunConfig) -> Result<Status> {
    let started = std::time::Instant::now();
    let Some(suite) = config.suite else {
        bail!("invalid config: --suite is required");
    };
    let seed = config.seed();
    let checks = match suite {
        Suite::Landscape => landscape(config)?,
        Suite::Scaling => scaling(config, seed)?,
        Suite::Tv => tv(config, seed)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        schema_version: VERIFY_SCHEMA_VERSION,
        suite,
        seed,
        config: config.clone(),
        checks,
        pass,
        wall_time_ms: started.elapsed().as_millis() as u64,
    };
    write_json(&config.report_path("verify"), &report)?;
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    eprintln!("{} checks, {failed} failed", report.checks.len());
    Ok(if pass { Status::Complete } else { Status::Incomplete })
}

fn landscape(config: &RunConfig) -> Result<Vec<Check>> {
    let n = config.require_n()?;
    if n < 2 {
        bail!("invalid config: the landscape suite needs n >= 2");
    }
    let trials = config.t.unwrap_or(200);
    let report = certify_landscape(n, trials)?;
    let mut checks = Vec::new();
    for v in &report.vertex_checks {
        checks.push(Check::new(
            format!("vertex_{}_projected_gradient", v.vertex),
            v.projected_gradient_norm,
            Rule::AtMost,
            1e-8,
        ));
        checks.push(Check::new(
            format!("vertex_{}_strict_decreases", v.vertex),
            v.strict_decreases as f64,
            Rule::AtLeast,
            v.trials as f64,
        ));
    }
    for s in &report.saddle_checks {
        checks.push(Check::new(
            format!("saddle_alpha_{}_curvature", s.alpha),
            s.curvature,
            Rule::GreaterThan,
            0.0,
        ));
    }
    checks.push(Check::new(
        "gamma_minimum_error",
        report.gamma_minimum.error,
        Rule::AtMost,
        1e-10,
    ));
    Ok(checks)
}

fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

fn scaling(config: &RunConfig, seed: u64) -> Result<Vec<Check>> {
    let n = config.n.unwrap_or(5).max(1);
    let t = config.t.unwrap_or(100_000);
    if t < 100 {
        bail!("invalid config: the scaling suite needs t >= 100");
    }
    let corr_limit = 3.0 / (t as f64).sqrt();
    let mut checks = Vec::new();
    let exp_cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() };

    let base = sample_standard_simplex(n + 1, t, substream_seed(seed, 0))?;
    let scaled = rescale_simplex_sample(&base, substream_seed(seed, 1))?;
    let pooled: Vec<f64> = scaled.points.iter().copied().collect();
    checks.push(Check::new(
        "simplex_rescaling_ks_p_value",
        ks_one_sample(&pooled, exp_cdf).p_value,
        Rule::AtLeast,
        ALPHA,
    ));
    let r = pearson_correlation(&column(&scaled.points, 0), &column(&scaled.points, 1));
    checks.push(Check::new(
        "simplex_rescaling_correlation",
        r.abs(),
        Rule::AtMost,
        corr_limit,
    ));

    for (k, p) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        let base = sample_lp_ball(n, p, t, substream_seed(seed, 10 + k as u64))?;
        let scaled = rescale_lp_sample(&base, p, substream_seed(seed, 20 + k as u64))?;
        let powers: Vec<f64> = scaled.points.iter().map(|x| x.abs().powf(p)).collect();
        let (mean, se) = mean_with_se(&powers);
        checks.push(Check::new(
            format!("lp_rescaling_moment_z_p{p}"),
            (mean - 1.0 / p).abs() / se,
            Rule::AtMost,
            3.0,
        ));
    }

    for (k, p) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        let (x, norms) = sample_cone_measure_with_norms(n.max(2), p, t, substream_seed(seed, 30 + k as u64))?;
        let first: Vec<f64> = column(&x.points, 0).iter().map(|v| v.abs()).collect();
        let r = pearson_correlation(&first, &norms);
        checks.push(Check::new(
            format!("cone_independence_correlation_p{p}"),
            r.abs(),
            Rule::AtMost,
            corr_limit,
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 40));
    let gamma = Gamma::new(0.5, 1.0)?;
    let (mut first, mut total) = (Vec::with_capacity(t), Vec::with_capacity(t));
    for _ in 0..t {
        let h: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
        let w: f64 = Exp1.sample(&mut rng);
        let y = h.iter().sum::<f64>() + w;
        first.push(h[0] / y);
        total.push(y);
    }
    checks.push(Check::new(
        "gamma_ratio_independence_p_value",
        binned_independence(&first, &total, 4).p_value,
        Rule::AtLeast,
        ALPHA,
    ));
    Ok(checks)
}

fn tv(config: &RunConfig, seed: u64) -> Result<Vec<Check>> {
    let dims: Vec<usize> = match config.n {
        Some(n) if n >= 1 => vec![n],
        Some(_) => bail!("invalid config: n must be at least 1"),
        None => (2..=6).collect(),
    };
    let mc = config.mc_points.unwrap_or(100_000);
    let mut checks = Vec::new();
    let mut stream = 0u64;
    for &n in &dims {
        let k = isotropic_simplex(n)?;
        for alpha in [0.5, 0.8, 0.95] {
            let l = k.scaled_about(&k.centroid(), alpha)?;
            let e = tv_distance_mc(&k, &l, mc, substream_seed(seed, stream))?;
            stream += 1;
            let z = (e.value - (1.0 - alpha.powi(n as i32))).abs() / e.std_error;
            checks.push(Check::new(
                format!("tv_scaling_z_n{n}_alpha{alpha}"),
                z,
                Rule::AtMost,
                3.0,
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 1000));
    for &n in &dims {
        let k = isotropic_simplex(n)?;
        let c = DVector::zeros(n);
        for scale in [0.02, 0.05, 0.1] {
            let noise = DMatrix::from_fn(n, n + 1, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                scale * g
            });
            let l = Simplex::from_columns(k.vertex_matrix() + noise)?;
            let (alpha, beta) = homothety_bounds(&k, &l, &c)?;
            let check = check_sandwich_bound(&k, &l, alpha, beta, &c, mc, substream_seed(seed, stream))?;
            stream += 1;
            checks.push(Check::new(
                format!("sandwich_n{n}_noise{scale}_slack"),
                check.bound + 3.0 * check.estimate.std_error - check.estimate.value,
                Rule::AtLeast,
                0.0,
            ));
        }
    }
    Ok(checks)
}
