//! Seeded samplers for simplices, l_p balls and the cone measure, plus the
//! Gamma rescalings that turn those samples into vectors with independent
//! coordinates.
//!
//! Rows are generated in fixed-size blocks; block `b` of a matrix drawn with
//! seed `s` comes from ChaCha stream `b` keyed by `s`. Output is therefore
//! bit-identical regardless of how many threads produce the blocks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{format_f64_17, Simplex};

/// Rows per RNG substream block.
pub const BLOCK_ROWS: usize = 512;

/// Supported range of the l_p exponent.
pub const P_MIN: f64 = 1.0;
pub const P_MAX: f64 = 64.0;

/// A seed derived from `(seed, stream)`, for handing to nested seeded code.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    substream(seed, stream.wrapping_add(1 << 40)).random()
}

/// Deterministic substream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn check_exponent(p: f64) -> Result<()> {
    if !(P_MIN..=P_MAX).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "p must lie in [{P_MIN}, {P_MAX}], got {p}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Gamma parameters must be positive, got shape={shape} rate={rate}"
            )));
        }
        Ok(GammaParams { shape, rate })
    }

    /// `Exp(rate) = Gamma(1, rate)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(1.0, rate)
    }

    fn distribution(&self) -> Gamma<f64> {
        Gamma::new(self.shape, 1.0 / self.rate).expect("validated parameters")
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(params: GammaParams, count: usize, rng: &mut R) -> Vec<f64> {
    let dist = params.distribution();
    (0..count).map(|_| dist.sample(rng)).collect()
}

/// Variates with density proportional to `exp(-|t|^p)`, as `sign * H^{1/p}`
/// with `H ~ Gamma(1/p, 1)`.
#[derive(Clone, Debug)]
pub struct GeneralizedGaussian {
    p: f64,
    magnitude: Gamma<f64>,
}

impl GeneralizedGaussian {
    pub fn new(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(GeneralizedGaussian {
            p,
            magnitude: Gamma::new(1.0 / p, 1.0).expect("1/p > 0"),
        })
    }
}

impl Distribution<f64> for GeneralizedGaussian {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let h: f64 = self.magnitude.sample(rng);
        let r = h.powf(1.0 / self.p);
        if rng.random::<bool>() {
            r
        } else {
            -r
        }
    }
}

pub fn sample_generalized_gaussian<R: Rng + ?Sized>(p: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    let dist = GeneralizedGaussian::new(p)?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Where a [`SampleMatrix`] came from; together with the seed it determines
/// the matrix exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSource {
    /// Uniform on the standard simplex with `n` coordinates.
    StandardSimplex {
        n: usize,
    },
    Simplex {
        vertices: Vec<Vec<f64>>,
    },
    LpBall {
        n: usize,
        p: f64,
    },
    Cone {
        n: usize,
        p: f64,
    },
    /// Gamma-rescaled copy of another sample. `p = None` is the simplex
    /// rescaling, `Some(p)` the l_p one.
    Rescaled {
        base: Box<SampleSource>,
        base_seed: u64,
        p: Option<f64>,
    },
    /// Loaded from a file or built by a caller; cannot be regenerated.
    External,
}

/// `t` points in `R^d`, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    pub points: DMatrix<f64>,
    pub seed: u64,
    pub source: SampleSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleHeader {
    pub seed: u64,
    pub source: SampleSource,
    pub t: usize,
    pub d: usize,
}

impl SampleMatrix {
    pub fn new(points: DMatrix<f64>, seed: u64, source: SampleSource) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::EmptySample);
        }
        Ok(SampleMatrix { points, seed, source })
    }

    pub fn external(points: DMatrix<f64>) -> Result<Self> {
        Self::new(points, 0, SampleSource::External)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    pub fn header(&self) -> SampleHeader {
        SampleHeader {
            seed: self.seed,
            source: self.source.clone(),
            t: self.len(),
            d: self.dim(),
        }
    }

    /// Redraws the matrix from its recorded source and seed.
    pub fn regenerate(&self) -> Result<SampleMatrix> {
        generate(&self.source, self.len(), self.seed)
    }

    /// Writes one point per CSV row (no header line).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(BufWriter::new(File::create(path)?));
        for row in self.points.row_iter() {
            w.write_record(row.iter().map(|&x| format_f64_17(x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_header(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &self.header())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a CSV body plus its JSON header sidecar.
    pub fn read(csv_path: impl AsRef<Path>, header_path: impl AsRef<Path>) -> Result<SampleMatrix> {
        let header: SampleHeader = serde_json::from_reader(BufReader::new(File::open(header_path)?))?;
        let points = read_csv_points(csv_path, Some(header.d))?;
        if points.nrows() != header.t {
            return Err(Error::InvalidArgument(format!(
                "header says t={}, csv has {} rows",
                header.t,
                points.nrows()
            )));
        }
        SampleMatrix::new(points, header.seed, header.source)
    }
}

/// Reads a headerless CSV of points. All rows must have the same width.
pub fn read_csv_points(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));
    let mut data = Vec::new();
    let mut width = expected_dim;
    let mut rows = 0;
    for record in r.records() {
        let record = record?;
        let d = *width.get_or_insert(record.len());
        if record.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: record.len(),
            });
        }
        for field in record.iter() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad number {field:?}: {e}")))?,
            );
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptySample);
    }
    Ok(DMatrix::from_row_slice(rows, width.unwrap_or(0), &data))
}

/// Fills rows `[start, start + count)` of a conceptually infinite seeded
/// matrix of width `d`. `row_fn` writes one row from the block's generator.
fn fill_rows<F>(seed: u64, start: u64, count: usize, d: usize, row_fn: F) -> DMatrix<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let end = start + count as u64;
    let block = BLOCK_ROWS as u64;
    let first = start / block;
    let last = if count == 0 { first } else { (end - 1) / block + 1 };
    let chunks: Vec<(u64, Vec<f64>)> = (first..last)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let block_start = b * block;
            let keep_from = start.max(block_start);
            let keep_to = end.min(block_start + block);
            let mut buf = vec![0.0; d];
            let mut out = Vec::with_capacity((keep_to - keep_from) as usize * d);
            for row in block_start..keep_to {
                row_fn(&mut rng, &mut buf);
                if row >= keep_from {
                    out.extend_from_slice(&buf);
                }
            }
            (keep_from - start, out)
        })
        .collect();
    let mut flat = vec![0.0; count * d];
    for (offset, chunk) in chunks {
        let o = offset as usize * d;
        flat[o..o + chunk.len()].copy_from_slice(&chunk);
    }
    DMatrix::from_row_slice(count, d, &flat)
}

fn standard_simplex_row(rng: &mut ChaCha8Rng, row: &mut [f64]) {
    let mut total = 0.0;
    for x in row.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *x = e;
        total += e;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

fn check_count(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Uniform points on the standard simplex with `n` coordinates: normalized
/// iid `Exp(1)` vectors.
pub fn sample_standard_simplex(n: usize, t: usize, seed: u64) -> Result<SampleMatrix> {
    check_count("n", n)?;
    check_count("t", t)?;
    let points = fill_rows(seed, 0, t, n, standard_simplex_row);
    SampleMatrix::new(points, seed, SampleSource::StandardSimplex { n })
}

/// Uniform points in `conv(s)`: barycentric weights from the standard
/// simplex pushed through the vertex matrix.
pub fn sample_simplex(s: &Simplex, t: usize, seed: u64) -> Result<SampleMatrix> {
    check_count("t", t)?;
    let source = SimplexSampler::new(s.clone(), seed);
    let points = source.points(0, t)?;
    SampleMatrix::new(
        points,
        seed,
        SampleSource::Simplex {
            vertices: s.vertex_rows(),
        },
    )
}

/// Uniform points in the unit l_p ball: `G / (sum |G_i|^p + Z)^{1/p}` with
/// `G` generalized Gaussian and `Z ~ Exp(1)`.
pub fn sample_lp_ball(n: usize, p: f64, t: usize, seed: u64) -> Result<SampleMatrix> {
    Ok(sample_lp_ball_with_radius(n, p, t, seed)?.0)
}

/// As [`sample_lp_ball`], also returning the radius `(sum |G_i|^p + Z)^{1/p}`
/// used for each row.
pub fn sample_lp_ball_with_radius(n: usize, p: f64, t: usize, seed: u64) -> Result<(SampleMatrix, Vec<f64>)> {
    check_count("n", n)?;
    check_count("t", t)?;
    let gg = GeneralizedGaussian::new(p)?;
    let raw = fill_rows(seed, 0, t, n + 1, |rng, row| {
        let mut acc = 0.0;
        for x in row[..n].iter_mut() {
            *x = gg.sample(rng);
            acc += x.abs().powf(p);
        }
        let z: f64 = Exp1.sample(rng);
        let radius = (acc + z).powf(1.0 / p);
        for x in row[..n].iter_mut() {
            *x /= radius;
        }
        row[n] = radius;
    });
    let radii = raw.column(n).iter().copied().collect();
    let points = raw.columns(0, n).into_owned();
    Ok((SampleMatrix::new(points, seed, SampleSource::LpBall { n, p })?, radii))
}

pub fn sample_cone_measure(n: usize, p: f64, t: usize, seed: u64) -> Result<SampleMatrix> {
    Ok(sample_cone_measure_with_norms(n, p, t, seed)?.0)
}

/// Cone-measure points `G / ||G||_p` together with `||G||_p` for each row.
pub fn sample_cone_measure_with_norms(n: usize, p: f64, t: usize, seed: u64) -> Result<(SampleMatrix, Vec<f64>)> {
    check_count("n", n)?;
    check_count("t", t)?;
    let gg = GeneralizedGaussian::new(p)?;
    let raw = fill_rows(seed, 0, t, n + 1, |rng, row| {
        let mut acc = 0.0;
        for x in row[..n].iter_mut() {
            *x = gg.sample(rng);
            acc += x.abs().powf(p);
        }
        let norm = acc.powf(1.0 / p);
        for x in row[..n].iter_mut() {
            *x /= norm;
        }
        row[n] = norm;
    });
    let norms = raw.column(n).iter().copied().collect();
    let points = raw.columns(0, n).into_owned();
    Ok((SampleMatrix::new(points, seed, SampleSource::Cone { n, p })?, norms))
}

/// Multiplies each row by `T^{exponent}` with `T ~ Gamma(shape, 1)` drawn
/// from the seeded block streams.
pub(crate) fn scale_rows(points: &DMatrix<f64>, seed: u64, shape: f64, exponent: f64) -> DMatrix<f64> {
    let gamma = Gamma::new(shape, 1.0).expect("positive shape");
    let scales = fill_rows(seed, 0, points.nrows(), 1, |rng, row| {
        row[0] = gamma.sample(rng);
    });
    let mut out = points.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= scales[(i, 0)].powf(exponent);
    }
    out
}

/// Gamma rescaling: each row `x` of a uniform sample from the
/// standard simplex with `n` coordinates becomes `T x`, `T ~ Gamma(n, 1)`.
/// The coordinates of the result are iid `Exp(1)`.
pub fn rescale_simplex_sample(x: &SampleMatrix, seed: u64) -> Result<SampleMatrix> {
    let n = x.dim();
    for (i, row) in x.points.row_iter().enumerate() {
        let sum = row.sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&v| v < -1e-9) {
            return Err(Error::OutsideSupport {
                row: i,
                reason: format!("not on the standard simplex (coordinate sum {sum})"),
            });
        }
    }
    let points = scale_rows(&x.points, seed, n as f64, 1.0);
    SampleMatrix::new(
        points,
        seed,
        SampleSource::Rescaled {
            base: Box::new(x.source.clone()),
            base_seed: x.seed,
            p: None,
        },
    )
}

/// l_p analogue: each row becomes `T^{1/p} x` with `T ~ Gamma(n/p + 1, 1)`,
/// giving iid coordinates with density proportional to `exp(-|t|^p)`.
pub fn rescale_lp_sample(x: &SampleMatrix, p: f64, seed: u64) -> Result<SampleMatrix> {
    check_exponent(p)?;
    let n = x.dim();
    for (i, row) in x.points.row_iter().enumerate() {
        let norm = row.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        if norm > 1.0 + 1e-9 {
            return Err(Error::OutsideSupport {
                row: i,
                reason: format!("l_{p} norm {norm} exceeds 1"),
            });
        }
    }
    let points = scale_rows(&x.points, seed, n as f64 / p + 1.0, 1.0 / p);
    SampleMatrix::new(
        points,
        seed,
        SampleSource::Rescaled {
            base: Box::new(x.source.clone()),
            base_seed: x.seed,
            p: Some(p),
        },
    )
}

/// Regenerates a sample from its source description.
pub fn generate(source: &SampleSource, t: usize, seed: u64) -> Result<SampleMatrix> {
    match source {
        SampleSource::StandardSimplex { n } => sample_standard_simplex(*n, t, seed),
        SampleSource::Simplex { vertices } => sample_simplex(&Simplex::from_rows(vertices)?, t, seed),
        SampleSource::LpBall { n, p } => sample_lp_ball(*n, *p, t, seed),
        SampleSource::Cone { n, p } => sample_cone_measure(*n, *p, t, seed),
        SampleSource::Rescaled { base, base_seed, p } => {
            let base = generate(base, t, *base_seed)?;
            match p {
                None => rescale_simplex_sample(&base, seed),
                Some(p) => rescale_lp_sample(&base, *p, seed),
            }
        }
        SampleSource::External => Err(Error::InvalidArgument("external samples cannot be regenerated".into())),
    }
}

/// Random access to iid points by global index. Distinct index ranges give
/// independent points, so callers can hand out disjoint ranges to get fresh
/// samples without shared state.
pub trait PointSource: Sync {
    fn dim(&self) -> usize;

    /// Number of points, if finite.
    fn available(&self) -> Option<u64> {
        None
    }

    /// Points with indices `[start, start + count)`, one per row.
    fn points(&self, start: u64, count: usize) -> Result<DMatrix<f64>>;
}

/// Unbounded uniform sampler for a simplex.
#[derive(Clone, Debug)]
pub struct SimplexSampler {
    simplex: Simplex,
    seed: u64,
}

impl SimplexSampler {
    pub fn new(simplex: Simplex, seed: u64) -> Self {
        SimplexSampler { simplex, seed }
    }

    pub fn simplex(&self) -> &Simplex {
        &self.simplex
    }
}

impl PointSource for SimplexSampler {
    fn dim(&self) -> usize {
        self.simplex.ambient_dim()
    }

    fn points(&self, start: u64, count: usize) -> Result<DMatrix<f64>> {
        let k = self.simplex.vertex_count();
        let weights = fill_rows(self.seed, start, count, k, standard_simplex_row);
        Ok(weights * self.simplex.vertex_matrix().transpose())
    }
}

/// Unbounded uniform sampler for `A(B_p^n)`.
#[derive(Clone, Debug)]
pub struct LpBallSampler {
    n: usize,
    p: f64,
    linear: DMatrix<f64>,
    seed: u64,
}

impl LpBallSampler {
    pub fn new(linear: DMatrix<f64>, p: f64, seed: u64) -> Result<Self> {
        check_exponent(p)?;
        if !linear.is_square() || linear.nrows() == 0 {
            return Err(Error::InvalidArgument("linear map must be square and non-empty".into()));
        }
        Ok(LpBallSampler {
            n: linear.nrows(),
            p,
            linear,
            seed,
        })
    }
}

impl PointSource for LpBallSampler {
    fn dim(&self) -> usize {
        self.n
    }

    fn points(&self, start: u64, count: usize) -> Result<DMatrix<f64>> {
        let (n, p) = (self.n, self.p);
        let gg = GeneralizedGaussian::new(p)?;
        let ball = fill_rows(self.seed, start, count, n, |rng, row| {
            let mut acc = 0.0;
            for x in row.iter_mut() {
                *x = gg.sample(rng);
                acc += x.abs().powf(p);
            }
            let z: f64 = Exp1.sample(rng);
            let radius = (acc + z).powf(1.0 / p);
            for x in row.iter_mut() {
                *x /= radius;
            }
        });
        Ok(ball * self.linear.transpose())
    }
}

impl PointSource for SampleMatrix {
    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn available(&self) -> Option<u64> {
        Some(self.points.nrows() as u64)
    }

    fn points(&self, start: u64, count: usize) -> Result<DMatrix<f64>> {
        let end = start + count as u64;
        let available = self.points.nrows() as u64;
        if end > available {
            return Err(Error::SampleExhausted { start, end, available });
        }
        Ok(self.points.rows(start as usize, count).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{isotropic_simplex, standard_simplex};
    use crate::stats::{ks_two_sample, mean_and_sd};

    #[test]
    fn blocks_are_independent_of_request_boundaries() {
        let s = SimplexSampler::new(isotropic_simplex(3).unwrap(), 9);
        let whole = s.points(100, 2000).unwrap();
        let a = s.points(100, 700).unwrap();
        let b = s.points(800, 1300).unwrap();
        assert_eq!(whole.rows(0, 700), a);
        assert_eq!(whole.rows(700, 1300), b);
    }

    #[test]
    fn regeneration_is_bit_exact() {
        let m = sample_lp_ball(3, 2.5, 3000, 77).unwrap();
        assert_eq!(m.regenerate().unwrap(), m);
        let r = rescale_simplex_sample(&sample_standard_simplex(4, 1000, 3).unwrap(), 8).unwrap();
        assert_eq!(r.regenerate().unwrap(), r);
        assert_ne!(sample_lp_ball(3, 2.5, 3000, 78).unwrap(), m);
    }

    #[test]
    fn standard_simplex_rows_sum_to_one() {
        let m = sample_standard_simplex(5, 2000, 1).unwrap();
        for row in m.points.row_iter() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn lp_and_cone_norms() {
        for p in [1.0, 1.5, 2.0, 7.0, 64.0] {
            let ball = sample_lp_ball(4, p, 2000, 2).unwrap();
            let cone = sample_cone_measure(4, p, 2000, 2).unwrap();
            for row in ball.points.row_iter() {
                let norm = row.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
                assert!(norm <= 1.0 + 1e-12);
            }
            for row in cone.points.row_iter() {
                let norm = row.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exponent_range_is_enforced() {
        assert!(sample_lp_ball(2, 0.5, 10, 0).is_err());
        assert!(sample_cone_measure(2, 65.0, 10, 0).is_err());
        assert!(GeneralizedGaussian::new(f64::NAN).is_err());
    }

    #[test]
    fn rescale_rejects_off_support_rows() {
        let bad = SampleMatrix::external(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.7, 0.7])).unwrap();
        assert!(matches!(
            rescale_simplex_sample(&bad, 0),
            Err(Error::OutsideSupport { row: 1, .. })
        ));
        let bad = SampleMatrix::external(DMatrix::from_row_slice(1, 2, &[0.9, 0.9])).unwrap();
        assert!(matches!(
            rescale_lp_sample(&bad, 2.0, 0),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn finite_source_reports_exhaustion() {
        let m = sample_standard_simplex(3, 10, 0).unwrap();
        assert_eq!(m.points(4, 6).unwrap().nrows(), 6);
        assert!(matches!(m.points(5, 6), Err(Error::SampleExhausted { .. })));
    }

    #[test]
    fn sample_simplex_stays_inside() {
        let s = Simplex::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.5], vec![1.0, 2.0]]).unwrap();
        let m = sample_simplex(&s, 5000, 4).unwrap();
        let member = s.membership().unwrap();
        assert!(member.contains_rows(&m.points).unwrap().into_iter().all(|b| b));
    }

    #[test]
    fn gamma_exponential_mean() {
        let mut rng = substream(1, 0);
        let xs = sample_gamma(GammaParams::new(1.0, 1.0).unwrap(), 100_000, &mut rng);
        let (mean, _) = mean_and_sd(&xs);
        assert!((mean - 1.0).abs() <= 3.0 / (1e5f64).sqrt());
        assert!(GammaParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn embedded_standard_simplex_matches_direct_sampler() {
        let direct = sample_standard_simplex(3, 20_000, 5).unwrap();
        let pushed = sample_simplex(&standard_simplex(2).unwrap(), 20_000, 6).unwrap();
        let a: Vec<f64> = direct.points.column(0).iter().copied().collect();
        let b: Vec<f64> = pushed.points.column(0).iter().copied().collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_cone_measure(3, 3.0, 50, 12).unwrap();
        let csv_path = dir.path().join("s.csv");
        let header_path = dir.path().join("s.json");
        m.write_csv(&csv_path).unwrap();
        m.write_header(&header_path).unwrap();
        let back = SampleMatrix::read(&csv_path, &header_path).unwrap();
        assert_eq!(back, m);
    }
}
