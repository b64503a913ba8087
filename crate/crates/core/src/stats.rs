//! Small statistical toolkit for the distributional checks: moments,
//! Kolmogorov-Smirnov tests, correlation and chi-square independence.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Sample mean and (unbiased) standard deviation.
pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Mean and its standard error.
pub fn mean_with_se(xs: &[f64]) -> (f64, f64) {
    let (m, sd) = mean_and_sd(xs);
    (m, sd / (xs.len() as f64).sqrt())
}

pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, _) = mean_and_sd(xs);
    let (my, _) = mean_and_sd(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Survival function of the Kolmogorov distribution,
/// `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// One-sample KS test of `data` against a continuous CDF.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> TestOutcome {
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    TestOutcome {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestOutcome {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    TestOutcome {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// Cut points splitting `xs` into `bins` equal-count groups.
pub fn quantile_edges(xs: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    (1..bins)
        .map(|k| sorted[(k * sorted.len() / bins).min(sorted.len() - 1)])
        .collect()
}

pub fn bin_index(x: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| x >= e).count()
}

/// Pearson chi-square test of independence on a contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> TestOutcome {
    let rows = table.len();
    let cols = table[0].len();
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let expected = row_sums[r] * col_sums[c] / total;
            if expected > 0.0 {
                stat += (table[r][c] as f64 - expected).powi(2) / expected;
            }
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestOutcome {
        statistic: stat,
        p_value: chi.sf(stat),
    }
}

/// Chi-square independence test of two paired samples binned by their own
/// quantiles.
pub fn binned_independence(xs: &[f64], ys: &[f64], bins: usize) -> TestOutcome {
    let ex = quantile_edges(xs, bins);
    let ey = quantile_edges(ys, bins);
    let mut table = vec![vec![0u64; bins]; bins];
    for (x, y) in xs.iter().zip(ys) {
        table[bin_index(*x, &ex)][bin_index(*y, &ey)] += 1;
    }
    chi_square_independence(&table)
}
